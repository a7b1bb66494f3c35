//! Agreement between QA-SRL arguments and PropBank-style reference spans.
//!
//! Reference file: tab-separated `sentence_id  pred_index  label  start  end`,
//! one argument per line. A predicate without arguments is written with the
//! label `-` and no span columns (or `-` in both). Blank lines and lines
//! starting with `#` are skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num::{BigInt, BigRational, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::align::{align, IouThreshold};
use crate::metrics::Score;
use crate::model::{AnnotationSet, PredicateKey, Span};

const ADJUNCTS: &[&str] = &[
    "ADJ", "ADV", "CAU", "COM", "CXN", "DIR", "DIS", "DSP", "EXT", "GOL", "LOC", "LVB", "MNR", "MOD", "NEG", "PNC",
    "PRD", "PRP", "PRR", "PRX", "REC", "TM", "TMP",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleClass {
    Core,
    Adjunct,
}

/// A validated PropBank argument label such as `A0`, `AM-TMP` or `R-A1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PropBankLabel(String);

impl PropBankLabel {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Label without a continuation (`C-`) or reference (`R-`) prefix.
    pub fn base(&self) -> &str {
        self.0
            .strip_prefix("C-")
            .or_else(|| self.0.strip_prefix("R-"))
            .unwrap_or(&self.0)
    }

    pub fn class(&self) -> RoleClass {
        match self.base() {
            "A0" | "A1" | "A2" | "A3" | "A4" | "A5" => RoleClass::Core,
            _ => RoleClass::Adjunct,
        }
    }
}

impl FromStr for PropBankLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = PropBankLabel(s.trim().to_string());
        let base = label.base();
        let known = matches!(base, "A0" | "A1" | "A2" | "A3" | "A4" | "A5" | "AA")
            || base.strip_prefix("AM-").is_some_and(|m| ADJUNCTS.contains(&m))
            || base == "AM";
        if known {
            Ok(label)
        } else {
            Err(format!("unknown PropBank label {s:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropBankArg {
    pub label: PropBankLabel,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropBankFrame {
    pub sentence_id: String,
    pub predicate: usize,
    pub args: Vec<PropBankArg>,
}

impl PropBankFrame {
    pub fn key(&self) -> PredicateKey {
        PredicateKey::new(self.sentence_id.clone(), self.predicate)
    }
}

#[derive(Debug, Error)]
pub enum PropBankError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("{file}:{line}: {message}")]
    UnknownLabel { file: String, line: usize, message: String },
    #[error("no predicate is annotated in both QA-SRL and PropBank")]
    NoSharedPredicates,
}

pub fn load_propbank(path: impl AsRef<Path>) -> Result<Vec<PropBankFrame>, PropBankError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| PropBankError::Io {
        file: name.clone(),
        source,
    })?;
    parse_propbank(&text, &name)
}

/// Frames in order of first appearance.
pub fn parse_propbank(text: &str, name: &str) -> Result<Vec<PropBankFrame>, PropBankError> {
    let mut frames: Vec<PropBankFrame> = Vec::new();
    let mut index: BTreeMap<PredicateKey, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |message: String| PropBankError::Malformed {
            file: name.to_string(),
            line,
            message,
        };
        let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if cols.len() != 3 && cols.len() != 5 {
            return Err(malformed(format!(
                "expected 5 tab-separated columns, found {}",
                cols.len()
            )));
        }
        let predicate: usize = cols[1]
            .parse()
            .map_err(|_| malformed(format!("bad predicate index {:?}", cols[1])))?;
        let key = PredicateKey::new(cols[0], predicate);
        let fi = *index.entry(key).or_insert_with(|| {
            frames.push(PropBankFrame {
                sentence_id: cols[0].to_string(),
                predicate,
                args: Vec::new(),
            });
            frames.len() - 1
        });

        let bare = cols[2] == "-" && cols.get(3).is_none_or(|c| *c == "-") && cols.get(4).is_none_or(|c| *c == "-");
        if bare {
            continue;
        }
        if cols.len() != 5 {
            return Err(malformed("argument lines need start and end columns".into()));
        }
        let label: PropBankLabel = cols[2].parse().map_err(|message| PropBankError::UnknownLabel {
            file: name.to_string(),
            line,
            message,
        })?;
        let start: usize = cols[3]
            .parse()
            .map_err(|_| malformed(format!("bad start {:?}", cols[3])))?;
        let end: usize = cols[4]
            .parse()
            .map_err(|_| malformed(format!("bad end {:?}", cols[4])))?;
        if start >= end {
            return Err(malformed(format!("empty span [{start},{end})")));
        }
        frames[fi].args.push(PropBankArg {
            label,
            span: Span::new(start, end),
        });
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassFilter {
    All,
    Core,
    Adjunct,
}

impl ClassFilter {
    fn admits(self, class: RoleClass) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Core => class == RoleClass::Core,
            ClassFilter::Adjunct => class == RoleClass::Adjunct,
        }
    }
}

impl FromStr for ClassFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(ClassFilter::All),
            "core" => Ok(ClassFilter::Core),
            "adjunct" | "adj" => Ok(ClassFilter::Adjunct),
            other => Err(format!("unknown role class {other:?}")),
        }
    }
}

/// QA-SRL side of the class partition: who/what questions are core.
pub fn question_class(wh: &str) -> RoleClass {
    match wh.trim().to_lowercase().as_str() {
        "who" | "what" => RoleClass::Core,
        _ => RoleClass::Adjunct,
    }
}

/// Matches for one predicate under one class filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PredicateAgreement {
    /// QA spans of the class matched to some PropBank argument.
    pub precision_hits: usize,
    pub qa_spans: usize,
    /// PropBank arguments of the class matched to some QA span.
    pub recall_hits: usize,
    pub pb_args: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropBankComparison {
    pub filter: ClassFilter,
    pub predicates: usize,
    pub per_predicate: Vec<(String, PredicateAgreement)>,
    pub score: Score,
}

/// Per predicate and class: precision aligns the class's QA spans against all
/// PropBank arguments, recall aligns all QA spans against the class's
/// PropBank arguments. Both are macro-averaged over the predicates where the
/// respective side is non-empty.
pub fn compare_propbank(
    qasrl: &AnnotationSet,
    frames: &[PropBankFrame],
    filter: ClassFilter,
    threshold: IouThreshold,
) -> Result<PropBankComparison, PropBankError> {
    let qa_by = qasrl.merged_by_predicate();
    let pb_by: BTreeMap<PredicateKey, &PropBankFrame> = frames.iter().map(|f| (f.key(), f)).collect();
    let shared: BTreeSet<&PredicateKey> = qa_by.keys().filter(|k| pb_by.contains_key(*k)).collect();
    if shared.is_empty() {
        return Err(PropBankError::NoSharedPredicates);
    }

    let mut per_predicate = Vec::with_capacity(shared.len());
    for key in shared {
        let ann = &qa_by[key];
        let frame = pb_by[key];
        let qa_units: Vec<(Span, RoleClass)> = ann
            .qa_pairs
            .iter()
            .flat_map(|qa| {
                let class = question_class(&qa.question.wh);
                qa.answers.iter().map(move |&s| (s, class))
            })
            .collect();
        let qa_all: Vec<Span> = qa_units.iter().map(|u| u.0).collect();
        let qa_class: Vec<Span> = qa_units.iter().filter(|u| filter.admits(u.1)).map(|u| u.0).collect();
        let pb_all: Vec<Span> = frame.args.iter().map(|a| a.span).collect();
        let pb_class: Vec<Span> = frame
            .args
            .iter()
            .filter(|a| filter.admits(a.label.class()))
            .map(|a| a.span)
            .collect();

        per_predicate.push((
            key.to_string(),
            PredicateAgreement {
                precision_hits: align(&qa_class, &pb_all, threshold).len(),
                qa_spans: qa_class.len(),
                recall_hits: align(&qa_all, &pb_class, threshold).len(),
                pb_args: pb_class.len(),
            },
        ));
    }

    let mean = |pairs: Vec<(usize, usize)>| -> BigRational {
        if pairs.is_empty() {
            return BigRational::zero();
        }
        let n = pairs.len();
        let sum = pairs
            .into_iter()
            .map(|(hit, total)| BigRational::new(BigInt::from(hit), BigInt::from(total)))
            .fold(BigRational::zero(), |a, b| a + b);
        sum / BigRational::from_integer(BigInt::from(n))
    };
    let precision = mean(
        per_predicate
            .iter()
            .filter(|(_, a)| a.qa_spans > 0)
            .map(|(_, a)| (a.precision_hits, a.qa_spans))
            .collect(),
    );
    let recall = mean(
        per_predicate
            .iter()
            .filter(|(_, a)| a.pb_args > 0)
            .map(|(_, a)| (a.recall_hits, a.pb_args))
            .collect(),
    );

    Ok(PropBankComparison {
        filter,
        predicates: per_predicate.len(),
        per_predicate,
        score: Score::from_pr(precision, recall),
    })
}
