//! Unlabeled (UA) and labeled (LA) argument detection.
//!
//! Units are answer spans, each owned by the question it answers. UA counts
//! spans aligned by [`align`]; LA additionally requires the owning questions
//! of an aligned pair to strictly match.

mod dataset;
mod stats;

use std::collections::HashSet;
use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::align::{align, align_labeled, IouThreshold, MatchResult};
use crate::grammar::{Grammar, StrictSignature};
use crate::model::{PredicateKey, Span, VerbAnnotation};

pub use dataset::{evaluate_sets, iaa_pairwise, iaa_workers, EvalReport, PredicateCounts, WorkerAgreement};
pub use stats::{cost, dataset_stats, CostReport, CostSchedule, DatasetStats, VerbCost};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("annotations describe different predicates: {0} vs {1}")]
    PredicateMismatch(PredicateKey, PredicateKey),
    #[error("nothing to aggregate")]
    Empty,
    #[error("annotation sets share no predicates")]
    Disjoint,
    #[error("predicate {0} lacks {1}")]
    MissingProvenance(PredicateKey, &'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    #[serde(rename = "UA")]
    Unlabeled,
    #[serde(rename = "LA")]
    Labeled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Unlabeled => "UA",
            Mode::Labeled => "LA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalConfig {
    pub mode: Mode,
    pub redundant: bool,
    pub aggregation: Aggregation,
    #[serde(rename = "iou_threshold")]
    pub threshold: IouThreshold,
    /// In redundant LA evaluation, an unmatched prediction is only ignored
    /// when its question also strictly matches the reference it overlaps.
    pub ignore_requires_label: bool,
    #[serde(skip)]
    pub grammar: Grammar,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: Mode::Unlabeled,
            redundant: false,
            aggregation: Aggregation::Micro,
            threshold: IouThreshold::default(),
            ignore_requires_label: true,
            grammar: Grammar::default(),
        }
    }
}

impl EvalConfig {
    pub fn new(mode: Mode) -> Self {
        EvalConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn redundant(mut self, redundant: bool) -> Self {
        self.redundant = redundant;
        self
    }

    pub fn aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Counts { tp, fp, fn_ }
    }

    pub fn is_empty(&self) -> bool {
        self.tp == 0 && self.fp == 0 && self.fn_ == 0
    }

    /// An empty prediction is perfect against an empty reference and worthless
    /// otherwise.
    pub fn precision(&self) -> BigRational {
        match self.tp + self.fp {
            0 if self.fn_ == 0 => BigRational::one(),
            0 => BigRational::zero(),
            d => ratio(self.tp, d),
        }
    }

    pub fn recall(&self) -> BigRational {
        match self.tp + self.fn_ {
            0 if self.fp == 0 => BigRational::one(),
            0 => BigRational::zero(),
            d => ratio(self.tp, d),
        }
    }

    pub fn score(&self) -> Score {
        Score::from_pr(self.precision(), self.recall())
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts::new(self.tp + rhs.tp, self.fp + rhs.fp, self.fn_ + rhs.fn_)
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), |a, b| a + b)
    }
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact precision, recall and F1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub precision: BigRational,
    pub recall: BigRational,
    pub f1: BigRational,
}

impl Score {
    pub fn from_pr(precision: BigRational, recall: BigRational) -> Self {
        let sum = &precision + &recall;
        let f1 = if sum.is_zero() {
            BigRational::zero()
        } else {
            BigRational::from_integer(BigInt::from(2)) * &precision * &recall / sum
        };
        Score { precision, recall, f1 }
    }

    pub fn p(&self) -> f64 {
        to_f64(&self.precision)
    }

    pub fn r(&self) -> f64 {
        to_f64(&self.recall)
    }

    pub fn f(&self) -> f64 {
        to_f64(&self.f1)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Percentage with one decimal, rounded half up from the exact value.
pub fn percent(r: &BigRational) -> String {
    let thousandths = r * BigRational::from_integer(BigInt::from(1000));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = (thousandths + half).floor().to_integer();
    let ten = BigInt::from(10);
    format!("{}.{}", &rounded / &ten, (&rounded % &ten).magnitude())
}

/// `{"num": "3", "den": "4", "percent": "75.0"}`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exact<'a>(pub &'a BigRational);

impl Serialize for Exact<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Exact", 3)?;
        s.serialize_field("num", &self.0.numer().to_string())?;
        s.serialize_field("den", &self.0.denom().to_string())?;
        s.serialize_field("percent", &percent(self.0))?;
        s.end()
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Score", 3)?;
        s.serialize_field("P", &Exact(&self.precision))?;
        s.serialize_field("R", &Exact(&self.recall))?;
        s.serialize_field("F1", &Exact(&self.f1))?;
        s.end()
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P {} / R {} / F1 {}",
            percent(&self.precision),
            percent(&self.recall),
            percent(&self.f1)
        )
    }
}

/// Alignment of two annotations of the same predicate, with the role
/// signature of every unit.
struct Units {
    pred: Vec<(Span, StrictSignature)>,
    gold: Vec<(Span, StrictSignature)>,
    matching: MatchResult,
}

impl Units {
    fn build(pred: &VerbAnnotation, gold: &VerbAnnotation, cfg: &EvalConfig) -> Result<Self, EvalError> {
        if !pred.same_predicate(gold) {
            return Err(EvalError::PredicateMismatch(pred.key(), gold.key()));
        }
        let units = |ann: &VerbAnnotation| -> Vec<(Span, StrictSignature)> {
            let sigs: Vec<StrictSignature> = ann
                .qa_pairs
                .iter()
                .map(|qa| cfg.grammar.signature(&qa.question, &ann.verb_forms))
                .collect();
            ann.argument_units()
                .into_iter()
                .map(|(span, qi)| (span, sigs[qi].clone()))
                .collect()
        };
        let pred = units(pred);
        let gold = units(gold);
        let ps: Vec<Span> = pred.iter().map(|u| u.0).collect();
        let gs: Vec<Span> = gold.iter().map(|u| u.0).collect();
        let matching = match cfg.mode {
            Mode::Unlabeled => align(&ps, &gs, cfg.threshold),
            Mode::Labeled => align_labeled(&ps, &gs, cfg.threshold, |p, g| pred[p].1 == gold[g].1),
        };
        Ok(Units { pred, gold, matching })
    }

    fn label_match(&self, p: usize, g: usize) -> bool {
        self.pred[p].1 == self.gold[g].1
    }

    /// Indices of predicted units counted as true positives.
    fn true_positives(&self, mode: Mode) -> HashSet<usize> {
        self.matching
            .pairs
            .iter()
            .filter(|pair| mode == Mode::Unlabeled || self.label_match(pair.pred, pair.gold))
            .map(|pair| pair.pred)
            .collect()
    }
}

/// Score a non-redundant prediction against its reference.
pub fn evaluate_verb(pred: &VerbAnnotation, gold: &VerbAnnotation, cfg: &EvalConfig) -> Result<Counts, EvalError> {
    let units = Units::build(pred, gold, cfg)?;
    let tp = units.true_positives(cfg.mode).len();
    Ok(Counts::new(tp, units.pred.len() - tp, units.gold.len() - tp))
}

/// Score a redundant prediction: unmatched predictions that still hit the
/// reference are ignored, and the remaining unmatched predictions cost one
/// false positive per overlap-connected component.
pub fn evaluate_verb_redundant(
    pred: &VerbAnnotation,
    gold: &VerbAnnotation,
    cfg: &EvalConfig,
) -> Result<Counts, EvalError> {
    let units = Units::build(pred, gold, cfg)?;
    let matched = units.true_positives(cfg.mode);
    let tp = matched.len();

    let leftover: Vec<usize> = (0..units.pred.len())
        .filter(|p| !matched.contains(p))
        .filter(|&p| {
            let span = units.pred[p].0;
            !units.gold.iter().enumerate().any(|(g, (gold_span, _))| {
                cfg.threshold.accepts(span, *gold_span)
                    && (cfg.mode == Mode::Unlabeled || !cfg.ignore_requires_label || units.label_match(p, g))
            })
        })
        .collect();

    let spans: Vec<Span> = leftover.iter().map(|&p| units.pred[p].0).collect();
    let fp = overlap_components(&spans);
    Ok(Counts::new(tp, fp, units.gold.len() - tp))
}

/// Dispatch on `cfg.redundant`.
pub fn evaluate_predicate(pred: &VerbAnnotation, gold: &VerbAnnotation, cfg: &EvalConfig) -> Result<Counts, EvalError> {
    if cfg.redundant {
        evaluate_verb_redundant(pred, gold, cfg)
    } else {
        evaluate_verb(pred, gold, cfg)
    }
}

/// Number of connected components of the span-overlap graph.
pub fn overlap_components(spans: &[Span]) -> usize {
    let mut parent: Vec<usize> = (0..spans.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = spans.len();
    for i in 0..spans.len() {
        for j in i + 1..spans.len() {
            if spans[i].overlaps(&spans[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
    }
    components
}

/// Micro: sum counts, then score. Macro: average per-predicate P and R,
/// skipping predicates with nothing on either side, then F1 of the averages.
pub fn aggregate(per_verb: &[Counts], aggregation: Aggregation) -> Result<Score, EvalError> {
    match aggregation {
        Aggregation::Micro => {
            if per_verb.is_empty() {
                return Err(EvalError::Empty);
            }
            Ok(per_verb.iter().copied().sum::<Counts>().score())
        }
        Aggregation::Macro => {
            let scored: Vec<&Counts> = per_verb.iter().filter(|c| !c.is_empty()).collect();
            if scored.is_empty() {
                return Err(EvalError::Empty);
            }
            let n = BigRational::from_integer(BigInt::from(scored.len()));
            let p = scored
                .iter()
                .map(|c| c.precision())
                .fold(BigRational::zero(), |a, b| a + b)
                / &n;
            let r = scored
                .iter()
                .map(|c| c.recall())
                .fold(BigRational::zero(), |a, b| a + b)
                / &n;
            Ok(Score::from_pr(p, r))
        }
    }
}
