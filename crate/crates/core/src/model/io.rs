//! Line-delimited JSON dataset files.
//!
//! Each line holds one verb entry:
//!
//! ```json
//! {"sentence_id": "s1", "tokens": ["..."], "verb_index": 3,
//!  "verb_forms": {"stem": "cut", "present": "cuts", "past": "cut",
//!                 "past_participle": "cut", "present_participle": "cutting"},
//!  "source": "consolidated",
//!  "qas": [{"question_string": "Who cut something?",
//!           "slots": {"wh": "Who", "aux": null, "subj": null, "verb": "cut",
//!                     "obj": "something", "prep": null, "misc": null},
//!           "answers": [{"start": 0, "end": 1}]}]}
//! ```
//!
//! The slot decomposition is authoritative; `question_string` is only parsed
//! when `slots` is missing.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{validate, AnnotationSet, QAPair, Sentence, Source, Span, ValidationReport, VerbAnnotation};
use crate::grammar::{Grammar, QuestionSlots, VerbForms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetFormat {
    /// Consolidated, non-redundant annotations.
    Gold,
    /// Raw multi-worker annotations; a QA may carry its own `source`.
    Dense,
    /// Parser predictions.
    Parser,
}

impl DatasetFormat {
    pub fn is_redundant(self) -> bool {
        !matches!(self, DatasetFormat::Gold)
    }

    fn default_source(self) -> Source {
        match self {
            DatasetFormat::Gold => Source::Consolidated,
            DatasetFormat::Dense => Source::External,
            DatasetFormat::Parser => Source::Parser,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" | "gold-jsonl" => Ok(DatasetFormat::Gold),
            "dense" | "dense-jsonl" => Ok(DatasetFormat::Dense),
            "parser" | "parser-jsonl" => Ok(DatasetFormat::Parser),
            other => Err(format!("unknown dataset format {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed record: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("{file}:{line}: sentence {sentence_id:?} is never defined with tokens")]
    DanglingSentence {
        file: String,
        line: usize,
        sentence_id: String,
    },
    #[error("{file}:{line}: sentence {sentence_id:?} redefined with different tokens")]
    ConflictingSentence {
        file: String,
        line: usize,
        sentence_id: String,
    },
    #[error("{file}:{line}: {what} out of bounds for sentence {sentence_id:?} of {len} tokens")]
    OutOfBounds {
        file: String,
        line: usize,
        sentence_id: String,
        what: String,
        len: usize,
    },
    #[error("{file}:{line}: question {question:?} has no answers")]
    EmptyAnswers {
        file: String,
        line: usize,
        question: String,
    },
}

impl LoadError {
    pub fn line(&self) -> Option<usize> {
        match self {
            LoadError::Io { .. } => None,
            LoadError::Malformed { line, .. }
            | LoadError::DanglingSentence { line, .. }
            | LoadError::ConflictingSentence { line, .. }
            | LoadError::OutOfBounds { line, .. }
            | LoadError::EmptyAnswers { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("refusing to write an invalid set ({} violations)", .0.len())]
    Invalid(ValidationReport),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WarningCode {
    UnknownField,
    UnparseableQuestion,
    QuestionMismatch,
    LowConfidence,
    IgnoredSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadWarning {
    pub file: String,
    pub line: usize,
    pub code: WarningCode,
    pub message: String,
}

impl std::fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let code = serde_json::to_value(self.code).expect("code serializes");
        write!(
            f,
            "{}:{}: warning {}: {}",
            self.file,
            self.line,
            code.as_str().unwrap_or(""),
            self.message
        )
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub set: AnnotationSet,
    pub warnings: Vec<LoadWarning>,
}

/// Verb inflections keyed by any of their forms.
///
/// Text format: one verb per line, five whitespace-separated forms
/// `stem present past past-participle present-participle`; `#` comments.
#[derive(Debug, Clone, Default)]
pub struct InflectionLexicon {
    by_form: HashMap<String, VerbForms>,
}

impl InflectionLexicon {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut by_form = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(format!("line {}: expected 5 forms, found {}", i + 1, f.len()));
            }
            let forms = VerbForms::new(f[0], f[1], f[2], f[3], f[4]);
            for form in &f {
                by_form.entry(form.to_lowercase()).or_insert_with(|| forms.clone());
            }
        }
        Ok(InflectionLexicon { by_form })
    }

    pub fn lookup(&self, word: &str) -> Option<&VerbForms> {
        self.by_form.get(&word.to_lowercase())
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: DatasetFormat,
    pub inflections: Option<InflectionLexicon>,
    pub grammar: Grammar,
}

impl LoadOptions {
    pub fn new(format: DatasetFormat) -> Self {
        LoadOptions {
            format,
            inflections: None,
            grammar: Grammar::default(),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    sentence_id: String,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    verb_index: usize,
    #[serde(default)]
    verb_forms: Option<VerbForms>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    qas: Vec<RawQa>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawQa {
    #[serde(default)]
    question_string: Option<String>,
    #[serde(default)]
    slots: Option<QuestionSlots>,
    answers: Vec<Span>,
    #[serde(default)]
    source: Option<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    sentence_id: &'a str,
    tokens: &'a [String],
    verb_index: usize,
    verb_forms: &'a VerbForms,
    source: String,
    qas: Vec<OutQa<'a>>,
}

#[derive(Serialize)]
struct OutQa<'a> {
    question_string: String,
    slots: &'a QuestionSlots,
    answers: &'a [Span],
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Loaded, LoadError> {
    load_dataset_with(path, &LoadOptions::new(format))
}

pub fn load_dataset_with(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Loaded, LoadError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(|source| LoadError::Io {
        file: name.clone(),
        source,
    })?;
    read_dataset(BufReader::new(file), &name, options)
}

struct PendingQa {
    index: usize,
    slots: Option<QuestionSlots>,
    text: Option<String>,
    answers: Vec<Span>,
}

struct Pending {
    line: usize,
    sentence_id: String,
    verb_index: usize,
    verb_forms: Option<VerbForms>,
    source: Source,
    qas: Vec<PendingQa>,
}

/// Load from any buffered reader; `name` is used in error locations.
pub fn read_dataset<R: BufRead>(reader: R, name: &str, options: &LoadOptions) -> Result<Loaded, LoadError> {
    let file = name.to_string();
    let mut warnings = Vec::new();
    let mut set = AnnotationSet::new(options.format.is_redundant());
    let mut pending: Vec<Pending> = Vec::new();
    let warning = |line: usize, code: WarningCode, message: String| LoadWarning {
        file: file.clone(),
        line,
        code,
        message,
    };
    let malformed = |line: usize, message: String| LoadError::Malformed {
        file: file.clone(),
        line,
        message,
    };

    // First pass: records, sentences, and the per-source split.
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| LoadError::Io {
            file: file.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line).map_err(|e| malformed(lineno, e.to_string()))?;

        for key in record.extra.keys() {
            warnings.push(warning(
                lineno,
                WarningCode::UnknownField,
                format!("ignoring unknown field {key:?}"),
            ));
        }

        if let Some(tokens) = record.tokens {
            if tokens.is_empty() {
                return Err(malformed(
                    lineno,
                    format!("sentence {:?} has no tokens", record.sentence_id),
                ));
            }
            match set.sentences.get(&record.sentence_id) {
                Some(existing) if existing.tokens != tokens => {
                    return Err(LoadError::ConflictingSentence {
                        file: file.clone(),
                        line: lineno,
                        sentence_id: record.sentence_id,
                    });
                }
                Some(_) => {}
                None => set.add_sentence(Sentence::new(record.sentence_id.clone(), tokens)),
            }
        }

        let record_source = record
            .source
            .as_deref()
            .map(parse_source)
            .unwrap_or_else(|| options.format.default_source());

        // One annotation per distinct source, in order of first appearance.
        let mut split = vec![Pending {
            line: lineno,
            sentence_id: record.sentence_id.clone(),
            verb_index: record.verb_index,
            verb_forms: record.verb_forms.clone(),
            source: record_source.clone(),
            qas: Vec::new(),
        }];

        for (qi, qa) in record.qas.into_iter().enumerate() {
            for key in qa.extra.keys() {
                warnings.push(warning(
                    lineno,
                    WarningCode::UnknownField,
                    format!("qa#{qi}: ignoring unknown field {key:?}"),
                ));
            }
            if qa.answers.is_empty() {
                return Err(LoadError::EmptyAnswers {
                    file: file.clone(),
                    line: lineno,
                    question: qa
                        .question_string
                        .or_else(|| qa.slots.map(|s| s.to_string()))
                        .unwrap_or_default(),
                });
            }
            if let Some(span) = qa.answers.iter().find(|s| s.is_empty()) {
                return Err(malformed(lineno, format!("qa#{qi}: empty answer span {span}")));
            }
            if qa.slots.is_none() && qa.question_string.is_none() {
                return Err(malformed(lineno, format!("qa#{qi}: neither slots nor question_string")));
            }

            let source = match qa.source.as_deref() {
                Some(s) if options.format == DatasetFormat::Dense => parse_source(s),
                Some(s) => {
                    warnings.push(warning(
                        lineno,
                        WarningCode::IgnoredSource,
                        format!("qa#{qi}: per-question source {s:?} only applies to dense files"),
                    ));
                    record_source.clone()
                }
                None => record_source.clone(),
            };
            let target = match split.iter().position(|a| a.source == source) {
                Some(i) => i,
                None => {
                    split.push(Pending {
                        source,
                        qas: Vec::new(),
                        ..split[0].clone_header()
                    });
                    split.len() - 1
                }
            };
            split[target].qas.push(PendingQa {
                index: qi,
                slots: qa.slots,
                text: qa.question_string,
                answers: qa.answers,
            });
        }

        // The record-level annotation is dropped when every QA moved to a
        // per-question source.
        if split.len() > 1 && split[0].qas.is_empty() {
            split.remove(0);
        }
        pending.extend(split);
    }

    // Second pass: resolve sentences, bounds, inflections and questions.
    for p in pending {
        let line = p.line;
        let Some(sentence) = set.sentences.get(&p.sentence_id) else {
            return Err(LoadError::DanglingSentence {
                file: file.clone(),
                line,
                sentence_id: p.sentence_id,
            });
        };
        let n = sentence.len();
        let out_of_bounds = |what: String| LoadError::OutOfBounds {
            file: file.clone(),
            line,
            sentence_id: p.sentence_id.clone(),
            what,
            len: n,
        };
        if p.verb_index >= n {
            return Err(out_of_bounds(format!("verb index {}", p.verb_index)));
        }
        for qa in &p.qas {
            if let Some(span) = qa.answers.iter().find(|s| s.end > n) {
                return Err(out_of_bounds(format!("qa#{}: answer span {span}", qa.index)));
            }
        }

        let verb_forms = match p.verb_forms {
            Some(forms) => forms,
            None => {
                let word = &sentence.tokens[p.verb_index];
                match options.inflections.as_ref().and_then(|lex| lex.lookup(word)) {
                    Some(forms) => forms.clone(),
                    None => {
                        warnings.push(warning(
                            line,
                            WarningCode::LowConfidence,
                            format!("verb_forms missing for {word:?}; guessed from suffixes"),
                        ));
                        VerbForms::guess(word)
                    }
                }
            }
        };

        let mut qa_pairs = Vec::with_capacity(p.qas.len());
        for qa in p.qas {
            let qi = qa.index;
            let question = match qa.slots {
                Some(slots) => {
                    let slots = slots.normalized();
                    if !slots.is_valid() {
                        return Err(malformed(line, format!("qa#{qi}: WH and VERB slots must be non-empty")));
                    }
                    if let Some(text) = &qa.text {
                        let rendered = slots.to_string();
                        if normalize_question(text) != normalize_question(&rendered) {
                            warnings.push(warning(
                                line,
                                WarningCode::QuestionMismatch,
                                format!(
                                    "qa#{qi}: question string {text:?} differs from slots {rendered:?}; using slots"
                                ),
                            ));
                        }
                    }
                    slots
                }
                None => {
                    let text = qa.text.unwrap_or_default();
                    match options.grammar.parse(&text, &verb_forms) {
                        Ok(slots) => slots,
                        Err(e) => {
                            warnings.push(warning(
                                line,
                                WarningCode::UnparseableQuestion,
                                format!("qa#{qi}: {e}; question dropped"),
                            ));
                            continue;
                        }
                    }
                }
            };
            qa_pairs.push(QAPair::new(question, qa.answers));
        }

        set.annotations.push(VerbAnnotation {
            sentence_id: p.sentence_id,
            verb_index: p.verb_index,
            verb_forms,
            source: p.source,
            qa_pairs,
        });
    }

    Ok(Loaded { set, warnings })
}

impl Pending {
    fn clone_header(&self) -> Pending {
        Pending {
            line: self.line,
            sentence_id: self.sentence_id.clone(),
            verb_index: self.verb_index,
            verb_forms: self.verb_forms.clone(),
            source: self.source.clone(),
            qas: Vec::new(),
        }
    }
}

fn parse_source(s: &str) -> Source {
    Source::from_str(s).unwrap_or_else(|e| match e {})
}

fn normalize_question(q: &str) -> String {
    let body = q.trim().trim_end_matches('?');
    body.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Write the set as line-delimited records, one per annotation.
pub fn write_dataset(set: &AnnotationSet, path: impl AsRef<Path>) -> Result<(), WriteError> {
    let report = validate(set);
    if !report.is_empty() {
        return Err(WriteError::Invalid(report));
    }
    let mut out = BufWriter::new(File::create(path)?);
    write_records(set, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Like [`write_dataset`] for an arbitrary writer.
pub fn write_dataset_to<W: Write>(set: &AnnotationSet, out: &mut W) -> Result<(), WriteError> {
    let report = validate(set);
    if !report.is_empty() {
        return Err(WriteError::Invalid(report));
    }
    write_records(set, out)?;
    Ok(())
}

fn write_records<W: Write>(set: &AnnotationSet, out: &mut W) -> std::io::Result<()> {
    for ann in &set.annotations {
        let sentence = &set.sentences[&ann.sentence_id];
        let record = OutRecord {
            sentence_id: &ann.sentence_id,
            tokens: &sentence.tokens,
            verb_index: ann.verb_index,
            verb_forms: &ann.verb_forms,
            source: ann.source.to_string(),
            qas: ann
                .qa_pairs
                .iter()
                .map(|qa| OutQa {
                    question_string: qa.question.to_string(),
                    slots: &qa.question,
                    answers: &qa.answers,
                })
                .collect(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
