//! Annotation domain types shared by every other module.

mod io;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grammar::{QuestionSlots, VerbForms};

pub use io::{
    load_dataset, load_dataset_with, read_dataset, write_dataset, write_dataset_to, DatasetFormat, InflectionLexicon,
    LoadError, LoadOptions, LoadWarning, Loaded, WarningCode, WriteError,
};
pub use validate::{validate, ValidationReport, Violation, ViolationCode, ViolationLocation};

/// A pre-tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        Sentence { id: id.into(), tokens }
    }

    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        Sentence::new(id, text.split_whitespace().map(str::to_string).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self, span: Span) -> String {
        self.tokens[span.start..span.end.min(self.tokens.len())].join(" ")
    }
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn intersection_len(&self, other: &Span) -> usize {
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.intersection_len(other) > 0
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: QuestionSlots,
    pub answers: Vec<Span>,
}

impl QAPair {
    pub fn new(question: QuestionSlots, answers: Vec<Span>) -> Self {
        QAPair { question, answers }
    }
}

/// Who produced an annotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Worker(String),
    Consolidated,
    Parser,
    External,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Worker(id) => write!(f, "worker:{id}"),
            Source::Consolidated => f.write_str("consolidated"),
            Source::Parser => f.write_str("parser"),
            Source::External => f.write_str("external"),
        }
    }
}

impl FromStr for Source {
    type Err = std::convert::Infallible;

    /// Anything that is not a reserved tag names a worker.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "consolidated" => Source::Consolidated,
            "parser" => Source::Parser,
            "external" => Source::External,
            other => Source::Worker(other.strip_prefix("worker:").unwrap_or(other).to_string()),
        })
    }
}

/// Identity of a predicate: a verb occurrence in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateKey {
    pub sentence_id: String,
    pub verb_index: usize,
}

impl PredicateKey {
    pub fn new(sentence_id: impl Into<String>, verb_index: usize) -> Self {
        PredicateKey {
            sentence_id: sentence_id.into(),
            verb_index,
        }
    }
}

impl fmt::Display for PredicateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sentence_id, self.verb_index)
    }
}

/// All QA pairs for one predicate from one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbAnnotation {
    pub sentence_id: String,
    pub verb_index: usize,
    pub verb_forms: VerbForms,
    pub source: Source,
    pub qa_pairs: Vec<QAPair>,
}

impl VerbAnnotation {
    pub fn key(&self) -> PredicateKey {
        PredicateKey::new(self.sentence_id.clone(), self.verb_index)
    }

    pub fn same_predicate(&self, other: &VerbAnnotation) -> bool {
        self.sentence_id == other.sentence_id && self.verb_index == other.verb_index
    }

    pub fn question_count(&self) -> usize {
        self.qa_pairs.len()
    }

    /// Every answer span with the index of the QA pair that owns it.
    pub fn argument_units(&self) -> Vec<(Span, usize)> {
        self.qa_pairs
            .iter()
            .enumerate()
            .flat_map(|(qi, qa)| qa.answers.iter().map(move |&s| (s, qi)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotationSet {
    pub sentences: BTreeMap<String, Sentence>,
    pub annotations: Vec<VerbAnnotation>,
    /// True for raw multi-worker or parser output; false for consolidated gold.
    pub redundant: bool,
}

impl AnnotationSet {
    pub fn new(redundant: bool) -> Self {
        AnnotationSet {
            redundant,
            ..Default::default()
        }
    }

    pub fn add_sentence(&mut self, sentence: Sentence) {
        self.sentences.insert(sentence.id.clone(), sentence);
    }

    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        self.sentences.get(id)
    }

    /// Annotations grouped by predicate, in sorted predicate order. Within a
    /// predicate, file order is kept.
    pub fn by_predicate(&self) -> BTreeMap<PredicateKey, Vec<&VerbAnnotation>> {
        let mut out: BTreeMap<PredicateKey, Vec<&VerbAnnotation>> = BTreeMap::new();
        for ann in &self.annotations {
            out.entry(ann.key()).or_default().push(ann);
        }
        out
    }

    /// One annotation per predicate; redundant annotations for the same
    /// predicate are concatenated in file order.
    pub fn merged_by_predicate(&self) -> BTreeMap<PredicateKey, VerbAnnotation> {
        self.by_predicate()
            .into_iter()
            .map(|(key, anns)| {
                let mut merged = anns[0].clone();
                for extra in &anns[1..] {
                    merged.qa_pairs.extend(extra.qa_pairs.iter().cloned());
                }
                (key, merged)
            })
            .collect()
    }
}
