//! Machine support for merging two workers' annotations of one predicate.
//!
//! [`propose`] groups the two QA sets by role, unions the answers and flags
//! everything a human consolidator has to decide. Nothing is resolved
//! automatically. [`validate_consolidation`] checks a finished consolidation
//! against its two sources.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::grammar::{Grammar, RelaxedKey, StrictSignature};
use crate::model::{PredicateKey, QAPair, Sentence, Span, VerbAnnotation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsolidationError {
    #[error("annotations describe different predicates: {0} vs {1}")]
    PredicateMismatch(PredicateKey, PredicateKey),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConflictKind {
    AnswerOverlap,
    QuestionVariant,
    Singleton,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictKind::AnswerOverlap => "ANSWER_OVERLAP",
            ConflictKind::QuestionVariant => "QUESTION_VARIANT",
            ConflictKind::Singleton => "SINGLETON",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "key", rename_all = "lowercase")]
pub enum GroupKey {
    Strict(StrictSignature),
    /// Several signatures sharing WH, SUBJ, OBJ and voice.
    Variant(RelaxedKey),
}

/// A source QA; `side` is 0 for the first annotation and 1 for the second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourcedQa {
    pub side: usize,
    pub index: usize,
    pub question: String,
    pub qa: QAPair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProposalGroup {
    pub key: GroupKey,
    pub qas: Vec<SourcedQa>,
    /// Union of the source answers in order of first appearance.
    pub answers: Vec<Span>,
    pub flags: Vec<ConflictKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitSuggestion {
    pub overlapping: [Span; 2],
    pub pieces: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub group: usize,
    pub details: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSuggestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsolidationProposal {
    pub predicate: String,
    pub groups: Vec<ProposalGroup>,
    pub conflicts: Vec<Conflict>,
}

impl ConsolidationProposal {
    /// A draft consolidation, available only when nothing needs a decision.
    pub fn merged_qas(&self) -> Option<Vec<QAPair>> {
        if !self.conflicts.is_empty() {
            return None;
        }
        Some(
            self.groups
                .iter()
                .map(|g| QAPair::new(g.qas[0].qa.question.clone(), g.answers.clone()))
                .collect(),
        )
    }

    pub fn has(&self, kind: ConflictKind) -> bool {
        self.conflicts.iter().any(|c| c.kind == kind)
    }

    /// Human-readable review sheet.
    pub fn summary(&self, sentence: &Sentence) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== {} :: {}", self.predicate, sentence.tokens.join(" "));
        for (gi, group) in self.groups.iter().enumerate() {
            let flags: Vec<String> = group.flags.iter().map(ToString::to_string).collect();
            let questions: Vec<String> = group
                .qas
                .iter()
                .map(|q| format!("A{}: {}", q.side + 1, q.question))
                .collect();
            let answers: Vec<String> = group.answers.iter().map(|&s| sentence.text(s)).collect();
            let _ = writeln!(
                out,
                "  #{gi} [{}] {} => {}",
                flags.join(","),
                questions.join(" ; "),
                answers.join(" | ")
            );
            for c in self.conflicts.iter().filter(|c| c.group == gi) {
                let _ = write!(out, "     {}: {}", c.kind, c.details);
                if let Some(split) = &c.split {
                    let pieces: Vec<String> = split.pieces.iter().map(|&s| sentence.text(s)).collect();
                    let _ = write!(out, " -> split: {}", pieces.join(" | "));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

fn trim_punctuation(mut span: Span, sentence: &Sentence) -> Option<Span> {
    while span.start < span.end && is_punctuation(&sentence.tokens[span.start]) {
        span.start += 1;
    }
    while span.end > span.start && is_punctuation(&sentence.tokens[span.end - 1]) {
        span.end -= 1;
    }
    (!span.is_empty()).then_some(span)
}

/// Split two overlapping answers into non-overlapping pieces: the shorter
/// answer, plus what remains of the longer one on either side of it, with
/// punctuation and brackets trimmed from every piece.
pub fn split_overlap(a: Span, b: Span, sentence: &Sentence) -> Vec<Span> {
    let (longer, shorter) = if (a.len(), std::cmp::Reverse(a.start)) >= (b.len(), std::cmp::Reverse(b.start)) {
        (a, b)
    } else {
        (b, a)
    };
    let mut pieces = vec![shorter];
    if longer.start < shorter.start {
        pieces.push(Span::new(longer.start, shorter.start.min(longer.end)));
    }
    if shorter.end < longer.end {
        pieces.push(Span::new(shorter.end.max(longer.start), longer.end));
    }
    let mut out: Vec<Span> = pieces
        .into_iter()
        .filter_map(|p| trim_punctuation(p, sentence))
        .collect();
    out.sort();
    out.dedup();
    out
}

struct Entry {
    side: usize,
    index: usize,
    qa: QAPair,
    signature: StrictSignature,
}

/// Group the QAs of two single-worker annotations into a consolidation
/// proposal.
pub fn propose(
    a1: &VerbAnnotation,
    a2: &VerbAnnotation,
    sentence: &Sentence,
    grammar: &Grammar,
) -> Result<ConsolidationProposal, ConsolidationError> {
    if !a1.same_predicate(a2) {
        return Err(ConsolidationError::PredicateMismatch(a1.key(), a2.key()));
    }
    let entries: Vec<Entry> = [a1, a2]
        .iter()
        .enumerate()
        .flat_map(|(side, ann)| {
            ann.qa_pairs.iter().enumerate().map(move |(index, qa)| Entry {
                side,
                index,
                qa: qa.clone(),
                signature: grammar.signature(&qa.question, &ann.verb_forms),
            })
        })
        .collect();

    // Strict groups in order of first appearance.
    let mut strict_order: Vec<StrictSignature> = Vec::new();
    let mut strict_members: BTreeMap<StrictSignature, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        strict_members
            .entry(e.signature.clone())
            .or_insert_with(|| {
                strict_order.push(e.signature.clone());
                Vec::new()
            })
            .push(i);
    }

    // A relaxed key becomes one variant group when both sides use it but
    // with different signatures.
    let mut relaxed: BTreeMap<RelaxedKey, [Vec<StrictSignature>; 2]> = BTreeMap::new();
    for e in &entries {
        let sides = relaxed.entry(e.signature.relaxed()).or_default();
        if !sides[e.side].contains(&e.signature) {
            sides[e.side].push(e.signature.clone());
        }
    }
    let is_variant = |key: &RelaxedKey| -> bool {
        let [s0, s1] = &relaxed[key];
        !s0.is_empty() && !s1.is_empty() && {
            let mut a = s0.clone();
            let mut b = s1.clone();
            a.sort();
            b.sort();
            a != b
        }
    };

    let mut groups: Vec<(GroupKey, Vec<usize>)> = Vec::new();
    let mut variant_slot: BTreeMap<RelaxedKey, usize> = BTreeMap::new();
    for sig in &strict_order {
        let members = &strict_members[sig];
        let rk = sig.relaxed();
        if is_variant(&rk) {
            match variant_slot.get(&rk) {
                Some(&g) => groups[g].1.extend(members.iter().copied()),
                None => {
                    variant_slot.insert(rk.clone(), groups.len());
                    groups.push((GroupKey::Variant(rk), members.clone()));
                }
            }
        } else {
            groups.push((GroupKey::Strict(sig.clone()), members.clone()));
        }
    }

    let mut out_groups = Vec::with_capacity(groups.len());
    let mut conflicts = Vec::new();
    for (gi, (key, mut members)) in groups.into_iter().enumerate() {
        members.sort_unstable();
        let mut answers: Vec<Span> = Vec::new();
        for &m in &members {
            for &s in &entries[m].qa.answers {
                if !answers.contains(&s) {
                    answers.push(s);
                }
            }
        }
        let mut flags = Vec::new();

        if let GroupKey::Variant(_) = &key {
            flags.push(ConflictKind::QuestionVariant);
            let mut questions: Vec<String> = members.iter().map(|&m| entries[m].qa.question.to_string()).collect();
            questions.dedup();
            conflicts.push(Conflict {
                kind: ConflictKind::QuestionVariant,
                group: gi,
                details: format!("choose among {}", questions.join(" / ")),
                split: None,
            });
        }

        let mut overlap_found = false;
        for i in 0..answers.len() {
            for j in i + 1..answers.len() {
                if answers[i].overlaps(&answers[j]) {
                    overlap_found = true;
                    conflicts.push(Conflict {
                        kind: ConflictKind::AnswerOverlap,
                        group: gi,
                        details: format!(
                            "{:?} overlaps {:?}",
                            sentence.text(answers[i]),
                            sentence.text(answers[j])
                        ),
                        split: Some(SplitSuggestion {
                            overlapping: [answers[i], answers[j]],
                            pieces: split_overlap(answers[i], answers[j], sentence),
                        }),
                    });
                }
            }
        }
        if overlap_found {
            flags.push(ConflictKind::AnswerOverlap);
        }

        let first_side = entries[members[0]].side;
        if members.iter().all(|&m| entries[m].side == first_side) {
            flags.push(ConflictKind::Singleton);
            conflicts.push(Conflict {
                kind: ConflictKind::Singleton,
                group: gi,
                details: format!("only A{} asked this; kept", first_side + 1),
                split: None,
            });
        }
        flags.sort();

        out_groups.push(ProposalGroup {
            key,
            qas: members
                .iter()
                .map(|&m| SourcedQa {
                    side: entries[m].side,
                    index: entries[m].index,
                    question: entries[m].qa.question.to_string(),
                    qa: entries[m].qa.clone(),
                })
                .collect(),
            answers,
            flags,
        });
    }

    Ok(ConsolidationProposal {
        predicate: a1.key().to_string(),
        groups: out_groups,
        conflicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    NovelRole,
    DuplicateRole,
    OverlappingAnswers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub qa: usize,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ConsolidationReport {
    pub predicate: String,
    /// Invariant violations.
    pub violations: Vec<Finding>,
    /// Allowed but worth a look.
    pub notes: Vec<Finding>,
}

impl ConsolidationReport {
    pub fn novel_roles(&self) -> usize {
        self.notes.iter().filter(|n| n.kind == FindingKind::NovelRole).count()
    }
}

pub fn validate_consolidation(
    consolidated: &VerbAnnotation,
    sources: [&VerbAnnotation; 2],
    grammar: &Grammar,
) -> Result<ConsolidationReport, ConsolidationError> {
    for s in sources {
        if !s.same_predicate(consolidated) {
            return Err(ConsolidationError::PredicateMismatch(consolidated.key(), s.key()));
        }
    }
    let source_keys: Vec<RelaxedKey> = sources
        .iter()
        .flat_map(|ann| {
            ann.qa_pairs
                .iter()
                .map(|qa| grammar.signature(&qa.question, &ann.verb_forms).relaxed())
        })
        .collect();

    let mut report = ConsolidationReport {
        predicate: consolidated.key().to_string(),
        ..Default::default()
    };
    let mut seen: BTreeMap<StrictSignature, usize> = BTreeMap::new();
    for (qi, qa) in consolidated.qa_pairs.iter().enumerate() {
        let sig = grammar.signature(&qa.question, &consolidated.verb_forms);
        if !source_keys.contains(&sig.relaxed()) {
            report.notes.push(Finding {
                kind: FindingKind::NovelRole,
                qa: qi,
                details: format!("{:?} has no counterpart in either source", qa.question.to_string()),
            });
        }
        if let Some(prev) = seen.insert(sig, qi) {
            report.violations.push(Finding {
                kind: FindingKind::DuplicateRole,
                qa: qi,
                details: format!("same role as qa#{prev}"),
            });
        }
        for i in 0..qa.answers.len() {
            for j in i + 1..qa.answers.len() {
                if qa.answers[i].overlaps(&qa.answers[j]) {
                    report.violations.push(Finding {
                        kind: FindingKind::OverlappingAnswers,
                        qa: qi,
                        details: format!("answers {} and {} overlap", qa.answers[i], qa.answers[j]),
                    });
                }
            }
        }
    }
    Ok(report)
}
