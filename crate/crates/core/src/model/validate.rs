use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::{AnnotationSet, PredicateKey};
use crate::grammar::default_grammar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptyTokens,
    DanglingSentence,
    VerbIndexOutOfBounds,
    SpanOutOfBounds,
    EmptySpan,
    EmptyAnswers,
    InvalidSlots,
    OverlappingAnswers,
    DuplicateRole,
    DuplicatePredicate,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("code serializes");
        f.write_str(s.as_str().unwrap_or("UNKNOWN"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationLocation {
    pub sentence_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verb_index: Option<usize>,
    /// Position of the annotation in the set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qa: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<usize>,
}

impl fmt::Display for ViolationLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sentence_id)?;
        if let Some(v) = self.verb_index {
            write!(f, ":{v}")?;
        }
        if let Some(q) = self.qa {
            write!(f, " qa#{q}")?;
        }
        if let Some(a) = self.answer {
            write!(f, " answer#{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub location: ViolationLocation,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn count(&self, code: ViolationCode) -> usize {
        self.violations.iter().filter(|v| v.code == code).count()
    }

    pub(crate) fn push(&mut self, code: ViolationCode, location: ViolationLocation, message: String) {
        self.violations.push(Violation {
            code,
            location,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}\t{}\t{}", v.code, v.location, v.message)?;
        }
        Ok(())
    }
}

/// Check every structural invariant of the set. Consolidation invariants
/// (no overlapping answers, no duplicate roles, one annotation per
/// predicate) apply only to non-redundant sets.
pub fn validate(set: &AnnotationSet) -> ValidationReport {
    let mut report = ValidationReport::default();
    let grammar = default_grammar();

    for (id, sentence) in &set.sentences {
        if sentence.tokens.is_empty() {
            report.push(
                ViolationCode::EmptyTokens,
                ViolationLocation {
                    sentence_id: id.clone(),
                    verb_index: None,
                    annotation: None,
                    qa: None,
                    answer: None,
                },
                "sentence has no tokens".into(),
            );
        }
    }

    let mut seen_predicates: HashMap<PredicateKey, usize> = HashMap::new();

    for (ai, ann) in set.annotations.iter().enumerate() {
        let loc = |qa: Option<usize>, answer: Option<usize>| ViolationLocation {
            sentence_id: ann.sentence_id.clone(),
            verb_index: Some(ann.verb_index),
            annotation: Some(ai),
            qa,
            answer,
        };

        let Some(sentence) = set.sentences.get(&ann.sentence_id) else {
            report.push(
                ViolationCode::DanglingSentence,
                loc(None, None),
                format!("unknown sentence {:?}", ann.sentence_id),
            );
            continue;
        };
        let n = sentence.len();

        if ann.verb_index >= n {
            report.push(
                ViolationCode::VerbIndexOutOfBounds,
                loc(None, None),
                format!("verb index {} outside sentence of {n} tokens", ann.verb_index),
            );
        }

        if !set.redundant {
            if let Some(first) = seen_predicates.insert(ann.key(), ai) {
                report.push(
                    ViolationCode::DuplicatePredicate,
                    loc(None, None),
                    format!("predicate already annotated by annotation #{first}"),
                );
            }
        }

        let mut signatures = BTreeMap::new();
        for (qi, qa) in ann.qa_pairs.iter().enumerate() {
            if !qa.question.is_valid() {
                report.push(
                    ViolationCode::InvalidSlots,
                    loc(Some(qi), None),
                    "WH and VERB slots must be non-empty".into(),
                );
            }
            if qa.answers.is_empty() {
                report.push(
                    ViolationCode::EmptyAnswers,
                    loc(Some(qi), None),
                    format!("question {:?} has no answers", qa.question.to_string()),
                );
            }
            for (si, span) in qa.answers.iter().enumerate() {
                if span.is_empty() {
                    report.push(
                        ViolationCode::EmptySpan,
                        loc(Some(qi), Some(si)),
                        format!("empty span {span}"),
                    );
                } else if span.end > n {
                    report.push(
                        ViolationCode::SpanOutOfBounds,
                        loc(Some(qi), Some(si)),
                        format!("span {span} outside sentence of {n} tokens"),
                    );
                }
            }
            if set.redundant {
                continue;
            }
            for i in 0..qa.answers.len() {
                for j in i + 1..qa.answers.len() {
                    if qa.answers[i].overlaps(&qa.answers[j]) {
                        report.push(
                            ViolationCode::OverlappingAnswers,
                            loc(Some(qi), Some(j)),
                            format!("answer {} overlaps answer {}", qa.answers[j], qa.answers[i]),
                        );
                    }
                }
            }
            if qa.question.is_valid() {
                let sig = grammar.signature(&qa.question, &ann.verb_forms);
                if let Some(prev) = signatures.insert(sig.clone(), qi) {
                    report.push(
                        ViolationCode::DuplicateRole,
                        loc(Some(qi), None),
                        format!("same role signature {sig} as qa#{prev}"),
                    );
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_question, VerbForms};
    use crate::model::{QAPair, Sentence, Source, Span, VerbAnnotation};

    fn identify() -> VerbForms {
        VerbForms::new("identify", "identifies", "identified", "identified", "identifying")
    }

    fn usgs_set(questions: &[(&str, Vec<Span>)]) -> AnnotationSet {
        let mut set = AnnotationSet::new(false);
        set.add_sentence(Sentence::from_text(
            "s1",
            "The U.S. Geological Survey ( USGS ) identified the quake near Anchorage .",
        ));
        set.annotations.push(VerbAnnotation {
            sentence_id: "s1".into(),
            verb_index: 7,
            verb_forms: identify(),
            source: Source::Consolidated,
            qa_pairs: questions
                .iter()
                .map(|(q, a)| QAPair::new(parse_question(q, &identify()).unwrap(), a.clone()))
                .collect(),
        });
        set
    }

    #[test]
    fn valid_gold_has_empty_report() {
        let set = usgs_set(&[
            ("Who identified something?", vec![Span::new(0, 4), Span::new(5, 6)]),
            ("What did someone identify?", vec![Span::new(8, 10)]),
        ]);
        assert!(validate(&set).is_empty());
    }

    #[test]
    fn duplicated_role_is_reported() {
        let set = usgs_set(&[
            ("Who identified something?", vec![Span::new(0, 4)]),
            ("Who identified something?", vec![Span::new(5, 6)]),
        ]);
        let report = validate(&set);
        assert_eq!(report.count(ViolationCode::DuplicateRole), 1);
        assert_eq!(report.violations[0].location.qa, Some(1));
    }

    #[test]
    fn overlapping_answers_are_reported() {
        let set = usgs_set(&[("Who identified something?", vec![Span::new(0, 7), Span::new(0, 4)])]);
        let report = validate(&set);
        assert_eq!(report.len(), 1);
        assert!(report.has(ViolationCode::OverlappingAnswers));
    }

    #[test]
    fn redundant_sets_skip_consolidation_checks() {
        let mut set = usgs_set(&[
            ("Who identified something?", vec![Span::new(0, 7), Span::new(0, 4)]),
            ("Who identified something?", vec![Span::new(5, 6)]),
        ]);
        set.redundant = true;
        set.annotations.push(set.annotations[0].clone());
        assert!(validate(&set).is_empty());
        set.redundant = false;
        assert!(validate(&set).has(ViolationCode::DuplicatePredicate));
    }

    #[test]
    fn structural_violations() {
        let mut set = usgs_set(&[("Who identified something?", vec![Span::new(3, 30), Span::new(2, 2)])]);
        set.annotations[0].qa_pairs.push(QAPair::new(
            parse_question("What did someone identify?", &identify()).unwrap(),
            vec![],
        ));
        let mut dangling = set.annotations[0].clone();
        dangling.sentence_id = "nope".into();
        set.annotations.push(dangling);
        set.annotations[0].verb_index = 99;
        let report = validate(&set);
        for code in [
            ViolationCode::SpanOutOfBounds,
            ViolationCode::EmptySpan,
            ViolationCode::EmptyAnswers,
            ViolationCode::DanglingSentence,
            ViolationCode::VerbIndexOutOfBounds,
        ] {
            assert!(report.has(code), "{code}");
        }
    }
}
