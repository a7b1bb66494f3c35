use serde::Serialize;

use super::EvalError;
use crate::model::{AnnotationSet, Source};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub verbs: usize,
    pub questions: usize,
    pub answers: usize,
    pub questions_per_verb: f64,
    pub answers_per_question: f64,
    /// Each question of a consolidated annotation is one role.
    pub roles_total: usize,
}

pub fn dataset_stats(set: &AnnotationSet) -> DatasetStats {
    let verbs = set.annotations.len();
    let questions: usize = set.annotations.iter().map(|a| a.qa_pairs.len()).sum();
    let answers: usize = set
        .annotations
        .iter()
        .flat_map(|a| &a.qa_pairs)
        .map(|qa| qa.answers.len())
        .sum();
    let per = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    DatasetStats {
        verbs,
        questions,
        answers,
        questions_per_verb: per(questions, verbs),
        answers_per_question: per(answers, questions),
        roles_total: questions,
    }
}

/// Crowd payment rates, in cents.
///
/// `generation_bonus` defaults to 2¢ per question beyond the first two. This
/// rate is an assumption, not a published figure; set it explicitly when the
/// real schedule is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSchedule {
    pub generation_base: f64,
    pub generation_bonus: f64,
    pub consolidation_base: f64,
    pub consolidation_per_question: f64,
}

impl Default for CostSchedule {
    fn default() -> Self {
        CostSchedule {
            generation_base: 5.0,
            generation_bonus: 2.0,
            consolidation_base: 5.0,
            consolidation_per_question: 3.0,
        }
    }
}

impl CostSchedule {
    pub fn generation(&self, questions: usize) -> f64 {
        self.generation_base + self.generation_bonus * questions.saturating_sub(2) as f64
    }

    pub fn consolidation(&self, questions: usize) -> f64 {
        self.consolidation_base + self.consolidation_per_question * questions as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerbCost {
    pub id: String,
    pub generators: usize,
    pub consolidated_questions: usize,
    pub cents: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub schedule: CostSchedule,
    pub per_verb: Vec<VerbCost>,
    pub average_cents: f64,
    pub roles_per_verb: f64,
}

/// Per-predicate cost of generation plus consolidation. Every predicate
/// needs at least one worker annotation and exactly one consolidated one.
pub fn cost(set: &AnnotationSet, schedule: &CostSchedule) -> Result<CostReport, EvalError> {
    let mut per_verb = Vec::new();
    let mut roles = 0usize;
    for (key, anns) in set.by_predicate() {
        let generated: Vec<usize> = anns
            .iter()
            .filter(|a| matches!(a.source, Source::Worker(_)))
            .map(|a| a.qa_pairs.len())
            .collect();
        if generated.is_empty() {
            return Err(EvalError::MissingProvenance(key, "worker annotations"));
        }
        let consolidated: Vec<usize> = anns
            .iter()
            .filter(|a| a.source == Source::Consolidated)
            .map(|a| a.qa_pairs.len())
            .collect();
        let [final_questions] = consolidated[..] else {
            return Err(EvalError::MissingProvenance(key, "exactly one consolidated annotation"));
        };
        let cents =
            generated.iter().map(|&q| schedule.generation(q)).sum::<f64>() + schedule.consolidation(final_questions);
        roles += final_questions;
        per_verb.push(VerbCost {
            id: key.to_string(),
            generators: generated.len(),
            consolidated_questions: final_questions,
            cents,
        });
    }
    let n = per_verb.len();
    let average_cents = if n == 0 {
        0.0
    } else {
        per_verb.iter().map(|v| v.cents).sum::<f64>() / n as f64
    };
    Ok(CostReport {
        schedule: *schedule,
        roles_per_verb: if n == 0 { 0.0 } else { roles as f64 / n as f64 },
        per_verb,
        average_cents,
    })
}
