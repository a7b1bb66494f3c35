use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{aggregate, evaluate_predicate, Counts, EvalConfig, EvalError, Score};
use crate::model::{AnnotationSet, PredicateKey, Source, VerbAnnotation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredicateCounts {
    pub id: String,
    #[serde(flatten)]
    pub counts: Counts,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub per_predicate: Vec<PredicateCounts>,
    pub totals: Score,
    /// Predicted predicates with no reference annotation; not scored.
    #[serde(skip)]
    pub unscored_predictions: usize,
}

impl EvalReport {
    pub fn counts(&self) -> Counts {
        self.per_predicate.iter().map(|p| p.counts).sum()
    }
}

fn empty_like(gold: &VerbAnnotation) -> VerbAnnotation {
    VerbAnnotation {
        qa_pairs: Vec::new(),
        source: Source::External,
        ..gold.clone()
    }
}

/// Score every reference predicate. Predicates are visited in sorted order
/// regardless of `jobs`, so the report never depends on scheduling.
pub fn evaluate_sets(
    pred: &AnnotationSet,
    gold: &AnnotationSet,
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<EvalReport, EvalError> {
    let gold_by = gold.merged_by_predicate();
    let pred_by = pred.merged_by_predicate();
    let unscored_predictions = pred_by.keys().filter(|k| !gold_by.contains_key(k)).count();

    let work: Vec<(&PredicateKey, &VerbAnnotation)> = gold_by.iter().collect();
    let score_one = |(key, g): &(&PredicateKey, &VerbAnnotation)| -> Result<PredicateCounts, EvalError> {
        let counts = match pred_by.get(*key) {
            Some(p) => evaluate_predicate(p, g, cfg)?,
            None => evaluate_predicate(&empty_like(g), g, cfg)?,
        };
        Ok(PredicateCounts {
            id: key.to_string(),
            counts,
        })
    };

    let per_predicate: Vec<PredicateCounts> = if jobs <= 1 {
        work.iter().map(score_one).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| work.par_iter().map(score_one).collect::<Result<_, _>>())?
    };

    let counts: Vec<Counts> = per_predicate.iter().map(|p| p.counts).collect();
    let totals = aggregate(&counts, cfg.aggregation)?;
    Ok(EvalReport {
        config: cfg.clone(),
        per_predicate,
        totals,
        unscored_predictions,
    })
}

/// Agreement of `a` against `b` over their shared predicates, with `b` as
/// the reference.
pub fn iaa_pairwise(a: &AnnotationSet, b: &AnnotationSet, cfg: &EvalConfig) -> Result<Score, EvalError> {
    let a_by = a.merged_by_predicate();
    let b_by = b.merged_by_predicate();
    let counts: Vec<Counts> = b_by
        .iter()
        .filter_map(|(key, gold)| a_by.get(key).map(|pred| evaluate_predicate(pred, gold, cfg)))
        .collect::<Result<_, _>>()?;
    if counts.is_empty() {
        return Err(EvalError::Disjoint);
    }
    aggregate(&counts, cfg.aggregation)
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkerAgreement {
    pub worker_a: String,
    pub worker_b: String,
    pub predicates: usize,
    pub score: Score,
}

/// Pairwise agreement between every two workers of a multi-worker set that
/// annotated at least one predicate in common.
pub fn iaa_workers(set: &AnnotationSet, cfg: &EvalConfig) -> Vec<WorkerAgreement> {
    let mut per_worker: BTreeMap<&str, AnnotationSet> = BTreeMap::new();
    for ann in &set.annotations {
        if let Source::Worker(id) = &ann.source {
            let entry = per_worker.entry(id.as_str()).or_insert_with(|| AnnotationSet {
                sentences: set.sentences.clone(),
                annotations: Vec::new(),
                redundant: false,
            });
            entry.annotations.push(ann.clone());
        }
    }
    let keys: BTreeMap<&str, BTreeSet<PredicateKey>> = per_worker
        .iter()
        .map(|(w, s)| (*w, s.annotations.iter().map(VerbAnnotation::key).collect()))
        .collect();

    let workers: Vec<&str> = per_worker.keys().copied().collect();
    let mut out = Vec::new();
    for (i, wa) in workers.iter().enumerate() {
        for wb in &workers[i + 1..] {
            let shared = keys[wa].intersection(&keys[wb]).count();
            if shared == 0 {
                continue;
            }
            if let Ok(score) = iaa_pairwise(&per_worker[wa], &per_worker[wb], cfg) {
                out.push(WorkerAgreement {
                    worker_a: wa.to_string(),
                    worker_b: wb.to_string(),
                    predicates: shared,
                    score,
                });
            }
        }
    }
    out
}
