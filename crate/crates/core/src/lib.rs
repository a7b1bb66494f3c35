//! Tools for QA-SRL annotation: a question template grammar, a dataset
//! model with validation, span alignment, UA/LA scoring with micro and macro
//! aggregation, consolidation support and a PropBank comparison.

pub mod align;
pub mod cli;
pub mod consolidation;
pub mod grammar;
pub mod metrics;
pub mod model;
pub mod propbank;
pub mod report;

pub use align::{align, iou, IouThreshold, MatchResult};
pub use grammar::{
    parse_question, render_question, signature, strict_match, QuestionSlots, StrictSignature, VerbForms,
};
pub use metrics::{aggregate, evaluate_predicate, evaluate_sets, Aggregation, Counts, EvalConfig, Mode, Score};
pub use model::{AnnotationSet, QAPair, Sentence, Source, Span, VerbAnnotation};
