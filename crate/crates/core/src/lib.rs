//! Edit-level validity judging and reference-based evaluation for grammatical
//! error correction.

pub mod align;
pub mod corpus;
pub mod expand;
pub mod judge;
pub mod lm;
pub mod metaeval;
pub mod metric;

pub use align::{construct_pair, extract_edits, EditPair};
pub use corpus::{Annotation, CorpusRecord, Edit, ReferenceSet, Sentence};
pub use judge::{Judge, JudgeError, Verdict};
pub use lm::{BigramModel, FluencyProvider};
pub use metaeval::{CorrelationReport, HumanJudgments};
pub use metric::{EditCounts, MetricConfig, ScoreReport};
