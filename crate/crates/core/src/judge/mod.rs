//! Edit-validity judging.
//!
//! Every judge maps an [`EditPair`] to a [`Verdict`]. Three families exist:
//! the multi-turn LLM pipeline ([`PipelineJudge`]), a client for a remote
//! pair classifier ([`ClassifierJudge`]) and deterministic stubs
//! ([`StubJudge`], [`TableJudge`]) for offline runs.

mod batch;
mod cache;
mod classifier;
mod parse;
mod pipeline;
mod prompt;
mod stub;
mod transport;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::align::EditPair;

pub use batch::judge_batch;
pub use cache::{cache_key, VerdictCache, VerdictRecord};
pub use classifier::{classifier_judge, ClassifierJudge};
pub use parse::{parse_first_turn_response, parse_refinement_response, ParseError};
pub use pipeline::{run_pipeline, DemoSampling, JudgeConfig, PipelineJudge};
pub use prompt::{
    describe_edit, render_first_turn_prompt, render_refinement_prompt, sample_demonstrations, Exemplar, IclMemory,
    MemoryError, RefinementInput, PROMPT_VERSION,
};
pub use stub::{StubJudge, TableJudge};
pub(crate) use prompt::{fill, GENERATION};
pub use transport::{ChatTransport, HttpChatTransport, ModelEndpoint, RetryPolicy, TransportError};

/// One turn of a judging run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub judge: String,
    pub prediction: bool,
    pub analysis: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    pub analysis: String,
    pub turn_history: Vec<TurnRecord>,
    /// Fingerprint of the judge configuration that produced this verdict.
    pub provenance: String,
}

impl Verdict {
    pub(crate) fn single(judge: &str, valid: bool, analysis: String, provenance: String) -> Self {
        Self {
            valid,
            analysis: analysis.clone(),
            turn_history: vec![TurnRecord { judge: judge.to_owned(), prediction: valid, analysis }],
            provenance,
        }
    }
}

/// Why a single turn gave up after its retries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TurnFailure {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JudgeError {
    #[error("turn {turn} ({judge}) failed after retries: {cause}")]
    TurnFailed { turn: usize, judge: String, cause: TurnFailure, history: Vec<TurnRecord> },
    #[error("classifier transport: {0}")]
    Transport(TransportError),
    #[error("classifier response: {0}")]
    Shape(String),
    #[error("pair not in lookup table: {0:?}")]
    NotInTable(String),
    #[error("invalid judge configuration: {0}")]
    Config(String),
}

pub trait Judge: Send + Sync {
    fn judge(&self, pair: &EditPair) -> Result<Verdict, JudgeError>;

    /// Stable identifier of everything that can change this judge's output.
    fn fingerprint(&self) -> String;
}

impl<J: Judge + ?Sized> Judge for &J {
    fn judge(&self, pair: &EditPair) -> Result<Verdict, JudgeError> {
        (**self).judge(pair)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

impl<J: Judge + ?Sized> Judge for std::sync::Arc<J> {
    fn judge(&self, pair: &EditPair) -> Result<Verdict, JudgeError> {
        (**self).judge(pair)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

/// Hex SHA-256 of the judged content of a pair (both sentences and context).
pub fn pair_hash(pair: &EditPair) -> String {
    let content = serde_json::json!({
        "s1": pair.s1,
        "s2": pair.s2,
        "prev": pair.prev,
        "next": pair.next,
    });
    sha256_hex(content.to_string().as_bytes())
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// 16-hex-digit fingerprint of a serializable configuration.
pub fn fingerprint_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    sha256_hex(json.as_bytes())[..16].to_owned()
}
