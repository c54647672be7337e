use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentence fluency from per-token natural-log probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluencyResult {
    /// Mean negative log-probability per token, in nats.
    pub h: f64,
    /// `1 / (1 + h)`.
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FluencyError {
    #[error("cannot score an empty token sequence")]
    Empty,
    #[error("log-probability at position {0} is not finite")]
    NonFinite(usize),
}

pub fn fluency_score(logprobs: &[f64]) -> Result<FluencyResult, FluencyError> {
    if logprobs.is_empty() {
        return Err(FluencyError::Empty);
    }
    if let Some(i) = logprobs.iter().position(|lp| !lp.is_finite()) {
        return Err(FluencyError::NonFinite(i));
    }
    let h = -logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    Ok(FluencyResult { h, f: 1.0 / (1.0 + h) })
}
