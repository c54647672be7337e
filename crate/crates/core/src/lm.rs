//! Per-token log-probability providers for fluency scoring.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LmError {
    #[error("language model request failed: {0}")]
    Transport(String),
    #[error("malformed language model response: {0}")]
    Shape(String),
}

/// Natural-log probability of each scored token of a sentence.
pub trait FluencyProvider: Send + Sync {
    fn logprobs(&self, tokens: &[String]) -> Result<Vec<f64>, LmError>;

    fn id(&self) -> String;
}

const BOS: &str = "<s>";

/// Token bigram model with add-one smoothing.
///
/// Every token is predicted from its predecessor (`<s>` for the first).
/// Unseen tokens share one `<unk>` type, so each conditional distribution
/// sums to one over the training vocabulary plus `<unk>`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BigramModel {
    bigrams: HashMap<String, HashMap<String, u64>>,
    context_totals: HashMap<String, u64>,
    vocab: HashMap<String, ()>,
}

impl BigramModel {
    pub fn fit<S: AsRef<[String]>>(sentences: &[S]) -> Self {
        let mut m = BigramModel::default();
        for s in sentences {
            let mut prev = BOS;
            for tok in s.as_ref() {
                m.vocab.insert(tok.clone(), ());
                *m.bigrams.entry(prev.to_owned()).or_default().entry(tok.clone()).or_default() += 1;
                *m.context_totals.entry(prev.to_owned()).or_default() += 1;
                prev = tok;
            }
        }
        m
    }

    /// Fits on whitespace-tokenized lines.
    pub fn fit_text(text: &str) -> Self {
        let sentences: Vec<Vec<String>> =
            text.lines().map(|l| l.split_whitespace().map(str::to_owned).collect()).collect();
        Self::fit(&sentences)
    }

    /// Vocabulary size including `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len() + 1
    }

    fn known<'a>(&self, tok: &'a str) -> Option<&'a str> {
        self.vocab.contains_key(tok).then_some(tok)
    }

    pub fn logprob(&self, prev: Option<&str>, tok: &str) -> f64 {
        let v = self.vocab_size() as f64;
        let ctx = prev.and_then(|p| if p == BOS { Some(BOS) } else { self.known(p) });
        let (pair, total) = match ctx {
            Some(c) => {
                let pair = match self.known(tok) {
                    Some(t) => self.bigrams.get(c).and_then(|m| m.get(t)).copied().unwrap_or(0),
                    None => 0,
                };
                (pair, self.context_totals.get(c).copied().unwrap_or(0))
            }
            None => (0, 0),
        };
        ((pair as f64 + 1.0) / (total as f64 + v)).ln()
    }
}

impl FluencyProvider for BigramModel {
    fn logprobs(&self, tokens: &[String]) -> Result<Vec<f64>, LmError> {
        let mut prev = Some(BOS);
        Ok(tokens
            .iter()
            .map(|t| {
                let lp = self.logprob(prev, t);
                prev = Some(t.as_str());
                lp
            })
            .collect())
    }

    fn id(&self) -> String {
        format!("bigram-add1:{}", self.vocab_size())
    }
}

#[derive(Serialize)]
struct LogprobRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct LogprobResponse {
    tokens: Vec<String>,
    logprobs: Vec<Option<f64>>,
}

/// Client for a `POST {base_url}/logprobs` neural scoring service.
///
/// The service tokenizes with its own subword vocabulary; positions with a
/// `null` log-probability (typically the first subword) are left out, so
/// `|x|` is the number of scored subword tokens.
#[derive(Debug, Clone)]
pub struct SidecarLm {
    pub base_url: String,
    pub timeout: Duration,
}

impl SidecarLm {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), timeout: Duration::from_secs(30) }
    }
}

impl FluencyProvider for SidecarLm {
    fn logprobs(&self, tokens: &[String]) -> Result<Vec<f64>, LmError> {
        let url = format!("{}/logprobs", self.base_url.trim_end_matches('/'));
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let text = tokens.join(" ");
        let mut resp = agent
            .post(&url)
            .send_json(LogprobRequest { text: &text })
            .map_err(|e| LmError::Transport(e.to_string()))?;
        let body: LogprobResponse = resp.body_mut().read_json().map_err(|e| LmError::Shape(e.to_string()))?;
        if body.tokens.len() != body.logprobs.len() {
            return Err(LmError::Shape(format!("{} tokens but {} logprobs", body.tokens.len(), body.logprobs.len())));
        }
        let scored: Vec<f64> = body.logprobs.into_iter().flatten().collect();
        if let Some(bad) = scored.iter().find(|lp| !(lp.is_finite() && **lp <= 0.0)) {
            return Err(LmError::Shape(format!("log-probability {bad} is not a finite value <= 0")));
        }
        Ok(scored)
    }

    fn id(&self) -> String {
        format!("sidecar:{}", self.base_url)
    }
}

#[derive(Serialize)]
struct SimilarityRequest<'a> {
    a: &'a str,
    b: &'a str,
}

#[derive(Deserialize)]
struct SimilarityResponse {
    score: f64,
}

/// Client for `POST {base_url}/similarity`: cosine similarity of two
/// sentence embeddings, in [-1, 1].
#[derive(Debug, Clone)]
pub struct SidecarSimilarity {
    pub base_url: String,
    pub timeout: Duration,
}

impl SidecarSimilarity {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), timeout: Duration::from_secs(30) }
    }

    pub fn similarity(&self, a: &[String], b: &[String]) -> Result<f64, LmError> {
        let url = format!("{}/similarity", self.base_url.trim_end_matches('/'));
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let (a, b) = (a.join(" "), b.join(" "));
        let mut resp = agent
            .post(&url)
            .send_json(SimilarityRequest { a: &a, b: &b })
            .map_err(|e| LmError::Transport(e.to_string()))?;
        let body: SimilarityResponse = resp.body_mut().read_json().map_err(|e| LmError::Shape(e.to_string()))?;
        if !(-1.0..=1.0).contains(&body.score) {
            return Err(LmError::Shape(format!("similarity {} outside [-1, 1]", body.score)));
        }
        Ok(body.score)
    }
}
