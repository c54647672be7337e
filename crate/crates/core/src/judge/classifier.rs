use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{fingerprint_of, Judge, JudgeError, TransportError, Verdict};
use crate::align::EditPair;

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    s1: String,
    s2: String,
    prev: Option<&'a str>,
    next: Option<&'a str>,
}

#[derive(Debug, Deserialize)]
struct ClassifyResponse {
    valid: bool,
    score: f64,
}

/// Client for a `POST {base_url}/classify` pair classifier.
#[derive(Debug, Clone)]
pub struct ClassifierJudge {
    pub base_url: String,
    pub timeout: Duration,
}

impl ClassifierJudge {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), timeout: Duration::from_secs(30) }
    }

    fn url(&self) -> String {
        format!("{}/classify", self.base_url.trim_end_matches('/'))
    }
}

/// Posts `{s1, s2, prev, next}` and maps `{valid, score}` to a single-turn
/// verdict.
pub fn classifier_judge(pair: &EditPair, endpoint: &ClassifierJudge) -> Result<Verdict, JudgeError> {
    let url = endpoint.url();
    let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(endpoint.timeout)).build().into();
    let body = ClassifyRequest {
        s1: pair.s1.join(" "),
        s2: pair.s2.join(" "),
        prev: pair.prev.as_deref(),
        next: pair.next.as_deref(),
    };
    let transport = |message: String| JudgeError::Transport(TransportError::Request { endpoint: url.clone(), message });
    let mut resp = agent.post(&url).send_json(&body).map_err(|e| transport(e.to_string()))?;
    let value: Value = resp.body_mut().read_json().map_err(|e| JudgeError::Shape(e.to_string()))?;
    let parsed: ClassifyResponse = serde_json::from_value(value).map_err(|e| JudgeError::Shape(e.to_string()))?;
    if !(0.0..=1.0).contains(&parsed.score) {
        return Err(JudgeError::Shape(format!("score {} outside [0, 1]", parsed.score)));
    }
    Ok(Verdict::single(
        "classifier",
        parsed.valid,
        format!("classifier score {}", parsed.score),
        endpoint.fingerprint(),
    ))
}

impl Judge for ClassifierJudge {
    fn judge(&self, pair: &EditPair) -> Result<Verdict, JudgeError> {
        classifier_judge(pair, self)
    }

    fn fingerprint(&self) -> String {
        fingerprint_of(&serde_json::json!({"kind": "classifier", "url": self.url()}))
    }
}
