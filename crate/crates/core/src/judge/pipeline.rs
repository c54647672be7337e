use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::parse::{parse_first_turn_response, parse_refinement_response, ParseError};
use super::prompt::{render_first_turn_prompt, render_refinement_prompt, sample_demonstrations, IclMemory, RefinementInput};
use super::transport::{ChatTransport, ModelEndpoint};
use super::{fingerprint_of, pair_hash, Judge, JudgeError, TurnFailure, TurnRecord, Verdict, PROMPT_VERSION};
use crate::align::EditPair;

/// How demonstrations are drawn from the in-context memory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoSampling {
    /// One draw from the run seed, reused for every pair.
    #[default]
    PerRun,
    /// A fresh draw per pair, seeded by the run seed and the pair content.
    PerPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeConfig {
    pub turns: Vec<ModelEndpoint>,
    pub memory: IclMemory,
    pub context_window: bool,
    pub seed: u64,
    pub demo_sampling: DemoSampling,
}

impl JudgeConfig {
    pub fn new(turns: Vec<ModelEndpoint>) -> Self {
        Self { turns, memory: IclMemory::default(), context_window: true, seed: 0, demo_sampling: DemoSampling::PerRun }
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.turns.is_empty() {
            return Err(JudgeError::Config("at least one turn is required".into()));
        }
        if let Some(t) = self.turns.iter().find(|t| t.timeout_ms == 0) {
            return Err(JudgeError::Config(format!("turn {} has a zero timeout", t.name)));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let turns: Vec<_> = self.turns.iter().map(ModelEndpoint::semantic_key).collect();
        fingerprint_of(&serde_json::json!({
            "kind": "pipeline",
            "prompt_version": PROMPT_VERSION,
            "turns": turns,
            "memory": fingerprint_of(&self.memory),
            "context_window": self.context_window,
            "seed": self.seed,
            "demo_sampling": self.demo_sampling,
        }))
    }

    fn demo_seed(&self, pair: &EditPair) -> u64 {
        match self.demo_sampling {
            DemoSampling::PerRun => self.seed,
            DemoSampling::PerPair => {
                let h = pair_hash(pair);
                self.seed ^ u64::from_str_radix(&h[..16], 16).expect("hex digest")
            }
        }
    }
}

fn run_turn<F>(
    transport: &dyn ChatTransport,
    endpoint: &ModelEndpoint,
    prompt: &str,
    parse: F,
) -> Result<(String, bool), TurnFailure>
where
    F: Fn(&str) -> Result<(String, bool), ParseError>,
{
    let mut attempt = 0;
    loop {
        let outcome = transport
            .complete(endpoint, prompt)
            .map_err(TurnFailure::from)
            .and_then(|text| parse(&text).map_err(TurnFailure::from));
        match outcome {
            Ok(v) => return Ok(v),
            Err(e) if attempt >= endpoint.retry.max_retries => return Err(e),
            Err(e) => {
                log::debug!("turn {} attempt {} failed: {e}", endpoint.name, attempt + 1);
                let delay = endpoint.retry.delay(attempt);
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                }
                attempt += 1;
            }
        }
    }
}

/// Runs the configured turns in order. Turn 1 gets the first-turn prompt;
/// every later turn reviews the previous turn's analysis and prediction.
/// The verdict is the last turn's prediction. Retries are not recorded as
/// turns.
pub fn run_pipeline(pair: &EditPair, config: &JudgeConfig, transport: &dyn ChatTransport) -> Result<Verdict, JudgeError> {
    config.validate()?;
    let demos = if config.memory.is_empty() {
        None
    } else {
        Some(
            sample_demonstrations(&config.memory, config.demo_seed(pair))
                .map_err(|e| JudgeError::Config(e.to_string()))?,
        )
    };

    let mut history: Vec<TurnRecord> = Vec::with_capacity(config.turns.len());
    for (t, endpoint) in config.turns.iter().enumerate() {
        let result = match history.last() {
            None => {
                let prompt = render_first_turn_prompt(pair, demos, config.context_window);
                run_turn(transport, endpoint, &prompt, parse_first_turn_response)
            }
            Some(prev) => {
                let input = RefinementInput::new(pair, &prev.analysis, prev.prediction);
                let prompt = render_refinement_prompt(pair, &input, config.context_window);
                run_turn(transport, endpoint, &prompt, parse_refinement_response)
            }
        };
        match result {
            Ok((analysis, prediction)) => {
                history.push(TurnRecord { judge: endpoint.name.clone(), prediction, analysis });
            }
            Err(cause) => {
                return Err(JudgeError::TurnFailed { turn: t + 1, judge: endpoint.name.clone(), cause, history });
            }
        }
    }
    let last = history.last().expect("at least one turn");
    Ok(Verdict { valid: last.prediction, analysis: last.analysis.clone(), turn_history: history, provenance: config.fingerprint() })
}

/// The multi-turn LLM judge bound to a transport.
#[derive(Clone)]
pub struct PipelineJudge {
    config: JudgeConfig,
    fingerprint: String,
    transport: Arc<dyn ChatTransport>,
}

impl PipelineJudge {
    pub fn new(config: JudgeConfig, transport: Arc<dyn ChatTransport>) -> Result<Self, JudgeError> {
        config.validate()?;
        let fingerprint = config.fingerprint();
        Ok(Self { config, fingerprint, transport })
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }
}

impl Judge for PipelineJudge {
    fn judge(&self, pair: &EditPair) -> Result<Verdict, JudgeError> {
        run_pipeline(pair, &self.config, self.transport.as_ref())
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}
