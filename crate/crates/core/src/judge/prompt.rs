//! Prompt templates, in-context memory and demonstration sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{diff_region, EditPair};

/// Version tag of the bundled template files; part of every judge fingerprint.
pub const PROMPT_VERSION: &str = "v1";

const FIRST_TURN: &str = include_str!("../../templates/judge_first_turn.v1.txt");
const DEMONSTRATION: &str = include_str!("../../templates/judge_demonstration.v1.txt");
const CONTEXT: &str = include_str!("../../templates/judge_context.v1.txt");
const REFINEMENT: &str = include_str!("../../templates/judge_refinement.v1.txt");
pub(crate) const GENERATION: &str = include_str!("../../templates/generation.v1.txt");

/// Single-pass `{{key}}` substitution. Unknown keys are left in place.
pub(crate) fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) => {
                let key = &after[..close];
                match values.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[open..open + 4 + close]),
                }
                rest = &after[close + 2..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub pair: EditPair,
    pub label: bool,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("in-context memory has no {0} exemplar")]
    MissingLabel(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Labelled exemplars used as two-shot demonstrations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IclMemory {
    exemplars: Vec<Exemplar>,
}

impl IclMemory {
    /// Rejects a non-empty memory that lacks either label.
    pub fn new(exemplars: Vec<Exemplar>) -> Result<Self, MemoryError> {
        if !exemplars.is_empty() {
            if !exemplars.iter().any(|e| e.label) {
                return Err(MemoryError::MissingLabel("valid"));
            }
            if !exemplars.iter().any(|e| !e.label) {
                return Err(MemoryError::MissingLabel("invalid"));
            }
        }
        Ok(Self { exemplars })
    }

    /// One JSON [`Exemplar`] per line.
    pub fn from_jsonl(text: &str) -> Result<Self, MemoryError> {
        let mut exemplars = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ex: Exemplar =
                serde_json::from_str(line).map_err(|e| MemoryError::Parse { line: i + 1, message: e.to_string() })?;
            exemplars.push(ex);
        }
        Self::new(exemplars)
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }
}

/// Picks one valid and one invalid exemplar with a seeded generator.
pub fn sample_demonstrations(memory: &IclMemory, seed: u64) -> Result<(&Exemplar, &Exemplar), MemoryError> {
    let valid: Vec<&Exemplar> = memory.exemplars.iter().filter(|e| e.label).collect();
    let invalid: Vec<&Exemplar> = memory.exemplars.iter().filter(|e| !e.label).collect();
    if valid.is_empty() {
        return Err(MemoryError::MissingLabel("valid"));
    }
    if invalid.is_empty() {
        return Err(MemoryError::MissingLabel("invalid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = valid[rng.random_range(0..valid.len())];
    let inv = invalid[rng.random_range(0..invalid.len())];
    Ok((v, inv))
}

/// Human-readable description of what changes between `s1` and `s2`.
pub fn describe_edit(pair: &EditPair) -> String {
    let Some((a, b)) = diff_region(&pair.s1, &pair.s2) else {
        return "no change".to_owned();
    };
    let from = pair.s1[a].join(" ");
    let to = pair.s2[b].join(" ");
    match (from.is_empty(), to.is_empty()) {
        (true, _) => format!("insert \"{to}\""),
        (_, true) => format!("delete \"{from}\""),
        _ => format!("replace \"{from}\" with \"{to}\""),
    }
}

fn context_block(pair: &EditPair, enabled: bool) -> String {
    if !enabled {
        return String::new();
    }
    fill(
        CONTEXT,
        &[
            ("prev", pair.prev.as_deref().unwrap_or("(none)")),
            ("next", pair.next.as_deref().unwrap_or("(none)")),
        ],
    )
}

/// First-turn prompt: demonstrations, optional context, the validity
/// criteria, then the pair under judgment.
pub fn render_first_turn_prompt(pair: &EditPair, demos: Option<(&Exemplar, &Exemplar)>, context_window: bool) -> String {
    let mut demo_text = String::new();
    if let Some((v, inv)) = demos {
        for (n, ex) in [v, inv].into_iter().enumerate() {
            let number = (n + 1).to_string();
            let s1 = ex.pair.s1.join(" ");
            let s2 = ex.pair.s2.join(" ");
            let edit = describe_edit(&ex.pair);
            demo_text.push_str(&fill(
                DEMONSTRATION,
                &[
                    ("number", &number),
                    ("source", &s1),
                    ("hypothesis", &s2),
                    ("edit", &edit),
                    ("analysis", &ex.explanation),
                    ("label", if ex.label { "1" } else { "0" }),
                ],
            ));
        }
    } else {
        demo_text.push_str("(none)\n\n");
    }
    let context = context_block(pair, context_window);
    let s1 = pair.s1.join(" ");
    let s2 = pair.s2.join(" ");
    let edit = describe_edit(pair);
    fill(
        FIRST_TURN,
        &[("demonstrations", &demo_text), ("context", &context), ("source", &s1), ("hypothesis", &s2), ("edit", &edit)],
    )
}

/// The object handed from one turn to the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementInput {
    pub src: String,
    pub edit: String,
    pub hypo: String,
    pub llm_analysis: String,
    pub llm_prediction: u8,
}

impl RefinementInput {
    pub fn new(pair: &EditPair, analysis: &str, prediction: bool) -> Self {
        Self {
            src: pair.s1.join(" "),
            edit: describe_edit(pair),
            hypo: pair.s2.join(" "),
            llm_analysis: analysis.to_owned(),
            llm_prediction: u8::from(prediction),
        }
    }
}

pub fn render_refinement_prompt(pair: &EditPair, input: &RefinementInput, context_window: bool) -> String {
    let json = serde_json::to_string_pretty(input).expect("plain struct serializes");
    let context = context_block(pair, context_window);
    fill(REFINEMENT, &[("context", &context), ("input", &json)])
}
