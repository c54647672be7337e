//! Edit classification against references and the interpolated score.
//!
//! ```text
//! P_G     = TP / (TP + FP_noc + alpha * FP_oc)
//! R       = TP / (TP + FN)
//! F_beta  = (1 + beta^2) * P_G * R / (beta^2 * P_G + R)
//! f(x)    = 1 / (1 + H(x)),  H(x) = -(1/|x|) * sum_i ln P(x_i | x_<i)
//! F(x)    = (1 - gamma) * F_beta + gamma * f(x)
//! ```
//!
//! Setting `alpha = 1`, `gamma = 0` and disabling reclassification reduces
//! `F(x)` to the ordinary edit-level F-beta.

mod fluency;
mod score;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Edit, Sentence};

pub use fluency::{fluency_score, FluencyError, FluencyResult};
pub use score::{aggregate, finish, prepare, score, score_corpus, AggregateMode, Prepared, ScoreError, ScoreReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCounts {
    pub tp: u64,
    pub fp_oc: u64,
    pub fp_noc: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl EditCounts {
    pub fn new(tp: u64, fp_oc: u64, fp_noc: u64, fn_: u64) -> Self {
        Self { tp, fp_oc, fp_noc, fn_ }
    }

    pub fn fp(&self) -> u64 {
        self.fp_oc + self.fp_noc
    }
}

impl std::ops::Add for EditCounts {
    type Output = EditCounts;

    fn add(self, o: EditCounts) -> EditCounts {
        EditCounts::new(self.tp + o.tp, self.fp_oc + o.fp_oc, self.fp_noc + o.fp_noc, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for EditCounts {
    fn sum<I: Iterator<Item = EditCounts>>(iter: I) -> Self {
        iter.fold(EditCounts::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Overcorrection penalty, in `[0, 2]`.
    pub alpha: f64,
    /// Precision/recall balance, `> 0`.
    pub beta: f64,
    /// Fluency interpolation weight, in `[0, 1]`.
    pub gamma: f64,
    pub reclassify: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.5, gamma: 0.0, reclassify: true }
    }
}

impl MetricConfig {
    /// Plain F_beta: no reclassification, `alpha = 1`, `gamma = 0`.
    pub fn baseline(beta: f64) -> Self {
        Self { alpha: 1.0, beta, gamma: 0.0, reclassify: false }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if !(0.0..=2.0).contains(&self.alpha) {
            return Err(MetricError::Config(format!("alpha {} outside [0, 2]", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(MetricError::Config(format!("beta {} must be positive", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(MetricError::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no reference annotations to score against")]
    NoReferences,
    #[error("no verdict for false positive {0}")]
    MissingVerdict(usize),
    #[error("{0}")]
    Config(String),
    #[error("cannot aggregate an empty report list")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpKind {
    Overcorrection,
    NonOvercorrection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsePositive {
    pub edit: Edit,
    pub kind: FpKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub counts: EditCounts,
    pub fp_edits: Vec<FalsePositive>,
    pub selected_ref: usize,
}

/// Overcorrection when the false positive touches text every reference
/// left alone; otherwise non-overcorrection. Closed hulls are compared, so
/// touching a reference edit's border counts as overlap.
pub fn decouple_fp(fp: &Edit, ref_edits: &[Edit]) -> FpKind {
    let (a0, a1) = fp.closed_hull();
    let overlaps = ref_edits.iter().any(|r| {
        let (b0, b1) = r.closed_hull();
        a0 <= b1 && b0 <= a1
    });
    if overlaps {
        FpKind::NonOvercorrection
    } else {
        FpKind::Overcorrection
    }
}

fn match_counts(hyp: &[Edit], reference: &[Edit]) -> (u64, Vec<usize>, u64) {
    let mut used = vec![false; reference.len()];
    let mut tp = 0;
    let mut unmatched = Vec::new();
    for (i, h) in hyp.iter().enumerate() {
        match reference.iter().enumerate().position(|(j, r)| !used[j] && r.same_correction(h)) {
            Some(j) => {
                used[j] = true;
                tp += 1;
            }
            None => unmatched.push(i),
        }
    }
    let fn_ = used.iter().filter(|u| !**u).count() as u64;
    (tp, unmatched, fn_)
}

/// Scores `hyp_edits` against the reference annotation with the highest
/// F_beta at `alpha = 1` (lowest index on ties), then decouples the
/// remaining false positives.
pub fn classify_edits(
    hyp_edits: &[Edit],
    ref_edit_lists: &[Vec<Edit>],
    _source: &Sentence,
    beta: f64,
) -> Result<Classification, MetricError> {
    if ref_edit_lists.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let mut best: Option<(f64, usize, u64, Vec<usize>, u64)> = None;
    for (k, reference) in ref_edit_lists.iter().enumerate() {
        let (tp, unmatched, fn_) = match_counts(hyp_edits, reference);
        let counts = EditCounts::new(tp, 0, unmatched.len() as u64, fn_);
        let f = generalized_f(&counts, 1.0, beta);
        if best.as_ref().is_none_or(|b| f > b.0) {
            best = Some((f, k, tp, unmatched, fn_));
        }
    }
    let (_, k, tp, unmatched, fn_) = best.expect("at least one reference");
    let reference = &ref_edit_lists[k];
    let fp_edits: Vec<FalsePositive> = unmatched
        .into_iter()
        .map(|i| FalsePositive { edit: hyp_edits[i].clone(), kind: decouple_fp(&hyp_edits[i], reference) })
        .collect();
    let fp_oc = fp_edits.iter().filter(|f| f.kind == FpKind::Overcorrection).count() as u64;
    let fp_noc = fp_edits.len() as u64 - fp_oc;
    Ok(Classification { counts: EditCounts::new(tp, fp_oc, fp_noc, fn_), fp_edits, selected_ref: k })
}

/// Moves every false positive judged valid from its bucket to `tp`.
///
/// `validity[i]` is the judgment for `fp_edits[i]`; `None` or a short slice
/// is an error. False negatives are untouched.
pub fn reclassify(counts: &EditCounts, fp_edits: &[FalsePositive], validity: &[Option<bool>]) -> Result<EditCounts, MetricError> {
    let mut out = *counts;
    for (i, fp) in fp_edits.iter().enumerate() {
        let valid = validity.get(i).copied().flatten().ok_or(MetricError::MissingVerdict(i))?;
        if valid {
            match fp.kind {
                FpKind::Overcorrection => out.fp_oc -= 1,
                FpKind::NonOvercorrection => out.fp_noc -= 1,
            }
            out.tp += 1;
        }
    }
    Ok(out)
}

/// `TP / (TP + FP_noc + alpha * FP_oc)`, or 1 when the denominator is 0.
pub fn generalized_precision(counts: &EditCounts, alpha: f64) -> f64 {
    let tp = counts.tp as f64;
    let denom = tp + counts.fp_noc as f64 + alpha * counts.fp_oc as f64;
    if denom == 0.0 {
        1.0
    } else {
        tp / denom
    }
}

/// `TP / (TP + FN)`, or 1 when there is nothing to find.
pub fn recall(counts: &EditCounts) -> f64 {
    let denom = counts.tp + counts.fn_;
    if denom == 0 {
        1.0
    } else {
        counts.tp as f64 / denom as f64
    }
}

pub fn generalized_f(counts: &EditCounts, alpha: f64, beta: f64) -> f64 {
    f_beta(generalized_precision(counts, alpha), recall(counts), beta)
}

pub(crate) fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    if p == 0.0 && r == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * p * r / (b2 * p + r)
}

pub fn comprehensive(f_beta_g: f64, fluency_f: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * f_beta_g + gamma * fluency_f
}
