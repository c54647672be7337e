use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pairwise_eval_indexed, pearson, spearman, HumanJudgments, MetaEvalError};
use crate::metric::{comprehensive, generalized_f, EditCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    System,
    Sentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    R,
    Rho,
    Tau,
    Accuracy,
}

/// The single statistic the tuner maximizes, written `level:statistic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub level: Level,
    pub statistic: Statistic,
}

impl Objective {
    pub fn validate(&self) -> Result<(), MetaEvalError> {
        match (self.level, self.statistic) {
            (Level::System, Statistic::R | Statistic::Rho) | (Level::Sentence, Statistic::Tau | Statistic::Accuracy) => Ok(()),
            _ => Err(MetaEvalError::Grid(format!("{self} is not a defined objective"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::System => "system",
            Level::Sentence => "sentence",
        };
        let stat = match self.statistic {
            Statistic::R => "r",
            Statistic::Rho => "rho",
            Statistic::Tau => "tau",
            Statistic::Accuracy => "accuracy",
        };
        write!(f, "{level}:{stat}")
    }
}

impl FromStr for Objective {
    type Err = MetaEvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MetaEvalError::Grid(format!("unknown objective {s:?}; expected level:statistic"));
        let (l, st) = s.split_once(':').ok_or_else(bad)?;
        let level = match l {
            "system" => Level::System,
            "sentence" => Level::Sentence,
            _ => return Err(bad()),
        };
        let statistic = match st {
            "r" => Statistic::R,
            "rho" => Statistic::Rho,
            "tau" => Statistic::Tau,
            "accuracy" | "acc" => Statistic::Accuracy,
            _ => return Err(bad()),
        };
        let o = Objective { level, statistic };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    pub objective: Objective,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alpha_min: 0.0,
            alpha_max: 2.0,
            alpha_step: 0.01,
            gamma_min: 0.0,
            gamma_max: 1.0,
            gamma_step: 0.01,
            objective: Objective { level: Level::System, statistic: Statistic::R },
        }
    }
}

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn axis(name: &str, min: f64, max: f64, step: f64) -> Result<Vec<f64>, MetaEvalError> {
    if !(step > 0.0 && step.is_finite() && min.is_finite() && max.is_finite()) {
        return Err(MetaEvalError::Grid(format!("{name} step must be positive and bounds finite")));
    }
    if min > max {
        return Err(MetaEvalError::Grid(format!("{name} range [{min}, {max}] is not ordered")));
    }
    let intervals = (max - min) / step;
    let n = intervals.round();
    if (intervals - n).abs() > 1e-6 {
        return Err(MetaEvalError::Grid(format!("{name} step {step} does not divide [{min}, {max}]")));
    }
    Ok((0..=n as usize).map(|i| snap(min + i as f64 * step)).collect())
}

impl GridSpec {
    pub fn alphas(&self) -> Result<Vec<f64>, MetaEvalError> {
        axis("alpha", self.alpha_min, self.alpha_max, self.alpha_step)
    }

    pub fn gammas(&self) -> Result<Vec<f64>, MetaEvalError> {
        axis("gamma", self.gamma_min, self.gamma_max, self.gamma_step)
    }

    pub fn validate(&self) -> Result<(), MetaEvalError> {
        self.alphas()?;
        self.gammas()?;
        self.objective.validate()
    }

    pub fn point_count(&self) -> Result<usize, MetaEvalError> {
        Ok(self.alphas()?.len() * self.gammas()?.len())
    }
}

/// One grid cell; `value` is `None` where the objective is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub gamma: f64,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub alpha: f64,
    pub gamma: f64,
    pub value: f64,
    pub objective: Objective,
    /// α-major, γ-minor.
    pub grid: Vec<GridPoint>,
}

/// Exhaustive grid search.
///
/// `eval` returns the objective at `(alpha, gamma)`; an error or a non-finite
/// value marks the point undefined. Ties go to the smaller α, then the
/// smaller γ. The result does not depend on evaluation order.
pub fn tune<F>(spec: &GridSpec, eval: F) -> Result<TuneResult, MetaEvalError>
where
    F: Fn(f64, f64) -> Result<f64, MetaEvalError> + Sync,
{
    spec.validate()?;
    let alphas = spec.alphas()?;
    let gammas = spec.gammas()?;
    let grid: Vec<GridPoint> = (0..alphas.len() * gammas.len())
        .into_par_iter()
        .map(|i| {
            let (alpha, gamma) = (alphas[i / gammas.len()], gammas[i % gammas.len()]);
            let value = eval(alpha, gamma).ok().filter(|v| v.is_finite());
            GridPoint { alpha, gamma, value }
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in grid.iter().enumerate() {
        if let Some(v) = p.value {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, value) = best.ok_or_else(|| MetaEvalError::Grid("objective undefined at every grid point".into()))?;
    Ok(TuneResult { alpha: grid[i].alpha, gamma: grid[i].gamma, value, objective: spec.objective, grid })
}

/// Reclassified counts and fluency for one (sentence, system) output. These
/// do not depend on α or γ, so they are computed once before tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub sentence_id: String,
    pub system: String,
    pub counts: EditCounts,
    pub fluency_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub items: Vec<ScoredItem>,
    pub beta: f64,
}

impl ScoreTable {
    pub fn new(items: Vec<ScoredItem>, beta: f64) -> Result<Self, MetaEvalError> {
        if items.is_empty() {
            return Err(MetaEvalError::Empty);
        }
        Ok(Self { items, beta })
    }

    /// Builds the `(alpha, gamma) -> statistic` function for [`tune`],
    /// resolving every judged system and sentence against the table first.
    pub fn objective<'a>(
        &'a self,
        objective: Objective,
        judgments: &HumanJudgments,
    ) -> Result<impl Fn(f64, f64) -> Result<f64, MetaEvalError> + Sync + 'a, MetaEvalError> {
        objective.validate()?;
        let beta = self.beta;
        let plan = match objective.level {
            Level::Sentence => {
                let index: HashMap<(&str, &str), usize> = self
                    .items
                    .iter()
                    .enumerate()
                    .map(|(i, it)| ((it.sentence_id.as_str(), it.system.as_str()), i))
                    .collect();
                let find = |s: &str, sys: &str| {
                    index.get(&(s, sys)).copied().ok_or_else(|| MetaEvalError::MissingScore {
                        sentence: s.to_owned(),
                        system: sys.to_owned(),
                    })
                };
                if judgments.pairwise.is_empty() {
                    return Err(MetaEvalError::Empty);
                }
                let mut pairs = Vec::with_capacity(judgments.pairwise.len());
                for j in &judgments.pairwise {
                    if j.better == j.worse {
                        return Err(MetaEvalError::SelfPair(j.sentence_id.clone()));
                    }
                    pairs.push((find(&j.sentence_id, &j.better)?, find(&j.sentence_id, &j.worse)?));
                }
                Plan::Sentence(pairs)
            }
            Level::System => {
                let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
                for (i, it) in self.items.iter().enumerate() {
                    groups.entry(it.system.as_str()).or_default().push(i);
                }
                let human: BTreeMap<&str, f64> =
                    judgments.system_ranking.iter().map(|s| (s.system.as_str(), s.human_score)).collect();
                let metric_only: Vec<String> = groups.keys().filter(|k| !human.contains_key(*k)).map(|k| k.to_string()).collect();
                let human_only: Vec<String> = human.keys().filter(|k| !groups.contains_key(*k)).map(|k| k.to_string()).collect();
                if !metric_only.is_empty() || !human_only.is_empty() {
                    return Err(MetaEvalError::SystemMismatch { only_metric: metric_only, only_human: human_only });
                }
                if groups.len() < 3 {
                    return Err(MetaEvalError::TooShort { need: 3, got: groups.len() });
                }
                let ys = groups.keys().map(|k| human[k]).collect();
                Plan::System(groups.into_values().collect(), ys)
            }
        };
        let items = &self.items;
        Ok(move |alpha: f64, gamma: f64| -> Result<f64, MetaEvalError> {
            match &plan {
                Plan::Sentence(pairs) => {
                    let fx: Vec<f64> = items
                        .iter()
                        .map(|it| comprehensive(generalized_f(&it.counts, alpha, beta), it.fluency_f, gamma))
                        .collect();
                    let r = pairwise_eval_indexed(&fx, pairs);
                    Ok(match objective.statistic {
                        Statistic::Tau => r.kendall_tau,
                        _ => r.accuracy,
                    }
                    .expect("pairwise statistics are always set"))
                }
                Plan::System(groups, ys) => {
                    let xs: Vec<f64> = groups
                        .iter()
                        .map(|g| {
                            let counts: EditCounts = g.iter().map(|&i| items[i].counts).sum();
                            let f = g.iter().map(|&i| items[i].fluency_f).sum::<f64>() / g.len() as f64;
                            comprehensive(generalized_f(&counts, alpha, beta), f, gamma)
                        })
                        .collect();
                    match objective.statistic {
                        Statistic::R => pearson(&xs, ys),
                        _ => spearman(&xs, ys),
                    }
                }
            }
        })
    }
}

enum Plan {
    Sentence(Vec<(usize, usize)>),
    System(Vec<Vec<usize>>, Vec<f64>),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_size() {
        let g = GridSpec::default();
        assert_eq!(g.alphas().unwrap().len(), 201);
        assert_eq!(g.gammas().unwrap().len(), 101);
        assert_eq!(g.point_count().unwrap(), 20_301);
        assert_eq!(g.alphas().unwrap()[100], 1.0);
        assert_eq!(g.gammas().unwrap()[50], 0.5);
    }

    #[test]
    fn constant_objective_tie_breaks_to_origin() {
        let r = tune(&GridSpec::default(), |_, _| Ok(0.3)).unwrap();
        assert_eq!((r.alpha, r.gamma, r.value), (0.0, 0.0, 0.3));
    }

    #[test]
    fn objective_strings() {
        assert_eq!("sentence:accuracy".parse::<Objective>().unwrap(), Objective { level: Level::Sentence, statistic: Statistic::Accuracy });
        assert_eq!("system:rho".parse::<Objective>().unwrap().to_string(), "system:rho");
        assert!("system:tau".parse::<Objective>().is_err());
        assert!("nope".parse::<Objective>().is_err());
    }

    #[test]
    fn bad_specs() {
        assert!(GridSpec { alpha_step: 0.0, ..Default::default() }.validate().is_err());
        assert!(GridSpec { alpha_min: 3.0, ..Default::default() }.validate().is_err());
        assert!(GridSpec { gamma_step: 0.3, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn undefined_everywhere_is_an_error() {
        assert!(tune(&GridSpec::default(), |_, _| Err(MetaEvalError::ZeroVariance)).is_err());
    }
}
