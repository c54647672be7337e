//! Correlation of metric scores with human judgments, and the α/γ tuner.

mod tune;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tune::{tune, GridPoint, GridSpec, Level, Objective, ScoreTable, ScoredItem, Statistic, TuneResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaEvalError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("no score for system {system:?} on sentence {sentence:?}")]
    MissingScore { sentence: String, system: String },
    #[error("judgment on sentence {0:?} compares a system with itself")]
    SelfPair(String),
    #[error("system sets differ: only in metric {only_metric:?}, only in human {only_human:?}")]
    SystemMismatch { only_metric: Vec<String>, only_human: Vec<String> },
    #[error("no judgments to evaluate against")]
    Empty,
    #[error("sentence {0:?} belongs to more than one domain")]
    AmbiguousDomain(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{0}")]
    Parse(String),
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), MetaEvalError> {
    if xs.len() != ys.len() {
        return Err(MetaEvalError::Length(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetaEvalError::TooShort { need: 2, got: xs.len() });
    }
    Ok(())
}

/// Product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetaEvalError> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetaEvalError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn mid_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetaEvalError> {
    check_pair(xs, ys)?;
    pearson(&mid_ranks(xs), &mid_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    EditLevel,
    SentenceLevel,
}

/// One human preference between two systems' outputs for a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairwiseJudgment {
    pub sentence_id: String,
    pub better: String,
    pub worse: String,
    pub granularity: Granularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemScore {
    pub system: String,
    pub human_score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanJudgments {
    pub system_ranking: Vec<SystemScore>,
    pub pairwise: Vec<PairwiseJudgment>,
}

fn parse_lines<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<Vec<T>, MetaEvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| MetaEvalError::Parse(format!("{what} line {}: {e}", i + 1))))
        .collect()
}

impl HumanJudgments {
    /// Parses a judgments file (`{sentence_id, better, worse, granularity}`
    /// per line) and a ranking file (`{system, human_score}` per line).
    pub fn from_jsonl(pairwise: &str, ranking: &str) -> Result<Self, MetaEvalError> {
        let j = Self { system_ranking: parse_lines(ranking, "ranking")?, pairwise: parse_lines(pairwise, "judgments")? };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<(), MetaEvalError> {
        match self.pairwise.iter().find(|p| p.better == p.worse) {
            Some(p) => Err(MetaEvalError::SelfPair(p.sentence_id.clone())),
            None => Ok(()),
        }
    }

    pub fn pairs_at(&self, granularity: Granularity) -> Vec<PairwiseJudgment> {
        self.pairwise.iter().filter(|p| p.granularity == granularity).cloned().collect()
    }
}

/// Per-sentence, per-system metric values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceScores {
    values: HashMap<(String, String), f64>,
}

impl SentenceScores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sentence_id: impl Into<String>, system: impl Into<String>, value: f64) {
        self.values.insert((sentence_id.into(), system.into()), value);
    }

    pub fn get(&self, sentence_id: &str, system: &str) -> Option<f64> {
        self.values.get(&(sentence_id.to_owned(), system.to_owned())).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(String, String, f64)> for SentenceScores {
    fn from_iter<I: IntoIterator<Item = (String, String, f64)>>(iter: I) -> Self {
        let mut s = Self::new();
        for (sentence, system, v) in iter {
            s.insert(sentence, system, v);
        }
        s
    }
}

/// Statistics that do not apply to a given evaluation are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub accuracy: Option<f64>,
    pub n_pairs: usize,
    pub n_ties: usize,
    pub concordant: usize,
    pub discordant: usize,
}

/// Agreement of metric preferences with human pairwise preferences.
///
/// Metric ties are excluded from τ and count as misses for accuracy. When
/// every pair is a metric tie, τ is 0.
pub fn pairwise_eval(scores: &SentenceScores, judgments: &[PairwiseJudgment]) -> Result<CorrelationReport, MetaEvalError> {
    if judgments.is_empty() {
        return Err(MetaEvalError::Empty);
    }
    let lookup = |sentence: &str, system: &str| {
        scores.get(sentence, system).ok_or_else(|| MetaEvalError::MissingScore {
            sentence: sentence.to_owned(),
            system: system.to_owned(),
        })
    };
    let mut values = Vec::with_capacity(judgments.len() * 2);
    for j in judgments {
        if j.better == j.worse {
            return Err(MetaEvalError::SelfPair(j.sentence_id.clone()));
        }
        values.push(lookup(&j.sentence_id, &j.better)?);
        values.push(lookup(&j.sentence_id, &j.worse)?);
    }
    let pairs: Vec<(usize, usize)> = (0..judgments.len()).map(|i| (2 * i, 2 * i + 1)).collect();
    Ok(pairwise_eval_indexed(&values, &pairs))
}

/// `pairs` holds `(better, worse)` indices into `values`; must be non-empty.
pub(crate) fn pairwise_eval_indexed(values: &[f64], pairs: &[(usize, usize)]) -> CorrelationReport {
    let (mut c, mut d, mut t) = (0usize, 0usize, 0usize);
    for &(b, w) in pairs {
        let (b, w) = (values[b], values[w]);
        if b > w {
            c += 1;
        } else if b < w {
            d += 1;
        } else {
            t += 1;
        }
    }
    let decided = c + d;
    let tau = if decided == 0 { 0.0 } else { (c as f64 - d as f64) / decided as f64 };
    CorrelationReport {
        kendall_tau: Some(tau),
        accuracy: Some(c as f64 / pairs.len() as f64),
        n_pairs: pairs.len(),
        n_ties: t,
        concordant: c,
        discordant: d,
        ..Default::default()
    }
}

/// Correlation between metric system scores and a human system ranking.
pub fn system_eval(system_scores: &BTreeMap<String, f64>, human: &[SystemScore]) -> Result<CorrelationReport, MetaEvalError> {
    let human_map: BTreeMap<&str, f64> = human.iter().map(|s| (s.system.as_str(), s.human_score)).collect();
    let only_metric: Vec<String> =
        system_scores.keys().filter(|k| !human_map.contains_key(k.as_str())).cloned().collect();
    let only_human: Vec<String> =
        human_map.keys().filter(|k| !system_scores.contains_key(**k)).map(|k| k.to_string()).collect();
    if !only_metric.is_empty() || !only_human.is_empty() || human_map.len() != human.len() {
        return Err(MetaEvalError::SystemMismatch { only_metric, only_human });
    }
    if system_scores.len() < 3 {
        return Err(MetaEvalError::TooShort { need: 3, got: system_scores.len() });
    }
    let xs: Vec<f64> = system_scores.values().copied().collect();
    let ys: Vec<f64> = system_scores.keys().map(|k| human_map[k.as_str()]).collect();
    Ok(CorrelationReport {
        pearson_r: Some(pearson(&xs, &ys)?),
        spearman_rho: Some(spearman(&xs, &ys)?),
        n_pairs: xs.len(),
        ..Default::default()
    })
}

/// Train/test partition of sentence ids by domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainSplit {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl DomainSplit {
    pub fn train_judgments(&self, judgments: &[PairwiseJudgment]) -> Vec<PairwiseJudgment> {
        judgments.iter().filter(|j| self.train.contains(&j.sentence_id)).cloned().collect()
    }

    pub fn test_judgments(&self, judgments: &[PairwiseJudgment]) -> Vec<PairwiseJudgment> {
        judgments.iter().filter(|j| self.test.contains(&j.sentence_id)).cloned().collect()
    }
}

/// Sentences of `train_domains` go to training, all others to test. A
/// sentence listed under two different domains is an error.
pub fn domain_split<'a, I>(sentence_domains: I, train_domains: &[&str]) -> Result<DomainSplit, MetaEvalError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut seen: HashMap<&str, &str> = HashMap::new();
    let mut split = DomainSplit::default();
    for (id, domain) in sentence_domains {
        if let Some(prev) = seen.insert(id, domain) {
            if prev != domain {
                return Err(MetaEvalError::AmbiguousDomain(id.to_owned()));
            }
            continue;
        }
        if train_domains.contains(&domain) {
            split.train.insert(id.to_owned());
        } else {
            split.test.insert(id.to_owned());
        }
    }
    Ok(split)
}
