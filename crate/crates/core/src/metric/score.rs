use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    classify_edits, comprehensive, fluency_score, generalized_f, generalized_precision, recall, reclassify, Classification,
    EditCounts, FluencyError, FluencyResult, MetricConfig, MetricError,
};
use crate::align::{construct_pair, extract_edits, EditPair, PairError};
use crate::corpus::CorpusRecord;
use crate::judge::{judge_batch, Judge, JudgeError, VerdictCache};
use crate::lm::{FluencyProvider, LmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub counts: EditCounts,
    pub p_g: f64,
    pub r: f64,
    pub f_beta_g: f64,
    pub fluency: FluencyResult,
    pub f_x: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    #[default]
    CorpusCounts,
    SentenceMean,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Fluency(#[from] FluencyError),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("sentence {sentence} has no hypothesis from system {system:?}")]
    MissingHypothesis { sentence: String, system: String },
    #[error("reclassification is enabled but no judge was supplied")]
    NoJudge,
}

/// Classification of one hypothesis plus the single-edit pairs of its false
/// positives, built against the selected reference.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sentence_id: String,
    pub system: String,
    pub hypothesis: Vec<String>,
    pub classification: Classification,
    /// Aligned with `classification.fp_edits`.
    pub pairs: Vec<Result<EditPair, PairError>>,
}

impl Prepared {
    /// Pairs that need a judge verdict, with their false-positive index.
    pub fn judgeable(&self) -> impl Iterator<Item = (usize, &EditPair)> {
        self.pairs.iter().enumerate().filter_map(|(i, p)| p.as_ref().ok().map(|p| (i, p)))
    }

    /// Per-false-positive validity given one verdict per [`Self::judgeable`]
    /// pair, in that order.
    ///
    /// A false positive whose chunk already equals the reference realization
    /// counts as valid; one that leaves its chunk unchanged counts as invalid.
    pub fn validity(&self, verdicts: &[bool]) -> Vec<Option<bool>> {
        let mut it = verdicts.iter().copied();
        self.pairs
            .iter()
            .map(|p| match p {
                Ok(_) => it.next(),
                Err(PairError::MatchesReference(_)) => Some(true),
                Err(_) => Some(false),
            })
            .collect()
    }
}

pub fn prepare(record: &CorpusRecord, system: &str, config: &MetricConfig) -> Result<Prepared, ScoreError> {
    config.validate()?;
    let source = &record.source;
    let hyp = record.hypotheses.get(system).ok_or_else(|| ScoreError::MissingHypothesis {
        sentence: source.sentence_id(),
        system: system.to_owned(),
    })?;
    let hyp_edits = extract_edits(&source.tokens, &hyp.tokens);
    let ref_lists = record.references.edit_lists();
    let classification = classify_edits(&hyp_edits, &ref_lists, source, config.beta)?;
    let reference = &ref_lists[classification.selected_ref];
    let annotator = record.references.annotations.get(classification.selected_ref).map(|a| a.annotator);
    let pairs = classification
        .fp_edits
        .iter()
        .map(|fp| {
            construct_pair(source, reference, &fp.edit, &hyp_edits).map(|mut p| {
                p.origin.system = Some(system.to_owned());
                p.origin.annotator = annotator;
                p
            })
        })
        .collect();
    Ok(Prepared {
        sentence_id: source.sentence_id(),
        system: system.to_owned(),
        hypothesis: hyp.tokens.clone(),
        classification,
        pairs,
    })
}

/// Completes a prepared sentence. `validity` is only consulted when
/// `config.reclassify` is set.
pub fn finish(
    prepared: &Prepared,
    validity: &[Option<bool>],
    fluency: FluencyResult,
    config: &MetricConfig,
) -> Result<ScoreReport, ScoreError> {
    let c = &prepared.classification;
    let counts = if config.reclassify { reclassify(&c.counts, &c.fp_edits, validity)? } else { c.counts };
    let p_g = generalized_precision(&counts, config.alpha);
    let r = recall(&counts);
    let f_beta_g = generalized_f(&counts, config.alpha, config.beta);
    Ok(ScoreReport {
        sentence_id: Some(prepared.sentence_id.clone()),
        system: Some(prepared.system.clone()),
        counts,
        p_g,
        r,
        f_beta_g,
        fluency,
        f_x: comprehensive(f_beta_g, fluency.f, config.gamma),
    })
}

pub fn score(
    record: &CorpusRecord,
    system: &str,
    config: &MetricConfig,
    judge: Option<&dyn Judge>,
    fluency: &dyn FluencyProvider,
) -> Result<ScoreReport, ScoreError> {
    let prepared = prepare(record, system, config)?;
    let validity = if config.reclassify {
        let judge = judge.ok_or(ScoreError::NoJudge)?;
        let verdicts =
            prepared.judgeable().map(|(_, p)| judge.judge(p).map(|v| v.valid)).collect::<Result<Vec<_>, _>>()?;
        prepared.validity(&verdicts)
    } else {
        Vec::new()
    };
    let fl = fluency_score(&fluency.logprobs(&prepared.hypothesis)?)?;
    finish(&prepared, &validity, fl, config)
}

/// Scores every record for `system`, judging all false-positive pairs in one
/// deduplicated, cached batch of at most `jobs` concurrent judge calls.
pub fn score_corpus(
    records: &[CorpusRecord],
    system: &str,
    config: &MetricConfig,
    judge: Option<&dyn Judge>,
    cache: Option<&VerdictCache>,
    fluency: &dyn FluencyProvider,
    jobs: usize,
) -> Result<Vec<ScoreReport>, ScoreError> {
    let prepared = records.iter().map(|r| prepare(r, system, config)).collect::<Result<Vec<_>, _>>()?;
    let mut verdicts: Vec<Vec<bool>> = vec![Vec::new(); prepared.len()];
    if config.reclassify {
        let judge = judge.ok_or(ScoreError::NoJudge)?;
        let mut owners = Vec::new();
        let mut pairs = Vec::new();
        for (i, p) in prepared.iter().enumerate() {
            for (_, pair) in p.judgeable() {
                owners.push(i);
                pairs.push(pair.clone());
            }
        }
        for (owner, outcome) in owners.into_iter().zip(judge_batch(&pairs, judge, cache, jobs)) {
            verdicts[owner].push(outcome?.valid);
        }
    }
    prepared
        .iter()
        .zip(&verdicts)
        .map(|(p, v)| {
            let fl = fluency_score(&fluency.logprobs(&p.hypothesis)?)?;
            finish(p, &p.validity(v), fl, config)
        })
        .collect()
}

/// Combines sentence reports into one system report.
///
/// `CorpusCounts` sums the counts and recomputes precision, recall and F
/// once. `SentenceMean` averages every per-sentence score. Both modes report
/// summed counts and the mean fluency (`h` and `f` averaged separately).
pub fn aggregate(reports: &[ScoreReport], mode: AggregateMode, config: &MetricConfig) -> Result<ScoreReport, ScoreError> {
    config.validate()?;
    if reports.is_empty() {
        return Err(MetricError::Empty.into());
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&ScoreReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let counts: EditCounts = reports.iter().map(|r| r.counts).sum();
    let fluency = FluencyResult { h: mean(|r| r.fluency.h), f: mean(|r| r.fluency.f) };
    let system = reports[0].system.clone().filter(|s| reports.iter().all(|r| r.system.as_deref() == Some(s)));
    let sentence_id =
        reports[0].sentence_id.clone().filter(|s| reports.iter().all(|r| r.sentence_id.as_deref() == Some(s)));
    let (p_g, r, f_beta_g, f_x) = match mode {
        AggregateMode::CorpusCounts => {
            let f_beta_g = generalized_f(&counts, config.alpha, config.beta);
            (
                generalized_precision(&counts, config.alpha),
                recall(&counts),
                f_beta_g,
                comprehensive(f_beta_g, fluency.f, config.gamma),
            )
        }
        AggregateMode::SentenceMean => (mean(|r| r.p_g), mean(|r| r.r), mean(|r| r.f_beta_g), mean(|r| r.f_x)),
    };
    Ok(ScoreReport { sentence_id, system, counts, p_g, r, f_beta_g, fluency, f_x })
}
