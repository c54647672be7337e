//! Shared flags and their resolution against the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context as _, Result};
use clap::Args;
use editval::corpus::{link_context, load_records, parse_m2, records_from_m2, CorpusRecord, ReferenceSet};
use editval::judge::{
    ClassifierJudge, HttpChatTransport, IclMemory, Judge, JudgeConfig, PipelineJudge, StubJudge, TableJudge, VerdictCache,
};
use editval::lm::{BigramModel, FluencyProvider, SidecarLm};
use editval::metric::MetricConfig;

use crate::config::{FileConfig, FluencyKind, JudgeKind};
use crate::manifest::Inputs;
use crate::usage;

pub const DEFAULT_JOBS: usize = 4;

pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
    pub jobs: usize,
    pub inputs: Inputs,
}

impl Ctx {
    pub fn new(config: Option<&Path>, seed: Option<u64>, jobs: Option<usize>) -> Result<Self> {
        let inputs = Inputs::default();
        let file = match config {
            Some(p) => FileConfig::parse(&inputs.read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
            None => FileConfig::default(),
        };
        let jobs = jobs.or(file.jobs).unwrap_or(DEFAULT_JOBS);
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        let seed = seed.or(file.seed).unwrap_or(0);
        Ok(Self { file, seed, jobs, inputs })
    }
}

/// Where the corpus comes from: line records, or M2 plus optional
/// hypothesis lines.
#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Line-record corpus (JSON lines).
    #[arg(long, conflicts_with = "m2")]
    pub records: Option<PathBuf>,
    /// M2 reference file; the whole file is treated as one document.
    #[arg(long)]
    pub m2: Option<PathBuf>,
    /// Hypothesis file, one tokenized sentence per line, aligned with --m2.
    #[arg(long, requires = "m2")]
    pub hyp: Option<PathBuf>,
    /// System name for --hyp (default: file stem), or the system to select.
    #[arg(long)]
    pub system: Option<String>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "doc".into())
}

pub fn tokenized_lines(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split_whitespace().map(str::to_owned).collect()).collect()
}

impl CorpusArgs {
    pub fn load(&self, ctx: &Ctx) -> Result<Vec<CorpusRecord>> {
        if let Some(p) = &self.records {
            return load_records(&ctx.inputs.read(p)?).with_context(|| format!("parsing {}", p.display()));
        }
        let Some(m2) = &self.m2 else {
            return Err(usage("a corpus is required: pass --records or --m2"));
        };
        let sets = m2_sets(ctx, m2)?;
        match &self.hyp {
            Some(h) => {
                let hyps = tokenized_lines(&ctx.inputs.read(h)?);
                let system = self.system.clone().unwrap_or_else(|| stem(h));
                Ok(records_from_m2(sets, &system, &hyps)?)
            }
            None => Ok(sets
                .into_iter()
                .map(|references| CorpusRecord { source: references.source.clone(), hypotheses: Default::default(), references })
                .collect()),
        }
    }

    /// Systems to process: `--system` when it names one, otherwise every
    /// system found in the corpus.
    pub fn systems(&self, records: &[CorpusRecord]) -> Vec<String> {
        let mut all: Vec<String> = records.iter().flat_map(|r| r.hypotheses.keys().cloned()).collect();
        all.sort();
        all.dedup();
        match &self.system {
            Some(s) if self.hyp.is_none() => vec![s.clone()],
            _ => all,
        }
    }
}

/// Parses an M2 file with doc id = file stem and linked context.
pub fn m2_sets(ctx: &Ctx, path: &Path) -> Result<Vec<ReferenceSet>> {
    let mut sets = parse_m2(&ctx.inputs.read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let doc = stem(path);
    let mut sources: Vec<_> = sets.iter().map(|s| s.source.clone()).collect();
    for s in &mut sources {
        s.doc_id = doc.clone();
    }
    link_context(&mut sources);
    for (set, src) in sets.iter_mut().zip(sources) {
        set.source = src;
    }
    Ok(sets)
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Overcorrection penalty in [0, 2].
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fluency weight in [0, 1].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Keep false positives as they are instead of asking the judge.
    #[arg(long)]
    pub no_reclassify: bool,
}

impl MetricArgs {
    pub fn resolve(&self, ctx: &Ctx) -> Result<MetricConfig> {
        let f = &ctx.file.metric;
        let d = MetricConfig::default();
        let cfg = MetricConfig {
            alpha: self.alpha.or(f.alpha).unwrap_or(d.alpha),
            beta: self.beta.or(f.beta).unwrap_or(d.beta),
            gamma: self.gamma.or(f.gamma).unwrap_or(d.gamma),
            reclassify: !self.no_reclassify && f.reclassify.unwrap_or(d.reclassify),
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    #[arg(long, value_enum)]
    pub judge: Option<JudgeKind>,
    /// Table for `--judge table`.
    #[arg(long)]
    pub judge_table: Option<PathBuf>,
    /// Verdict for pairs missing from the table; missing pairs fail without it.
    #[arg(long)]
    pub table_default: Option<bool>,
    /// Base URL for `--judge classifier`.
    #[arg(long)]
    pub classifier_url: Option<String>,
    /// Persistent verdict cache (JSON lines, appended).
    #[arg(long)]
    pub verdict_cache: Option<PathBuf>,
}

pub struct JudgeHandle {
    pub judge: Box<dyn Judge>,
    pub cache: Option<VerdictCache>,
}

impl JudgeArgs {
    pub fn build(&self, ctx: &Ctx) -> Result<Option<JudgeHandle>> {
        let f = &ctx.file.judge;
        let Some(kind) = self.judge.or(f.kind) else { return Ok(None) };
        let judge: Box<dyn Judge> = match kind {
            JudgeKind::AlwaysValid => Box::new(StubJudge::AlwaysValid),
            JudgeKind::AlwaysInvalid => Box::new(StubJudge::AlwaysInvalid),
            JudgeKind::Table => {
                let path = self.judge_table.as_ref().or(f.table.as_ref()).ok_or_else(|| usage("--judge table needs --judge-table"))?;
                let text: String = ctx
                    .inputs
                    .read(path)?
                    .lines()
                    .filter(|l| !editval::corpus::is_manifest_line(l))
                    .collect::<Vec<_>>()
                    .join("\n");
                let default = self.table_default.or(f.table_default);
                Box::new(TableJudge::from_jsonl(&text, default).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?)
            }
            JudgeKind::Classifier => {
                let url = self.classifier_url.clone().or_else(|| f.classifier_url.clone());
                Box::new(ClassifierJudge::new(url.ok_or_else(|| usage("--judge classifier needs --classifier-url"))?))
            }
            JudgeKind::Pipeline => {
                if f.turns.is_empty() {
                    return Err(usage("--judge pipeline needs [[judge.turns]] in the config file"));
                }
                let mut cfg = JudgeConfig::new(f.turns.clone());
                cfg.seed = ctx.seed;
                if let Some(p) = &f.memory {
                    cfg.memory = IclMemory::from_jsonl(&ctx.inputs.read(p)?).with_context(|| format!("parsing {}", p.display()))?;
                }
                if let Some(c) = f.context_window {
                    cfg.context_window = c;
                }
                if let Some(d) = f.demo_sampling {
                    cfg.demo_sampling = d;
                }
                Box::new(PipelineJudge::new(cfg, Arc::new(HttpChatTransport)).map_err(|e| usage(e.to_string()))?)
            }
        };
        let cache = match self.verdict_cache.as_ref().or(f.cache.as_ref()) {
            Some(p) => Some(VerdictCache::open(p).with_context(|| format!("opening cache {}", p.display()))?),
            None => None,
        };
        Ok(Some(JudgeHandle { judge, cache }))
    }
}

#[derive(Debug, Args)]
pub struct FluencyArgs {
    #[arg(long, value_enum)]
    pub fluency: Option<FluencyKind>,
    /// Training text for the bigram model, one tokenized sentence per line.
    #[arg(long)]
    pub lm_corpus: Option<PathBuf>,
    /// Base URL of the scoring service for `--fluency sidecar`.
    #[arg(long)]
    pub lm_url: Option<String>,
}

impl FluencyArgs {
    pub fn build(&self, ctx: &Ctx, records: &[CorpusRecord]) -> Result<Box<dyn FluencyProvider>> {
        let f = &ctx.file.fluency;
        match self.fluency.or(f.provider).unwrap_or_default() {
            FluencyKind::Bigram => Ok(Box::new(match self.lm_corpus.as_ref().or(f.corpus.as_ref()) {
                Some(p) => BigramModel::fit_text(&ctx.inputs.read(p)?),
                None => {
                    let refs: Vec<Vec<String>> = records.iter().flat_map(|r| r.references.reference_tokens()).collect();
                    BigramModel::fit(&refs)
                }
            })),
            FluencyKind::Sidecar => {
                let url = self.lm_url.clone().or_else(|| f.url.clone());
                Ok(Box::new(SidecarLm::new(url.ok_or_else(|| usage("--fluency sidecar needs --lm-url"))?)))
            }
        }
    }
}
