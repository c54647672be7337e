use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use editval::metric::{aggregate, score_corpus, AggregateMode};
use serde_json::json;

use crate::context::{CorpusArgs, Ctx, FluencyArgs, JudgeArgs, MetricArgs};
use crate::manifest::{jsonl, write_out};
use crate::usage;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Aggregate {
    /// Sum counts over the corpus, then compute the scores once.
    CorpusCounts,
    /// Average the per-sentence scores.
    SentenceMean,
}

impl From<Aggregate> for AggregateMode {
    fn from(a: Aggregate) -> Self {
        match a {
            Aggregate::CorpusCounts => AggregateMode::CorpusCounts,
            Aggregate::SentenceMean => AggregateMode::SentenceMean,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    judge: JudgeArgs,
    #[command(flatten)]
    fluency: FluencyArgs,
    #[arg(long, value_enum)]
    aggregate: Option<Aggregate>,
    /// Also emit one line per sentence (needed by `tune` and `metaeval`).
    #[arg(long)]
    per_sentence: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: ScoreArgs) -> Result<()> {
    let config = args.metric.resolve(ctx)?;
    let mode: AggregateMode = args.aggregate.map(Into::into).or(ctx.file.metric.aggregate).unwrap_or_default();
    let handle = args.judge.build(ctx)?;
    if config.reclassify && handle.is_none() {
        return Err(usage("reclassification needs a judge: pass --judge, or --no-reclassify"));
    }
    let records = args.corpus.load(ctx)?;
    let systems = args.corpus.systems(&records);
    if systems.is_empty() {
        return Err(usage("the corpus has no hypotheses"));
    }
    let fluency = args.fluency.build(ctx, &records)?;
    let judge = handle.as_ref().filter(|_| config.reclassify);

    let mut rows = Vec::new();
    for sys in &systems {
        let reports = score_corpus(
            &records,
            sys,
            &config,
            judge.map(|h| h.judge.as_ref()),
            judge.and_then(|h| h.cache.as_ref()),
            fluency.as_ref(),
            ctx.jobs,
        )?;
        let total = aggregate(&reports, mode, &config)?;
        if args.per_sentence {
            rows.extend(reports);
        }
        rows.push(total);
    }
    let settings = json!({
        "metric": config,
        "aggregate": mode,
        "judge": judge.map(|h| h.judge.fingerprint()),
        "fluency": fluency.id(),
        "systems": systems,
        "per_sentence": args.per_sentence,
    });
    let manifest = ctx.inputs.manifest("score", &settings);
    write_out(args.out.as_deref(), &jsonl(&manifest, rows))
}
