use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context as _, Result};
use clap::Args;
use editval::corpus::{serialize_m2, CorpusRecord, ReferenceSet};
use editval::expand::{
    render_stats_table, stats_from_counts, CachedGenerator, CandidateOutcome, ChatGenerator, Expander, ExpansionStats,
    GenerationCache, Generator, GeneratorFailure, RefProvenance,
};
use editval::judge::HttpChatTransport;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{line_records, read_rows, CorpusFormat};
use crate::context::{CorpusArgs, Ctx, JudgeArgs};
use crate::manifest::{json_doc, jsonl, write_out, write_with_sidecar};
use crate::usage;

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Corpus whose first reference per sentence seeds the expansion.
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    judge: JudgeArgs,
    /// Generation cache (JSON lines, appended); required with --offline.
    #[arg(long)]
    generation_cache: Option<PathBuf>,
    /// Answer every generation from the cache; misses count as failures.
    #[arg(long)]
    offline: bool,
    #[arg(long, value_enum, default_value_t)]
    format: CorpusFormat,
    /// Per-sentence candidates, verdicts and provenance.
    #[arg(long)]
    decisions: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// One line of a decisions dump.
#[derive(Debug, Serialize, Deserialize)]
pub struct DecisionLine {
    pub sentence_id: String,
    pub pre_filter: usize,
    pub post_filter: usize,
    pub exhausted: Vec<String>,
    pub failures: Vec<GeneratorFailure>,
    pub outcomes: Vec<CandidateOutcome>,
    pub provenance: Vec<RefProvenance>,
}

fn generators(ctx: &Ctx, args: &ExpandArgs) -> Result<Vec<Box<dyn Generator>>> {
    let endpoints = &ctx.file.expand.generators;
    if endpoints.is_empty() {
        return Err(usage("expand needs [[expand.generators]] in the config file"));
    }
    let cache = match args.generation_cache.as_ref().or(ctx.file.expand.cache.as_ref()) {
        Some(p) => Some(Arc::new(GenerationCache::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None if args.offline => return Err(usage("--offline needs --generation-cache")),
        None => None,
    };
    Ok(endpoints
        .iter()
        .map(|ep| -> Box<dyn Generator> {
            match &cache {
                Some(c) if args.offline => Box::new(CachedGenerator::replay(ep.name.clone(), ep.model.clone(), c.clone())),
                Some(c) => Box::new(CachedGenerator::new(Box::new(ChatGenerator::new(ep.clone(), Arc::new(HttpChatTransport))), c.clone())),
                None => Box::new(ChatGenerator::new(ep.clone(), Arc::new(HttpChatTransport))),
            }
        })
        .collect())
}

pub fn run_expand(ctx: &Ctx, args: ExpandArgs) -> Result<()> {
    let handle = args.judge.build(ctx)?.ok_or_else(|| usage("expand needs a judge: pass --judge"))?;
    let gens = generators(ctx, &args)?;
    let records = args.corpus.load(ctx)?;
    let mut expander = Expander::new(gens.iter().map(|g| g.as_ref()).collect(), handle.judge.as_ref());
    expander.cache = handle.cache.as_ref();
    expander.max_in_flight = ctx.jobs;

    let mut expanded = Vec::with_capacity(records.len());
    let mut decisions = Vec::with_capacity(records.len());
    for r in &records {
        let id = r.source.sentence_id();
        let Some(seed) = r.references.reference_tokens().into_iter().next() else {
            log::warn!("{id}: no reference to expand from; kept as is");
            expanded.push(r.clone());
            continue;
        };
        let exp = match expander.expand(&r.source, &seed) {
            Ok(e) => e,
            Err(e) => {
                log::warn!("{id}: {e}; kept as is");
                expanded.push(r.clone());
                continue;
            }
        };
        decisions.push(DecisionLine {
            sentence_id: id,
            pre_filter: exp.pre_filter_count(),
            post_filter: exp.expanded.references.len(),
            exhausted: exp.candidates.exhausted.clone(),
            failures: exp.candidates.failures.clone(),
            outcomes: exp.outcomes.clone(),
            provenance: exp.expanded.provenance.clone(),
        });
        let references = exp.expanded.to_reference_set();
        expanded.push(CorpusRecord { source: r.source.clone(), hypotheses: r.hypotheses.clone(), references });
    }

    let settings = json!({
        "judge": handle.judge.fingerprint(),
        "generators": gens.iter().map(|g| format!("{}/{}", g.id(), g.model())).collect::<Vec<_>>(),
        "offline": args.offline,
    });
    let manifest = ctx.inputs.manifest("expand", &settings);
    if let Some(p) = &args.decisions {
        write_out(Some(p), &jsonl(&manifest, &decisions))?;
    }
    let out = args.out.as_deref();
    match args.format {
        CorpusFormat::Records => write_out(out, &jsonl(&manifest, line_records(&expanded))),
        CorpusFormat::M2 => {
            let sets: Vec<ReferenceSet> = expanded.into_iter().map(|r| r.references).collect();
            write_with_sidecar(out, &serialize_m2(&sets), &manifest)
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Decisions dump from `expand`; gives both pre- and post-filter counts.
    #[arg(long, conflicts_with_all = ["records", "m2"])]
    decisions: Option<PathBuf>,
    /// Expanded corpus; gives post-filter counts only.
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Emit JSON with a manifest instead of the text table.
    #[arg(long)]
    json: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StatsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pre: Option<ExpansionStats>,
    post: ExpansionStats,
}

pub fn run_stats(ctx: &Ctx, args: StatsArgs) -> Result<()> {
    let (pre, post) = match &args.decisions {
        Some(p) => {
            let lines: Vec<DecisionLine> = read_rows(&ctx.inputs.read(p)?, "decisions")?;
            let pre: Vec<usize> = lines.iter().map(|l| l.pre_filter).collect();
            let post: Vec<usize> = lines.iter().map(|l| l.post_filter).collect();
            (Some(stats_from_counts(&pre)?), stats_from_counts(&post)?)
        }
        None => {
            let records = args.corpus.load(ctx)?;
            let post: Vec<usize> = records.iter().map(|r| r.references.annotations.len()).collect();
            (None, stats_from_counts(&post)?)
        }
    };
    let text = if args.json {
        let manifest = ctx.inputs.manifest("stats", &json!({}));
        json_doc(&manifest, &StatsReport { pre, post })
    } else {
        render_stats_table(pre.as_ref(), &post)
    };
    write_out(args.out.as_deref(), &text)
}
