use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::{Args, ValueEnum};
use editval::metaeval::{
    domain_split, pairwise_eval, system_eval, tune, CorrelationReport, Granularity, GridSpec, HumanJudgments, Objective,
    ScoreTable, ScoredItem, SentenceScores,
};
use editval::metric::{MetricConfig, ScoreReport};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::read_rows;
use crate::context::Ctx;
use crate::manifest::{json_doc, jsonl, write_out};
use crate::usage;

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum GranularityArg {
    Edit,
    #[default]
    Sentence,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Edit => Granularity::EditLevel,
            GranularityArg::Sentence => Granularity::SentenceLevel,
        }
    }
}

/// Human judgments shared by `tune` and `metaeval`.
#[derive(Debug, Args)]
pub struct HumanArgs {
    /// Pairwise preferences, `{sentence_id, better, worse, granularity}` per line.
    #[arg(long)]
    judgments: Option<PathBuf>,
    /// System-level human scores, `{system, human_score}` per line.
    #[arg(long)]
    ranking: Option<PathBuf>,
    /// Which pairwise judgments to use.
    #[arg(long, value_enum, default_value_t)]
    granularity: GranularityArg,
}

impl HumanArgs {
    fn load(&self, ctx: &Ctx) -> Result<HumanJudgments> {
        let read = |p: &Option<PathBuf>| -> Result<String> {
            p.as_ref().map(|p| ctx.inputs.read(p)).transpose().map(Option::unwrap_or_default)
        };
        let mut h = HumanJudgments::from_jsonl(&read(&self.judgments)?, &read(&self.ranking)?)?;
        h.pairwise = h.pairs_at(self.granularity.into());
        Ok(h)
    }
}

/// Score dump split into per-sentence and per-system lines.
struct Dump {
    sentences: Vec<ScoreReport>,
    systems: Vec<ScoreReport>,
}

fn load_dump(ctx: &Ctx, path: &Path) -> Result<Dump> {
    let rows: Vec<ScoreReport> = read_rows(&ctx.inputs.read(path)?, "score dump")?;
    let (sentences, systems) = rows.into_iter().filter(|r| r.system.is_some()).partition(|r| r.sentence_id.is_some());
    Ok(Dump { sentences, systems })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    alpha_min: Option<f64>,
    alpha_max: Option<f64>,
    alpha_step: Option<f64>,
    gamma_min: Option<f64>,
    gamma_max: Option<f64>,
    gamma_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Score dump written by `score --per-sentence`.
    #[arg(long)]
    scores: PathBuf,
    #[command(flatten)]
    human: HumanArgs,
    /// `default` (alpha 0..2, gamma 0..1, step 0.01) or a TOML file overriding
    /// `alpha_min`, `alpha_max`, `alpha_step`, `gamma_min`, `gamma_max`, `gamma_step`.
    #[arg(long, default_value = "default")]
    grid: String,
    /// `system:r`, `system:rho`, `sentence:tau` or `sentence:accuracy`.
    #[arg(long, default_value = "system:r")]
    objective: String,
    #[arg(long)]
    beta: Option<f64>,
    /// Where to write every evaluated grid point.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TuneSummary {
    alpha: f64,
    gamma: f64,
    value: f64,
    objective: String,
    grid_points: usize,
    defined_points: usize,
}

fn grid_spec(ctx: &Ctx, grid: &str, objective: Objective) -> Result<GridSpec> {
    let mut spec = GridSpec { objective, ..GridSpec::default() };
    if grid != "default" {
        let path = PathBuf::from(grid);
        let f: GridFile = toml::from_str(&ctx.inputs.read(&path)?).map_err(|e| usage(format!("{grid}: {e}")))?;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut spec.alpha_min, f.alpha_min);
        set(&mut spec.alpha_max, f.alpha_max);
        set(&mut spec.alpha_step, f.alpha_step);
        set(&mut spec.gamma_min, f.gamma_min);
        set(&mut spec.gamma_max, f.gamma_max);
        set(&mut spec.gamma_step, f.gamma_step);
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

pub fn run_tune(ctx: &Ctx, args: TuneArgs) -> Result<()> {
    let objective: Objective = args.objective.parse().map_err(|e: editval::metaeval::MetaEvalError| usage(e.to_string()))?;
    let spec = grid_spec(ctx, &args.grid, objective)?;
    let beta = args.beta.or(ctx.file.metric.beta).unwrap_or(MetricConfig::default().beta);
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(usage(format!("beta {beta} must be positive")));
    }
    let dump = load_dump(ctx, &args.scores)?;
    if dump.sentences.is_empty() {
        return Err(usage("the score dump has no per-sentence lines; rerun score with --per-sentence"));
    }
    let items: Vec<ScoredItem> = dump
        .sentences
        .into_iter()
        .map(|r| ScoredItem {
            sentence_id: r.sentence_id.unwrap_or_default(),
            system: r.system.unwrap_or_default(),
            counts: r.counts,
            fluency_f: r.fluency.f,
        })
        .collect();
    let human = args.human.load(ctx)?;
    let table = ScoreTable::new(items, beta)?;
    let eval = table.objective(objective, &human)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.jobs).build().context("starting worker pool")?;
    let result = pool.install(|| tune(&spec, &eval))?;

    let settings = json!({ "grid": spec, "beta": beta, "granularity": format!("{:?}", args.human.granularity) });
    let manifest = ctx.inputs.manifest("tune", &settings);
    if let Some(p) = &args.grid_out {
        write_out(Some(p), &jsonl(&manifest, &result.grid))?;
    }
    let summary = TuneSummary {
        alpha: result.alpha,
        gamma: result.gamma,
        value: result.value,
        objective: objective.to_string(),
        grid_points: result.grid.len(),
        defined_points: result.grid.iter().filter(|p| p.value.is_some()).count(),
    };
    write_out(args.out.as_deref(), &json_doc(&manifest, &summary))
}

#[derive(Debug, Args)]
pub struct MetaevalArgs {
    /// Score dump written by `score`; sentence-level statistics need
    /// `--per-sentence` lines.
    #[arg(long)]
    scores: PathBuf,
    #[command(flatten)]
    human: HumanArgs,
    /// `{sentence_id, domain}` per line; with --train-domains, sentence-level
    /// statistics use only the held-out domains.
    #[arg(long, requires = "train_domains")]
    domains: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    train_domains: Vec<String>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct DomainLine {
    sentence_id: String,
    domain: String,
}

#[derive(Serialize)]
struct MetaevalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    sentence: Option<CorrelationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<CorrelationReport>,
}

pub fn run_metaeval(ctx: &Ctx, args: MetaevalArgs) -> Result<()> {
    if args.human.judgments.is_none() && args.human.ranking.is_none() {
        return Err(usage("pass --judgments, --ranking or both"));
    }
    let dump = load_dump(ctx, &args.scores)?;
    let human = args.human.load(ctx)?;

    let sentence = match &args.human.judgments {
        None => None,
        Some(_) => {
            if dump.sentences.is_empty() {
                return Err(usage("the score dump has no per-sentence lines; rerun score with --per-sentence"));
            }
            let scores: SentenceScores = dump
                .sentences
                .iter()
                .map(|r| (r.sentence_id.clone().unwrap_or_default(), r.system.clone().unwrap_or_default(), r.f_x))
                .collect();
            let mut pairs = human.pairwise.clone();
            if let Some(p) = &args.domains {
                let lines: Vec<DomainLine> = read_rows(&ctx.inputs.read(p)?, "domains")?;
                let train: Vec<&str> = args.train_domains.iter().map(String::as_str).collect();
                let split = domain_split(lines.iter().map(|l| (l.sentence_id.as_str(), l.domain.as_str())), &train)?;
                pairs = split.test_judgments(&pairs);
            }
            Some(pairwise_eval(&scores, &pairs)?)
        }
    };
    let system = match &args.human.ranking {
        None => None,
        Some(_) => {
            let by_system: BTreeMap<String, f64> =
                dump.systems.iter().map(|r| (r.system.clone().unwrap_or_default(), r.f_x)).collect();
            Some(system_eval(&by_system, &human.system_ranking)?)
        }
    };
    let settings = json!({
        "granularity": format!("{:?}", args.human.granularity),
        "train_domains": args.train_domains,
    });
    let manifest = ctx.inputs.manifest("metaeval", &settings);
    write_out(args.out.as_deref(), &json_doc(&manifest, &MetaevalReport { sentence, system }))
}
