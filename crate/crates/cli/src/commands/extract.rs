use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};
use editval::corpus::{link_context, serialize_m2, Annotation, CorpusRecord, Edit, ReferenceSet, Sentence};
use editval::metric::{prepare, MetricConfig};
use editval::extract_edits;
use serde::Serialize;
use serde_json::json;

use super::{line_records, PairLine};
use crate::context::{tokenized_lines, CorpusArgs, Ctx};
use crate::manifest::{jsonl, write_out, write_with_sidecar};
use crate::usage;

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum ExtractFormat {
    /// Line records.
    #[default]
    Records,
    M2,
    /// One line of edits per hypothesis and reference.
    Edits,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Source sentences, one per line; pair with --tgt to build references.
    #[arg(long, requires = "tgt", conflicts_with_all = ["records", "m2"])]
    src: Option<PathBuf>,
    /// Corrected sentences aligned with --src.
    #[arg(long, requires = "src")]
    tgt: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: ExtractFormat,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EditLine<'a> {
    sentence_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annotator: Option<usize>,
    edits: Vec<Edit>,
}

fn parallel(ctx: &Ctx, src: &Path, tgt: &Path) -> Result<Vec<CorpusRecord>> {
    let sources = tokenized_lines(&ctx.inputs.read(src)?);
    let targets = tokenized_lines(&ctx.inputs.read(tgt)?);
    if sources.len() != targets.len() {
        return Err(usage(format!("{} source lines but {} target lines", sources.len(), targets.len())));
    }
    let doc = src.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut sents: Vec<Sentence> = sources.into_iter().enumerate().map(|(i, t)| Sentence::from_tokens(doc.clone(), i, t)).collect();
    link_context(&mut sents);
    Ok(sents
        .into_iter()
        .zip(targets)
        .map(|(source, t)| {
            let edits = extract_edits(&source.tokens, &t);
            let references = ReferenceSet { source: source.clone(), annotations: vec![Annotation { annotator: 0, edits }] };
            CorpusRecord { source, hypotheses: Default::default(), references }
        })
        .collect())
}

pub fn run_extract(ctx: &Ctx, args: ExtractArgs) -> Result<()> {
    let records = match (&args.src, &args.tgt) {
        (Some(s), Some(t)) => parallel(ctx, s, t)?,
        _ => args.corpus.load(ctx)?,
    };
    let format = format!("{:?}", args.format).to_lowercase();
    let manifest = ctx.inputs.manifest("extract", &json!({ "format": format }));
    let out = args.out.as_deref();
    match args.format {
        ExtractFormat::Records => write_out(out, &jsonl(&manifest, line_records(&records))),
        ExtractFormat::M2 => {
            let sets: Vec<ReferenceSet> = records.iter().map(|r| r.references.clone()).collect();
            write_with_sidecar(out, &serialize_m2(&sets), &manifest)
        }
        ExtractFormat::Edits => {
            let mut rows = Vec::new();
            for r in &records {
                let id = r.source.sentence_id();
                for (sys, h) in &r.hypotheses {
                    let edits = extract_edits(&r.source.tokens, &h.tokens);
                    rows.push(EditLine { sentence_id: id.clone(), system: Some(sys), annotator: None, edits });
                }
                for a in &r.references.annotations {
                    rows.push(EditLine { sentence_id: id.clone(), system: None, annotator: Some(a.annotator), edits: a.edits.clone() });
                }
            }
            write_out(out, &jsonl(&manifest, rows))
        }
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Every false positive that can be judged, as a contrast pair built on its
/// selected reference.
pub fn run_pairs(ctx: &Ctx, args: PairsArgs) -> Result<()> {
    let records = args.corpus.load(ctx)?;
    let systems = args.corpus.systems(&records);
    if systems.is_empty() {
        return Err(usage("the corpus has no hypotheses"));
    }
    let config = MetricConfig::default();
    let mut rows = Vec::new();
    for sys in &systems {
        for r in &records {
            let prepared = prepare(r, sys, &config)?;
            for p in &prepared.pairs {
                match p {
                    Ok(pair) => rows.push(PairLine { sentence_id: prepared.sentence_id.clone(), system: sys.clone(), pair: pair.clone() }),
                    Err(e) => log::info!("{} {sys}: {e}", prepared.sentence_id),
                }
            }
        }
    }
    let manifest = ctx.inputs.manifest("pairs", &json!({ "systems": systems }));
    write_out(args.out.as_deref(), &jsonl(&manifest, rows))
}
