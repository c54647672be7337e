use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use editval::align::EditPair;
use editval::judge::{judge_batch, VerdictRecord};
use serde::Serialize;
use serde_json::json;

use super::{read_rows, PairLine};
use crate::context::{Ctx, JudgeArgs};
use crate::manifest::{jsonl, write_out};
use crate::usage;

#[derive(Debug, Args)]
pub struct JudgeCmd {
    /// Pair dump written by `pairs`.
    #[arg(long)]
    pairs: PathBuf,
    #[command(flatten)]
    judge: JudgeArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// One line of a verdict dump. `s1`/`s2` are space-joined so that the dump
/// can be fed back as a lookup table.
#[derive(Serialize)]
struct VerdictLine {
    sentence_id: String,
    system: String,
    s1: String,
    s2: String,
    #[serde(flatten)]
    record: VerdictRecord,
}

pub fn run(ctx: &Ctx, args: JudgeCmd) -> Result<()> {
    let lines: Vec<PairLine> = read_rows(&ctx.inputs.read(&args.pairs)?, "pair dump")?;
    let handle = args.judge.build(ctx)?.ok_or_else(|| usage("no judge configured: pass --judge"))?;
    let pairs: Vec<EditPair> = lines.iter().map(|l| l.pair.clone()).collect();
    let outcomes = judge_batch(&pairs, handle.judge.as_ref(), handle.cache.as_ref(), ctx.jobs);

    let mut rows = Vec::new();
    let mut failures = 0;
    for (line, outcome) in lines.iter().zip(outcomes) {
        match outcome {
            Ok(v) => rows.push(VerdictLine {
                sentence_id: line.sentence_id.clone(),
                system: line.system.clone(),
                s1: line.pair.s1.join(" "),
                s2: line.pair.s2.join(" "),
                record: VerdictRecord::new(&line.pair, &v),
            }),
            Err(e) => {
                failures += 1;
                eprintln!("{} {}: {e}", line.sentence_id, line.system);
            }
        }
    }
    let manifest = ctx.inputs.manifest("judge", &json!({ "judge": handle.judge.fingerprint() }));
    write_out(args.out.as_deref(), &jsonl(&manifest, rows))?;
    if failures > 0 {
        bail!("{failures} of {} pairs could not be judged", lines.len());
    }
    Ok(())
}
