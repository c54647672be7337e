pub mod expand;
pub mod extract;
pub mod judge;
pub mod score;
pub mod tune;

use anyhow::{Context as _, Result};
use clap::ValueEnum;
use editval::align::EditPair;
use editval::corpus::{is_manifest_line, CorpusRecord, LineRecord, Role};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// One line of a pair dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairLine {
    pub sentence_id: String,
    pub system: String,
    #[serde(flatten)]
    pub pair: EditPair,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum CorpusFormat {
    #[default]
    Records,
    M2,
}

/// Parses JSON lines, skipping blanks and the manifest header.
pub fn read_rows<T: DeserializeOwned>(text: &str, what: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !is_manifest_line(l))
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{what} line {}", i + 1)))
        .collect()
}

/// Source, then hypotheses by system, then references by annotator.
pub fn line_records(records: &[CorpusRecord]) -> Vec<LineRecord> {
    let mut out = Vec::new();
    for r in records {
        let base = |role, system, annotator, tokens| LineRecord {
            doc_id: r.source.doc_id.clone(),
            index: r.source.index,
            role,
            system,
            annotator,
            tokens,
        };
        out.push(base(Role::Source, None, None, r.source.tokens.clone()));
        for (sys, h) in &r.hypotheses {
            out.push(base(Role::Hypothesis, Some(sys.clone()), None, h.tokens.clone()));
        }
        for (a, tokens) in r.references.annotations.iter().zip(r.references.reference_tokens()) {
            out.push(base(Role::Reference, None, Some(a.annotator), tokens));
        }
    }
    out
}
