//! Token alignment, edit extraction, chunk partitioning and single-edit
//! sentence-pair construction.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{validate_edits, Edit, EditListError, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Match,
    Substitute,
    Insert,
    Delete,
}

/// One unit step of an alignment. Insertions have an empty `source` range,
/// deletions an empty `target` range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignOp {
    pub kind: OpKind,
    pub source: Range<usize>,
    pub target: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentScript {
    pub ops: Vec<AlignOp>,
}

impl AlignmentScript {
    /// Number of non-match steps (unit cost model).
    pub fn cost(&self) -> usize {
        self.ops.iter().filter(|op| op.kind != OpKind::Match).count()
    }

    pub fn replay<T: Clone>(&self, source: &[T], target: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(target.len());
        for op in &self.ops {
            match op.kind {
                OpKind::Match => out.extend_from_slice(&source[op.source.clone()]),
                OpKind::Substitute | OpKind::Insert => out.extend_from_slice(&target[op.target.clone()]),
                OpKind::Delete => {}
            }
        }
        out
    }
}

/// Minimal-cost alignment under unit insert/delete/substitute costs.
///
/// Among optimal scripts the backtrace prefers, from the end of both
/// sequences, a diagonal step (match or substitution), then a deletion, then
/// an insertion. The result is deterministic.
pub fn align<T: PartialEq>(source: &[T], target: &[T]) -> AlignmentScript {
    let (n, m) = (source.len(), target.len());
    let w = m + 1;
    let mut dist = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        dist[i * w] = i;
    }
    for (j, d) in dist.iter_mut().take(w).enumerate() {
        *d = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dist[(i - 1) * w + j - 1] + usize::from(source[i - 1] != target[j - 1]);
            let del = dist[(i - 1) * w + j] + 1;
            let ins = dist[i * w + j - 1] + 1;
            dist[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * w + j];
        if i > 0 && j > 0 {
            let same = source[i - 1] == target[j - 1];
            if dist[(i - 1) * w + j - 1] + usize::from(!same) == here {
                let kind = if same { OpKind::Match } else { OpKind::Substitute };
                ops.push(AlignOp { kind, source: i - 1..i, target: j - 1..j });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[(i - 1) * w + j] + 1 == here {
            ops.push(AlignOp { kind: OpKind::Delete, source: i - 1..i, target: j..j });
            i -= 1;
        } else {
            ops.push(AlignOp { kind: OpKind::Insert, source: i..i, target: j - 1..j });
            j -= 1;
        }
    }
    ops.reverse();
    AlignmentScript { ops }
}

/// Extracts edits turning `source` into `target`.
///
/// Runs of consecutive non-match steps (no match in between) become one
/// edit, so the result is sorted, non-overlapping and maximal-contiguous.
pub fn extract_edits(source: &[String], target: &[String]) -> Vec<Edit> {
    edits_from_script(&align(source, target), target)
}

pub fn edits_from_script(script: &AlignmentScript, target: &[String]) -> Vec<Edit> {
    let mut edits = Vec::new();
    let mut open: Option<(usize, usize, usize, usize)> = None;
    for op in &script.ops {
        if op.kind == OpKind::Match {
            if let Some((ss, se, ts, te)) = open.take() {
                edits.push(Edit { span_start: ss, span_end: se, replacement: target[ts..te].to_vec(), label: None });
            }
            continue;
        }
        open = Some(match open {
            Some((ss, _, ts, _)) => (ss, op.source.end, ts, op.target.end),
            None => (op.source.start, op.source.end, op.target.start, op.target.end),
        });
    }
    if let Some((ss, se, ts, te)) = open {
        edits.push(Edit { span_start: ss, span_end: se, replacement: target[ts..te].to_vec(), label: None });
    }
    edits
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("invalid edit list: {0}")]
    InvalidEdits(#[from] EditListError),
}

/// Applies sorted, non-overlapping edits right to left.
pub fn apply_edits(source: &[String], edits: &[Edit]) -> Result<Vec<String>, AlignError> {
    validate_edits(edits, source.len())?;
    let mut out = source.to_vec();
    for e in edits.iter().rev() {
        out.splice(e.span_start..e.span_end, e.replacement.iter().cloned());
    }
    Ok(out)
}

/// One tile of a [`ChunkPartition`].
///
/// `realizations[k]` is what text `k` has in place of `source[span]`; text 0
/// is the hypothesis and text `k >= 1` is reference `k - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub span: Range<usize>,
    pub realizations: Vec<Vec<String>>,
    pub changed: Vec<bool>,
}

impl Chunk {
    pub fn is_changed(&self) -> bool {
        self.changed.iter().any(|&c| c)
    }

    /// True when `edit` lies inside this chunk. Zero-width edits at an
    /// interior or boundary position of a changed chunk count as inside.
    pub fn contains(&self, edit: &Edit) -> bool {
        if self.span.is_empty() {
            return edit.is_insertion() && edit.span_start == self.span.start;
        }
        edit.span_start >= self.span.start && edit.span_end <= self.span.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPartition {
    pub chunks: Vec<Chunk>,
}

impl ChunkPartition {
    pub const HYPOTHESIS: usize = 0;

    /// Concatenation of text `k`'s realizations.
    pub fn text(&self, k: usize) -> Vec<String> {
        self.chunks.iter().flat_map(|c| c.realizations[k].iter().cloned()).collect()
    }

    pub fn chunk_of(&self, edit: &Edit) -> Option<usize> {
        self.chunks.iter().position(|c| c.is_changed() && c.contains(edit))
    }
}

/// Merges every edit span (hypothesis and references alike) into maximal
/// changed intervals and tiles the rest of the source with unchanged chunks.
///
/// Two non-empty spans merge when they share a token. A zero-width span at
/// `i` merges with any interval whose closed hull contains `i`, so an
/// insertion on the border of two changed intervals joins all three.
pub fn partition_chunks(source: &Sentence, hyp_edits: &[Edit], ref_edit_lists: &[Vec<Edit>]) -> ChunkPartition {
    let n = source.len();
    let texts: Vec<&[Edit]> = std::iter::once(hyp_edits).chain(ref_edit_lists.iter().map(Vec::as_slice)).collect();

    let mut spans: Vec<(usize, usize)> =
        texts.iter().flat_map(|es| es.iter().map(|e| (e.span_start, e.span_end))).collect();
    spans.sort_unstable();

    // (start, end, has a zero-width member at `end`)
    let mut merged: Vec<(usize, usize, bool)> = Vec::new();
    for (s, e) in spans {
        let zero = s == e;
        if let Some(last) = merged.last_mut() {
            let joins = s < last.1 || (s == last.1 && (zero || last.2));
            if joins {
                if e > last.1 {
                    last.1 = e;
                    last.2 = zero;
                } else if e == last.1 && zero {
                    last.2 = true;
                }
                continue;
            }
        }
        merged.push((s, e, zero));
    }

    let mut chunks = Vec::new();
    let unchanged = |span: Range<usize>| Chunk {
        realizations: vec![source.tokens[span.clone()].to_vec(); texts.len()],
        changed: vec![false; texts.len()],
        span,
    };
    let mut cursor = 0;
    for (s, e, _) in merged {
        if s > cursor {
            chunks.push(unchanged(cursor..s));
        }
        let span = s..e;
        let mut realizations = Vec::with_capacity(texts.len());
        let mut changed = Vec::with_capacity(texts.len());
        for edits in &texts {
            let local: Vec<Edit> = edits
                .iter()
                .filter(|ed| ed.span_start >= s && ed.span_end <= e)
                .map(|ed| Edit { span_start: ed.span_start - s, span_end: ed.span_end - s, ..ed.clone() })
                .collect();
            changed.push(!local.is_empty());
            realizations.push(apply_edits(&source.tokens[span.clone()], &local).expect("edits validated upstream"));
        }
        chunks.push(Chunk { span, realizations, changed });
        cursor = e;
    }
    if cursor < n || chunks.is_empty() {
        chunks.push(unchanged(cursor..n));
    }
    ChunkPartition { chunks }
}

/// Who produced the focal edit of a pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOrigin {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<usize>,
}

/// Single-edit contrast pair. `s1` and `s2` are the reference sentence with
/// the focal chunk holding the source text and the hypothesis text
/// respectively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPair {
    pub s1: Vec<String>,
    pub s2: Vec<String>,
    #[serde(default)]
    pub source: Vec<String>,
    #[serde(default)]
    pub edit: Edit,
    /// Source span of the chunk containing `edit`.
    #[serde(default)]
    pub chunk: Range<usize>,
    #[serde(default)]
    pub prev: Option<String>,
    #[serde(default)]
    pub next: Option<String>,
    #[serde(default)]
    pub origin: PairOrigin,
}

impl EditPair {
    /// Half-open ranges of the differing region in `s1` and `s2`, or `None`
    /// when the sentences are equal.
    pub fn differing_region(&self) -> Option<(Range<usize>, Range<usize>)> {
        diff_region(&self.s1, &self.s2)
    }
}

/// Strips the common prefix and suffix and returns what is left of each side.
pub fn diff_region<T: PartialEq>(a: &[T], b: &[T]) -> Option<(Range<usize>, Range<usize>)> {
    if a == b {
        return None;
    }
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let max_suffix = a.len().min(b.len()) - prefix;
    let suffix = a.iter().rev().zip(b.iter().rev()).take(max_suffix).take_while(|(x, y)| x == y).count();
    Some((prefix..a.len() - suffix, prefix..b.len() - suffix))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairError {
    #[error("edit {0} is not one of the hypothesis edits")]
    NotAHypothesisEdit(Edit),
    #[error("edit {0} realizes its chunk exactly as the reference does")]
    MatchesReference(Edit),
    #[error("edit {0} leaves its chunk identical to the source")]
    NoContrast(Edit),
}

/// Builds the single-edit pair for `edit`, realigning everything outside its
/// chunk to `reference`.
///
/// Hypothesis edits in other chunks are discarded; reference edits in other
/// chunks appear in both sentences.
pub fn construct_pair(source: &Sentence, reference: &[Edit], edit: &Edit, hyp_edits: &[Edit]) -> Result<EditPair, PairError> {
    if !hyp_edits.iter().any(|h| h.same_correction(edit)) {
        return Err(PairError::NotAHypothesisEdit(edit.clone()));
    }
    let partition = partition_chunks(source, hyp_edits, std::slice::from_ref(&reference.to_vec()));
    let focal = partition.chunk_of(edit).ok_or_else(|| PairError::NotAHypothesisEdit(edit.clone()))?;
    let chunk = &partition.chunks[focal];
    let src_part = &source.tokens[chunk.span.clone()];
    let hyp_part = &chunk.realizations[ChunkPartition::HYPOTHESIS];
    let ref_part = &chunk.realizations[1];
    if chunk.changed[1] && hyp_part == ref_part {
        return Err(PairError::MatchesReference(edit.clone()));
    }
    if hyp_part.as_slice() == src_part {
        return Err(PairError::NoContrast(edit.clone()));
    }

    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for (i, c) in partition.chunks.iter().enumerate() {
        if i == focal {
            s1.extend_from_slice(src_part);
            s2.extend_from_slice(hyp_part);
        } else {
            s1.extend_from_slice(&c.realizations[1]);
            s2.extend_from_slice(&c.realizations[1]);
        }
    }
    Ok(EditPair {
        s1,
        s2,
        source: source.tokens.clone(),
        edit: edit.clone(),
        chunk: chunk.span.clone(),
        prev: source.prev.clone(),
        next: source.next.clone(),
        origin: PairOrigin::default(),
    })
}
