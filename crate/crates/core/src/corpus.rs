//! Parallel GEC data: sentences, edits, multi-annotator reference sets, and
//! the two interchange formats (M2 and JSON line records).
//!
//! Input is always pre-tokenized with single spaces. Tokens are opaque
//! strings compared byte-for-byte.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align;

/// A tokenized sentence together with its position in a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
}

impl Sentence {
    /// Splits `raw` on whitespace. No other tokenization happens.
    pub fn from_raw(doc_id: impl Into<String>, index: usize, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = raw.split_whitespace().map(str::to_owned).collect();
        Self { doc_id: doc_id.into(), index, tokens, raw, prev: None, next: None }
    }

    pub fn from_tokens(doc_id: impl Into<String>, index: usize, tokens: Vec<String>) -> Self {
        let raw = tokens.join(" ");
        Self { doc_id: doc_id.into(), index, tokens, raw, prev: None, next: None }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Identifier used by judgment files: `"{doc_id}:{index}"`.
    pub fn sentence_id(&self) -> String {
        format!("{}:{}", self.doc_id, self.index)
    }
}

/// A source-anchored replacement over the half-open token span
/// `[span_start, span_end)`.
///
/// A zero-width span is an insertion; an empty replacement over a non-empty
/// span is a deletion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub span_start: usize,
    pub span_end: usize,
    pub replacement: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Edit {
    pub fn new(span_start: usize, span_end: usize, replacement: &[&str]) -> Self {
        Self {
            span_start,
            span_end,
            replacement: replacement.iter().map(|s| (*s).to_owned()).collect(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn is_insertion(&self) -> bool {
        self.span_start == self.span_end
    }

    pub fn is_deletion(&self) -> bool {
        self.span_start < self.span_end && self.replacement.is_empty()
    }

    /// Span and replacement agree; the label is ignored.
    pub fn same_correction(&self, other: &Edit) -> bool {
        self.span_start == other.span_start
            && self.span_end == other.span_end
            && self.replacement == other.replacement
    }

    /// Closed hull `[start, end]` of this edit. An insertion at `i` is `[i, i]`.
    pub fn closed_hull(&self) -> (usize, usize) {
        (self.span_start, self.span_end)
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})->{:?}", self.span_start, self.span_end, self.replacement.join(" "))
    }
}

/// Why an edit list is not a valid annotation over a source of a given length.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditListError {
    #[error("edit {index} span ({start},{end}) out of range for {len} tokens")]
    OutOfRange { index: usize, start: usize, end: usize, len: usize },
    #[error("edit {index} overlaps or precedes edit {}", .index - 1)]
    Overlap { index: usize },
}

/// Checks that `edits` are sorted by start, pairwise non-overlapping, within
/// `len` tokens, and that no two insertions share a position.
pub fn validate_edits(edits: &[Edit], len: usize) -> Result<(), EditListError> {
    for (i, e) in edits.iter().enumerate() {
        if e.span_start > e.span_end || e.span_end > len {
            return Err(EditListError::OutOfRange { index: i, start: e.span_start, end: e.span_end, len });
        }
        if i > 0 {
            let p = &edits[i - 1];
            let clash = p.span_end > e.span_start
                || (p.is_insertion() && e.is_insertion() && p.span_start == e.span_start);
            if clash {
                return Err(EditListError::Overlap { index: i });
            }
        }
    }
    Ok(())
}

/// One annotator's edits for a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator: usize,
    pub edits: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub source: Sentence,
    pub annotations: Vec<Annotation>,
}

impl ReferenceSet {
    pub fn edit_lists(&self) -> Vec<Vec<Edit>> {
        self.annotations.iter().map(|a| a.edits.clone()).collect()
    }

    /// Corrected token sequence for each annotation, in annotation order.
    pub fn reference_tokens(&self) -> Vec<Vec<String>> {
        self.annotations
            .iter()
            .map(|a| align::apply_edits(&self.source.tokens, &a.edits).expect("validated annotation"))
            .collect()
    }
}

/// A source, the system outputs for it, and its references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub source: Sentence,
    pub hypotheses: BTreeMap<String, Sentence>,
    pub references: ReferenceSet,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed line prefix: {text:?}")]
    MalformedPrefix { line: usize, text: String },
    #[error("line {line}: malformed annotation: {reason}")]
    MalformedAnnotation { line: usize, reason: String },
    #[error("line {line}: span ({start},{end}) out of range for {len} tokens")]
    SpanOutOfRange { line: usize, start: i64, end: i64, len: usize },
    #[error("line {line}: annotator id {text:?} is not an integer")]
    BadAnnotator { line: usize, text: String },
    #[error("line {line}: edits for annotator {annotator} are unsorted or overlapping")]
    UnsortedEdits { line: usize, annotator: usize },
    #[error("line {line}: invalid record: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("duplicate record for doc {doc_id:?} index {index} ({what})")]
    Duplicate { doc_id: String, index: usize, what: String },
    #[error("no source record for doc {doc_id:?} index {index}")]
    MissingSource { doc_id: String, index: usize },
}

const M2_NOOP: &str = "noop";
const M2_EMPTY: &str = "-NONE-";
const M2_SEP: &str = "|||";

/// Parses M2 text into one [`ReferenceSet`] per `S` block.
///
/// Blocks get `doc_id = ""` and `index` equal to the block ordinal; no
/// context is attached (see [`link_context`]).
pub fn parse_m2(text: &str) -> Result<Vec<ReferenceSet>, CorpusError> {
    let mut out: Vec<ReferenceSet> = Vec::new();
    let mut current: Option<ReferenceSet> = None;

    for (i, raw_line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.trim().is_empty() {
            if let Some(rs) = current.take() {
                out.push(rs);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("S ").or_else(|| (line == "S").then_some("")) {
            if let Some(rs) = current.take() {
                out.push(rs);
            }
            let index = out.len();
            current = Some(ReferenceSet { source: Sentence::from_raw("", index, rest), annotations: Vec::new() });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let Some(rs) = current.as_mut() else {
                return Err(CorpusError::MalformedPrefix { line: line_no, text: line.to_owned() });
            };
            let (annotator, edit) = parse_annotation_line(rest, line_no, rs.source.len())?;
            let pos = match rs.annotations.iter().position(|a| a.annotator == annotator) {
                Some(p) => p,
                None => {
                    rs.annotations.push(Annotation { annotator, edits: Vec::new() });
                    rs.annotations.len() - 1
                }
            };
            if let Some(edit) = edit {
                let edits = &mut rs.annotations[pos].edits;
                edits.push(edit);
                if validate_edits(edits, rs.source.len()).is_err() {
                    return Err(CorpusError::UnsortedEdits { line: line_no, annotator });
                }
            }
        } else {
            return Err(CorpusError::MalformedPrefix { line: line_no, text: line.to_owned() });
        }
    }
    if let Some(rs) = current.take() {
        out.push(rs);
    }
    Ok(out)
}

fn parse_annotation_line(rest: &str, line: usize, len: usize) -> Result<(usize, Option<Edit>), CorpusError> {
    let fields: Vec<&str> = rest.split(M2_SEP).collect();
    if fields.len() < 3 {
        return Err(CorpusError::MalformedAnnotation {
            line,
            reason: format!("expected at least 3 '|||' fields, found {}", fields.len()),
        });
    }
    let annot_text = fields[fields.len() - 1].trim();
    let annotator: usize = annot_text
        .parse()
        .map_err(|_| CorpusError::BadAnnotator { line, text: annot_text.to_owned() })?;

    let mut span = fields[0].split_whitespace();
    let parse_idx = |s: Option<&str>| -> Result<i64, CorpusError> {
        s.and_then(|v| v.parse::<i64>().ok()).ok_or_else(|| CorpusError::MalformedAnnotation {
            line,
            reason: format!("bad span {:?}", fields[0]),
        })
    };
    let start = parse_idx(span.next())?;
    let end = parse_idx(span.next())?;
    let label = fields[1];
    if (start == -1 && end == -1) || label == M2_NOOP {
        return Ok((annotator, None));
    }
    if start < 0 || end < start || end as usize > len {
        return Err(CorpusError::SpanOutOfRange { line, start, end, len });
    }
    let correction = fields[2];
    let replacement = if correction == M2_EMPTY || correction.trim().is_empty() {
        Vec::new()
    } else {
        correction.split_whitespace().map(str::to_owned).collect()
    };
    let edit = Edit { span_start: start as usize, span_end: end as usize, replacement, label: Some(label.to_owned()) };
    Ok((annotator, Some(edit)))
}

/// Writes M2 text. Each block is followed by one blank line; an annotator
/// with no edits is written as a `-1 -1|||noop` line.
pub fn serialize_m2(refsets: &[ReferenceSet]) -> String {
    let mut out = String::new();
    for rs in refsets {
        out.push_str("S ");
        out.push_str(&rs.source.raw);
        out.push('\n');
        for ann in &rs.annotations {
            if ann.edits.is_empty() {
                out.push_str(&format!(
                    "A -1 -1{M2_SEP}{M2_NOOP}{M2_SEP}{M2_EMPTY}{M2_SEP}REQUIRED{M2_SEP}-NONE-{M2_SEP}{}\n",
                    ann.annotator
                ));
                continue;
            }
            for e in &ann.edits {
                let correction = if e.replacement.is_empty() { M2_EMPTY.to_owned() } else { e.replacement.join(" ") };
                let label = e.label.as_deref().unwrap_or("UNK");
                out.push_str(&format!(
                    "A {} {}{M2_SEP}{label}{M2_SEP}{correction}{M2_SEP}REQUIRED{M2_SEP}-NONE-{M2_SEP}{}\n",
                    e.span_start, e.span_end, ann.annotator
                ));
            }
        }
        out.push('\n');
    }
    out
}

/// Sets `prev`/`next` on consecutive sentences that share a `doc_id`.
pub fn link_context(sentences: &mut [Sentence]) {
    for i in 0..sentences.len() {
        let prev = (i > 0 && sentences[i - 1].doc_id == sentences[i].doc_id).then(|| sentences[i - 1].raw.clone());
        let next = (i + 1 < sentences.len() && sentences[i + 1].doc_id == sentences[i].doc_id)
            .then(|| sentences[i + 1].raw.clone());
        sentences[i].prev = prev;
        sentences[i].next = next;
    }
}

/// Role of a line record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Hypothesis,
    Reference,
}

/// One line of the line-record corpus format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub doc_id: String,
    pub index: usize,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<usize>,
    pub tokens: Vec<String>,
}

/// Reads line records and groups them into [`CorpusRecord`]s ordered by
/// first appearance of `doc_id`, then by `index`.
///
/// Reference edits are recovered with [`align::extract_edits`]. Blank lines
/// and `{"manifest": ...}` header lines are skipped.
pub fn load_records(text: &str) -> Result<Vec<CorpusRecord>, CorpusError> {
    #[derive(Default)]
    struct Pending {
        source: Option<Vec<String>>,
        hyps: BTreeMap<String, Vec<String>>,
        refs: BTreeMap<usize, Vec<String>>,
    }

    let mut doc_order: Vec<String> = Vec::new();
    let mut seen_docs: HashSet<String> = HashSet::new();
    let mut pending: HashMap<(String, usize), Pending> = HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || is_manifest_line(line) {
            continue;
        }
        let rec: LineRecord = serde_json::from_str(line).map_err(|source| CorpusError::Json { line: line_no, source })?;
        if seen_docs.insert(rec.doc_id.clone()) {
            doc_order.push(rec.doc_id.clone());
        }
        let key = (rec.doc_id.clone(), rec.index);
        let slot = pending.entry(key).or_default();
        let dup = |what: String| CorpusError::Duplicate { doc_id: rec.doc_id.clone(), index: rec.index, what };
        match rec.role {
            Role::Source => {
                if slot.source.replace(rec.tokens.clone()).is_some() {
                    return Err(dup("source".into()));
                }
            }
            Role::Hypothesis => {
                let system = rec.system.clone().ok_or_else(|| CorpusError::InvalidRecord {
                    line: line_no,
                    reason: "hypothesis record without system".into(),
                })?;
                if slot.hyps.insert(system.clone(), rec.tokens.clone()).is_some() {
                    return Err(dup(format!("system {system}")));
                }
            }
            Role::Reference => {
                let annotator = rec.annotator.ok_or_else(|| CorpusError::InvalidRecord {
                    line: line_no,
                    reason: "reference record without annotator".into(),
                })?;
                if slot.refs.insert(annotator, rec.tokens.clone()).is_some() {
                    return Err(dup(format!("annotator {annotator}")));
                }
            }
        }
    }

    let mut out = Vec::new();
    for doc in doc_order {
        let mut indices: Vec<usize> = pending.keys().filter(|(d, _)| *d == doc).map(|(_, i)| *i).collect();
        indices.sort_unstable();
        let mut sources = Vec::with_capacity(indices.len());
        let mut parts = Vec::with_capacity(indices.len());
        for idx in indices {
            let p = pending.remove(&(doc.clone(), idx)).expect("key listed");
            let Some(src) = p.source else {
                return Err(CorpusError::MissingSource { doc_id: doc.clone(), index: idx });
            };
            sources.push(Sentence::from_tokens(doc.clone(), idx, src));
            parts.push((p.hyps, p.refs));
        }
        link_context(&mut sources);
        for (source, (hyps, refs)) in sources.into_iter().zip(parts) {
            let hypotheses = hyps
                .into_iter()
                .map(|(sys, toks)| {
                    let mut s = Sentence::from_tokens(source.doc_id.clone(), source.index, toks);
                    s.prev = source.prev.clone();
                    s.next = source.next.clone();
                    (sys, s)
                })
                .collect();
            let annotations = refs
                .into_iter()
                .map(|(annotator, toks)| Annotation { annotator, edits: align::extract_edits(&source.tokens, &toks) })
                .collect();
            let references = ReferenceSet { source: source.clone(), annotations };
            out.push(CorpusRecord { source, hypotheses, references });
        }
    }
    Ok(out)
}

/// Builds records from an M2 reference file and one hypothesis sentence per
/// block under `system`.
pub fn records_from_m2(refsets: Vec<ReferenceSet>, system: &str, hypotheses: &[Vec<String>]) -> Result<Vec<CorpusRecord>, CorpusError> {
    if refsets.len() != hypotheses.len() {
        return Err(CorpusError::InvalidRecord {
            line: 0,
            reason: format!("{} M2 blocks but {} hypothesis lines", refsets.len(), hypotheses.len()),
        });
    }
    Ok(refsets
        .into_iter()
        .zip(hypotheses)
        .map(|(references, hyp)| {
            let mut h = Sentence::from_tokens(references.source.doc_id.clone(), references.source.index, hyp.clone());
            h.prev = references.source.prev.clone();
            h.next = references.source.next.clone();
            let mut hypotheses = BTreeMap::new();
            hypotheses.insert(system.to_owned(), h);
            CorpusRecord { source: references.source.clone(), hypotheses, references }
        })
        .collect())
}

/// True for the manifest header line written in front of line-record outputs.
pub fn is_manifest_line(line: &str) -> bool {
    line.trim_start().starts_with("{\"manifest\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn parse_single_sva_edit() {
        let sets = parse_m2("S I likes cats\nA 1 2|||SVA|||like|||REQUIRED|||-NONE-|||0").unwrap();
        assert_eq!(sets.len(), 1);
        let ann = &sets[0].annotations[0];
        assert_eq!(ann.annotator, 0);
        assert_eq!(ann.edits.len(), 1);
        assert!(ann.edits[0].same_correction(&Edit::new(1, 2, &["like"])));
        assert_eq!(sets[0].reference_tokens()[0], toks("I like cats"));
    }

    #[test]
    fn noop_gives_empty_annotation_and_round_trips() {
        let text = "S Fine .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n\n";
        let sets = parse_m2(text).unwrap();
        assert_eq!(sets[0].annotations, vec![Annotation { annotator: 0, edits: vec![] }]);
        assert_eq!(serialize_m2(&sets), text);
    }

    #[test]
    fn empty_input() {
        assert!(parse_m2("").unwrap().is_empty());
        assert_eq!(serialize_m2(&[]), "");
    }

    #[test]
    fn block_without_annotations() {
        let sets = parse_m2("S a b\n\nS c\n").unwrap();
        assert_eq!(sets.len(), 2);
        assert!(sets[0].annotations.is_empty());
        assert_eq!(sets[1].source.index, 1);
    }

    #[test]
    fn deletion_and_multi_annotator() {
        let text = "S a b c\nA 1 2|||U|||-NONE-|||REQUIRED|||-NONE-|||0\nA 0 0|||M|||x y|||REQUIRED|||-NONE-|||1\n\n";
        let sets = parse_m2(text).unwrap();
        assert_eq!(sets[0].annotations.len(), 2);
        assert!(sets[0].annotations[0].edits[0].is_deletion());
        assert!(sets[0].annotations[1].edits[0].is_insertion());
        assert_eq!(sets[0].reference_tokens(), vec![toks("a c"), toks("x y a b c")]);
        assert_eq!(serialize_m2(&sets), text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_m2("S a b\nX junk").unwrap_err();
        assert!(matches!(err, CorpusError::MalformedPrefix { line: 2, .. }), "{err}");

        let err = parse_m2("S a b\nA 1 5|||R|||x|||REQUIRED|||-NONE-|||0").unwrap_err();
        assert!(matches!(err, CorpusError::SpanOutOfRange { line: 2, .. }), "{err}");

        let err = parse_m2("S a b\n\nS c\nA 0 1|||R|||x|||REQUIRED|||-NONE-|||zero").unwrap_err();
        assert!(matches!(err, CorpusError::BadAnnotator { line: 4, .. }), "{err}");

        let err = parse_m2("A 0 1|||R|||x|||REQUIRED|||-NONE-|||0").unwrap_err();
        assert!(matches!(err, CorpusError::MalformedPrefix { line: 1, .. }));
    }

    #[test]
    fn unsorted_or_overlapping_edits_rejected() {
        let unsorted = "S a b c\nA 2 3|||R|||x|||REQUIRED|||-NONE-|||0\nA 0 1|||R|||y|||REQUIRED|||-NONE-|||0";
        assert!(matches!(parse_m2(unsorted).unwrap_err(), CorpusError::UnsortedEdits { line: 3, annotator: 0 }));
        let overlap = "S a b c\nA 0 2|||R|||x|||REQUIRED|||-NONE-|||0\nA 1 3|||R|||y|||REQUIRED|||-NONE-|||0";
        assert!(parse_m2(overlap).is_err());
        let double_insert = "S a b c\nA 1 1|||M|||x|||REQUIRED|||-NONE-|||0\nA 1 1|||M|||y|||REQUIRED|||-NONE-|||0";
        assert!(parse_m2(double_insert).is_err());
    }

    #[test]
    fn validate_edits_boundaries() {
        assert!(validate_edits(&[Edit::new(1, 1, &["x"]), Edit::new(1, 2, &["y"])], 3).is_ok());
        assert!(validate_edits(&[Edit::new(1, 2, &["y"]), Edit::new(2, 2, &["x"])], 3).is_ok());
        assert!(validate_edits(&[Edit::new(1, 2, &["y"]), Edit::new(1, 1, &["x"])], 3).is_err());
        assert!(validate_edits(&[Edit::new(2, 4, &[])], 3).is_err());
    }

    fn rec(doc: &str, index: usize, role: &str, extra: &str, tokens: &str) -> String {
        let toks: Vec<String> = tokens.split_whitespace().map(|t| format!("\"{t}\"")).collect();
        format!(r#"{{"doc_id":"{doc}","index":{index},"role":"{role}"{extra},"tokens":[{}]}}"#, toks.join(","))
    }

    #[test]
    fn records_context_linkage() {
        let text = [rec("d", 0, "source", "", "a ."), rec("d", 1, "source", "", "b ."), rec("d", 2, "source", "", "c .")]
            .join("\n");
        let recs = load_records(&text).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].source.prev, None);
        assert_eq!(recs[1].source.prev.as_deref(), Some("a ."));
        assert_eq!(recs[1].source.next.as_deref(), Some("c ."));
        assert_eq!(recs[2].source.next, None);
    }

    #[test]
    fn single_record_has_no_context() {
        let recs = load_records(&rec("d", 0, "source", "", "a .")).unwrap();
        assert_eq!(recs[0].source.prev, None);
        assert_eq!(recs[0].source.next, None);
    }

    #[test]
    fn two_systems_one_source() {
        let text = [
            rec("d", 0, "source", "", "He go home"),
            rec("d", 0, "hypothesis", r#","system":"s1""#, "He goes home"),
            rec("d", 0, "hypothesis", r#","system":"s2""#, "He went home"),
            rec("d", 0, "reference", r#","annotator":0"#, "He goes home"),
        ]
        .join("\n");
        let recs = load_records(&text).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].hypotheses.len(), 2);
        assert_eq!(recs[0].references.annotations[0].edits, vec![Edit::new(1, 2, &["goes"])]);
        for h in recs[0].hypotheses.values() {
            assert_eq!((h.doc_id.as_str(), h.index), ("d", 0));
        }
    }

    #[test]
    fn record_errors() {
        let dup = [rec("d", 0, "source", "", "a"), rec("d", 0, "hypothesis", r#","system":"s""#, "a"),
            rec("d", 0, "hypothesis", r#","system":"s""#, "b")].join("\n");
        assert!(matches!(load_records(&dup).unwrap_err(), CorpusError::Duplicate { .. }));
        let orphan = rec("d", 3, "hypothesis", r#","system":"s""#, "a");
        assert!(matches!(load_records(&orphan).unwrap_err(), CorpusError::MissingSource { index: 3, .. }));
        assert!(matches!(load_records("{not json").unwrap_err(), CorpusError::Json { line: 1, .. }));
    }

    #[test]
    fn documents_keep_first_appearance_order() {
        let text = [rec("z", 1, "source", "", "b"), rec("a", 0, "source", "", "x"), rec("z", 0, "source", "", "a")]
            .join("\n");
        let recs = load_records(&text).unwrap();
        let ids: Vec<String> = recs.iter().map(|r| r.source.sentence_id()).collect();
        assert_eq!(ids, ["z:0", "z:1", "a:0"]);
        assert_eq!(recs[2].source.prev, None);
        assert_eq!(recs[1].source.prev.as_deref(), Some("a"));
    }
}
