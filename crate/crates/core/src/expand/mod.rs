//! Reference expansion: generate candidate corrections with several models,
//! keep those whose novel edits all pass the judge.

mod generator;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{construct_pair, extract_edits, EditPair, PairError};
use crate::corpus::{Annotation, ReferenceSet, Sentence};
use crate::judge::{fill, judge_batch, sha256_hex, Judge, VerdictCache, VerdictRecord, GENERATION};

pub use generator::{CachedGenerator, CachedResponse, ChatGenerator, GenerationCache, Generator, ScriptedGenerator};

/// Printed by a generator that has nothing to add beyond the seed reference.
pub const EXHAUSTED_SENTINEL: &str = "ONLY one reference!";

/// Provenance tag of the seed reference.
pub const SEED: &str = "seed";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("seed reference is empty")]
    EmptyReference,
    #[error("generator output has neither corrections nor the sentinel: {0:?}")]
    Unparseable(String),
    #[error("at least one generator is required")]
    NoGenerators,
    #[error("cannot summarize an empty list of reference sets")]
    Empty,
}

pub fn render_generation_prompt(source: &[String], seed_reference: &[String]) -> Result<String, ExpandError> {
    if seed_reference.is_empty() {
        return Err(ExpandError::EmptyReference);
    }
    Ok(fill(
        GENERATION,
        &[("original_sentence", &source.join(" ")), ("reference_sentence", &seed_reference.join(" "))],
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generation {
    Candidates(Vec<Vec<String>>),
    Exhausted,
}

fn correction_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*\[\s*correction\s*\d*\s*\]\s*(.*?)\s*$").expect("valid regex"))
}

/// Extracts `[correction N] ...` lines in order. The sentinel anywhere in the
/// text wins over any corrections; other lines are ignored.
pub fn parse_generation(text: &str) -> Result<Generation, ExpandError> {
    if text.contains(EXHAUSTED_SENTINEL) {
        return Ok(Generation::Exhausted);
    }
    let candidates: Vec<Vec<String>> = text
        .lines()
        .filter_map(|l| correction_line().captures(l))
        .map(|c| c[1].split_whitespace().map(str::to_owned).collect::<Vec<_>>())
        .filter(|t| !t.is_empty())
        .collect();
    if candidates.is_empty() {
        let snippet: String = text.chars().take(80).collect();
        return Err(ExpandError::Unparseable(snippet));
    }
    Ok(Generation::Candidates(candidates))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<String>,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorFailure {
    pub generator: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub source: Sentence,
    pub seed_reference: Vec<String>,
    /// Deduplicated, in generator order then output order; never equal to
    /// the seed.
    pub candidates: Vec<Candidate>,
    /// Generators that answered with the sentinel.
    pub exhausted: Vec<String>,
    pub failures: Vec<GeneratorFailure>,
}

impl CandidateSet {
    /// True when every generator that answered emitted the sentinel.
    pub fn is_exhausted(&self) -> bool {
        self.candidates.is_empty() && !self.exhausted.is_empty()
    }
}

/// Queries every generator (concurrently) and deduplicates the candidates.
/// A failing generator is recorded and skipped.
pub fn gather_candidates(
    source: &Sentence,
    seed_reference: &[String],
    generators: &[&dyn Generator],
) -> Result<CandidateSet, ExpandError> {
    if generators.is_empty() {
        return Err(ExpandError::NoGenerators);
    }
    let prompt = render_generation_prompt(&source.tokens, seed_reference)?;
    let outputs: Vec<Result<Generation, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = generators
            .iter()
            .map(|g| {
                let prompt = &prompt;
                scope.spawn(move || {
                    g.generate(prompt).map_err(|e| e.to_string()).and_then(|t| parse_generation(&t).map_err(|e| e.to_string()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generator thread panicked")).collect()
    });

    let mut seen: HashSet<Vec<String>> = HashSet::from([seed_reference.to_vec()]);
    let mut set = CandidateSet {
        source: source.clone(),
        seed_reference: seed_reference.to_vec(),
        candidates: Vec::new(),
        exhausted: Vec::new(),
        failures: Vec::new(),
    };
    for (g, out) in generators.iter().zip(outputs) {
        match out {
            Ok(Generation::Exhausted) => set.exhausted.push(g.id().to_owned()),
            Ok(Generation::Candidates(cands)) => {
                for tokens in cands {
                    if seen.insert(tokens.clone()) {
                        set.candidates.push(Candidate { tokens, generator: g.id().to_owned() });
                    }
                }
            }
            Err(message) => {
                log::warn!("generator {} failed: {message}", g.id());
                set.failures.push(GeneratorFailure { generator: g.id().to_owned(), message });
            }
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefProvenance {
    pub generator: String,
    /// Hash of the verdicts that admitted the reference; `None` for the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedReferenceSet {
    pub source: Sentence,
    /// Seed first, then accepted candidates.
    pub references: Vec<Vec<String>>,
    pub provenance: Vec<RefProvenance>,
}

impl ExpandedReferenceSet {
    /// One annotator per reference, edits extracted against the source.
    pub fn to_reference_set(&self) -> ReferenceSet {
        ReferenceSet {
            source: self.source.clone(),
            annotations: self
                .references
                .iter()
                .enumerate()
                .map(|(i, r)| Annotation { annotator: i, edits: extract_edits(&self.source.tokens, r) })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum Decision {
    Accepted,
    /// At least one novel edit was judged invalid.
    Invalid,
    /// The candidate introduces no edit beyond the seed's.
    NoNovelEdits,
    /// The judge failed on one of the candidate's pairs.
    JudgeError(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub candidate: Candidate,
    pub decision: Decision,
    pub verdicts: Vec<VerdictRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub candidates: CandidateSet,
    pub outcomes: Vec<CandidateOutcome>,
    pub expanded: ExpandedReferenceSet,
}

impl Expansion {
    /// Reference count before filtering: the seed plus every candidate.
    pub fn pre_filter_count(&self) -> usize {
        1 + self.candidates.candidates.len()
    }
}

/// Pairs for the candidate's novel edits, built on the seed reference frame.
/// Edits whose chunk the seed already realizes identically are not novel.
fn novel_pairs(source: &Sentence, seed_edits: &[crate::corpus::Edit], candidate: &[String]) -> Vec<Result<EditPair, PairError>> {
    let cand_edits = extract_edits(&source.tokens, candidate);
    let mut seen = HashSet::new();
    cand_edits
        .iter()
        .filter(|e| !seed_edits.iter().any(|s| s.same_correction(e)))
        .map(|e| construct_pair(source, seed_edits, e, &cand_edits))
        .filter(|p| !matches!(p, Err(PairError::MatchesReference(_))))
        .filter(|p| match p {
            Ok(pair) => seen.insert((pair.s1.clone(), pair.s2.clone())),
            Err(_) => true,
        })
        .collect()
}

/// Expansion settings shared across sentences.
pub struct Expander<'a> {
    pub generators: Vec<&'a dyn Generator>,
    pub judge: &'a dyn Judge,
    pub cache: Option<&'a VerdictCache>,
    pub max_in_flight: usize,
}

impl<'a> Expander<'a> {
    pub fn new(generators: Vec<&'a dyn Generator>, judge: &'a dyn Judge) -> Self {
        Self { generators, judge, cache: None, max_in_flight: 4 }
    }

    pub fn expand(&self, source: &Sentence, seed_reference: &[String]) -> Result<Expansion, ExpandError> {
        let candidates = gather_candidates(source, seed_reference, &self.generators)?;
        Ok(self.filter(candidates))
    }

    /// Judges every candidate and keeps those whose novel edits are all
    /// valid. Candidates identical to the source or with no novel edit are
    /// rejected.
    pub fn filter(&self, candidates: CandidateSet) -> Expansion {
        let source = &candidates.source;
        let seed_edits = extract_edits(&source.tokens, &candidates.seed_reference);
        let per_candidate: Vec<Vec<Result<EditPair, PairError>>> = candidates
            .candidates
            .iter()
            .map(|c| {
                novel_pairs(source, &seed_edits, &c.tokens)
                    .into_iter()
                    .map(|p| {
                        p.map(|mut pair| {
                            pair.origin.system = Some(c.generator.clone());
                            pair
                        })
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<EditPair> = per_candidate.iter().flatten().filter_map(|p| p.as_ref().ok().cloned()).collect();
        let mut verdicts = judge_batch(&flat, self.judge, self.cache, self.max_in_flight).into_iter();

        let mut expanded = ExpandedReferenceSet {
            source: source.clone(),
            references: vec![candidates.seed_reference.clone()],
            provenance: vec![RefProvenance { generator: SEED.into(), verdict_hash: None }],
        };
        let mut outcomes = Vec::with_capacity(candidates.candidates.len());
        for (cand, pairs) in candidates.candidates.iter().zip(&per_candidate) {
            let mut records = Vec::new();
            let mut decision = if pairs.is_empty() { Decision::NoNovelEdits } else { Decision::Accepted };
            for p in pairs {
                match p {
                    Ok(pair) => match verdicts.next().expect("one verdict per pair") {
                        Ok(v) => {
                            if !v.valid && decision == Decision::Accepted {
                                decision = Decision::Invalid;
                            }
                            records.push(VerdictRecord::new(pair, &v));
                        }
                        Err(e) => {
                            if !matches!(decision, Decision::JudgeError(_)) {
                                decision = Decision::JudgeError(e.to_string());
                            }
                        }
                    },
                    Err(_) => {
                        if decision == Decision::Accepted {
                            decision = Decision::Invalid;
                        }
                    }
                }
            }
            if decision == Decision::Accepted {
                let hash = sha256_hex(serde_json::to_string(&records).expect("records serialize").as_bytes());
                expanded.references.push(cand.tokens.clone());
                expanded.provenance.push(RefProvenance { generator: cand.generator.clone(), verdict_hash: Some(hash) });
            }
            outcomes.push(CandidateOutcome { candidate: cand.clone(), decision, verdicts: records });
        }
        Expansion { candidates, outcomes, expanded }
    }
}

pub fn expand_sentence(
    source: &Sentence,
    seed_reference: &[String],
    generators: &[&dyn Generator],
    judge: &dyn Judge,
) -> Result<Expansion, ExpandError> {
    Expander::new(generators.to_vec(), judge).expand(source, seed_reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStats {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 for a single sentence.
    pub sd: f64,
    pub max: usize,
    pub n: usize,
}

pub fn stats_from_counts(counts: &[usize]) -> Result<ExpansionStats, ExpandError> {
    if counts.is_empty() {
        return Err(ExpandError::Empty);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let sd = if counts.len() < 2 {
        0.0
    } else {
        (counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(ExpansionStats { mean, sd, max: counts.iter().copied().max().unwrap_or(0), n: counts.len() })
}

pub fn expansion_stats(sets: &[ExpandedReferenceSet]) -> Result<ExpansionStats, ExpandError> {
    stats_from_counts(&sets.iter().map(|s| s.references.len()).collect::<Vec<_>>())
}

/// Mean / S.D. / Max rows with a column per snapshot.
pub fn render_stats_table(pre: Option<&ExpansionStats>, post: &ExpansionStats) -> String {
    let mut cols: Vec<(&str, &ExpansionStats)> = Vec::new();
    if let Some(p) = pre {
        cols.push(("Pre-J", p));
    }
    cols.push(("Post-J", post));
    let mut out = format!("{:<6}", "");
    for (name, _) in &cols {
        let _ = write!(out, " {name:>8}");
    }
    out.push('\n');
    type Cell = fn(&ExpansionStats) -> String;
    let rows: [(&str, Cell); 3] = [
        ("Mean", |s| format!("{:.2}", s.mean)),
        ("S.D.", |s| format!("{:.2}", s.sd)),
        ("Max", |s| s.max.to_string()),
    ];
    for (label, f) in rows {
        let _ = write!(out, "{label:<6}");
        for (_, s) in &cols {
            let _ = write!(out, " {:>8}", f(s));
        }
        out.push('\n');
    }
    out
}
