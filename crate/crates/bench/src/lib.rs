//! Seeded synthetic inputs for the benchmarks.

use std::collections::BTreeMap;

use editval::corpus::{Annotation, CorpusRecord, ReferenceSet, Sentence};
use editval::metaeval::{Granularity, HumanJudgments, PairwiseJudgment, ScoredItem, SystemScore};
use editval::{extract_edits, EditCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tokens(rng: &mut impl Rng, len: usize, vocab: usize) -> Vec<String> {
    (0..len).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
}

/// Copies `src` with roughly `rate` of its positions substituted, deleted or
/// followed by an insertion.
pub fn perturb(rng: &mut impl Rng, src: &[String], rate: f64, vocab: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(src.len() + 4);
    for t in src {
        if !rng.random_bool(rate) {
            out.push(t.clone());
            continue;
        }
        match rng.random_range(0..3) {
            0 => out.push(format!("w{}", rng.random_range(0..vocab))),
            1 => {}
            _ => {
                out.push(t.clone());
                out.push(format!("w{}", rng.random_range(0..vocab)));
            }
        }
    }
    out
}

/// `n` records with one system `sys`, two annotators each.
pub fn corpus(seed: u64, n: usize, len: usize) -> Vec<CorpusRecord> {
    let mut rng = rng(seed);
    (0..n)
        .map(|i| {
            let src_toks = tokens(&mut rng, len, 40);
            let source = Sentence::from_raw("bench", i, src_toks.join(" "));
            let annotations = (0..2)
                .map(|a| Annotation { annotator: a, edits: extract_edits(&src_toks, &perturb(&mut rng, &src_toks, 0.15, 40)) })
                .collect();
            let hyp = perturb(&mut rng, &src_toks, 0.15, 40);
            let mut hypotheses = BTreeMap::new();
            hypotheses.insert("sys".to_owned(), Sentence::from_raw("bench", i, hyp.join(" ")));
            CorpusRecord { references: ReferenceSet { source: source.clone(), annotations }, source, hypotheses }
        })
        .collect()
}

/// Score table for `systems` systems over `sentences` sentences, with random
/// sentence-level preferences and a system ranking.
pub fn score_table(seed: u64, systems: usize, sentences: usize) -> (Vec<ScoredItem>, HumanJudgments) {
    let mut rng = rng(seed);
    let mut items = Vec::with_capacity(systems * sentences);
    for s in 0..sentences {
        for y in 0..systems {
            let c = || 0..6u64;
            items.push(ScoredItem {
                sentence_id: format!("bench:{s}"),
                system: format!("S{y}"),
                counts: EditCounts::new(rng.random_range(c()), rng.random_range(c()), rng.random_range(c()), rng.random_range(c())),
                fluency_f: rng.random_range(0.05..0.5),
            });
        }
    }
    let pairwise = (0..sentences)
        .flat_map(|s| (1..systems).map(move |y| (s, y)))
        .map(|(s, y)| PairwiseJudgment {
            sentence_id: format!("bench:{s}"),
            better: format!("S{}", y - 1),
            worse: format!("S{y}"),
            granularity: Granularity::SentenceLevel,
        })
        .collect();
    let system_ranking =
        (0..systems).map(|y| SystemScore { system: format!("S{y}"), human_score: (systems - y) as f64 }).collect();
    (items, HumanJudgments { system_ranking, pairwise })
}
