mod common;

use std::sync::Arc;

use common::{endpoint, toks, QueueTransport};
use editval::corpus::Sentence;
use editval::expand::{
    expansion_stats, gather_candidates, render_stats_table, stats_from_counts, CachedGenerator, ChatGenerator, Decision,
    Expander, GenerationCache, Generator, ScriptedGenerator, SEED,
};
use editval::judge::{StubJudge, TableJudge, VerdictCache};

const SOURCE: &str = "He go to school yesterday";
const SEED_REF: &str = "He went to school yesterday";

fn source() -> Sentence {
    Sentence::from_raw("essay", 0, SOURCE)
}

fn generators() -> (ScriptedGenerator, ScriptedGenerator) {
    let a = ScriptedGenerator::always(
        "gen-a",
        "[correction 1] He went to the school yesterday\n[correction 2] He goes to school yesterday",
    );
    let b = ScriptedGenerator::always(
        "gen-b",
        "Sure.\n[correction 1] He went to school yesterday\n[correction 2] He went to the school yesterday\n[correction 3] He went to school yesterday .",
    );
    (a, b)
}

fn table() -> TableJudge {
    TableJudge::new(
        [
            ((SEED_REF.to_owned(), "He went to the school yesterday".to_owned()), true),
            // inside the focal chunk s1 keeps the source text
            ((SOURCE.to_owned(), "He goes to school yesterday".to_owned()), false),
            ((SEED_REF.to_owned(), "He went to school yesterday .".to_owned()), true),
        ],
        None,
    )
}

#[test]
fn table_judge_yields_hand_computed_set() {
    let (a, b) = generators();
    let judge = table();
    let exp = Expander::new(vec![&a, &b], &judge).expand(&source(), &toks(SEED_REF)).unwrap();
    // seed duplicate and the repeated candidate are dropped before judging
    assert_eq!(exp.pre_filter_count(), 4);
    assert_eq!(exp.expanded.references, vec![
        toks(SEED_REF),
        toks("He went to the school yesterday"),
        toks("He went to school yesterday ."),
    ]);
    let gens: Vec<&str> = exp.expanded.provenance.iter().map(|p| p.generator.as_str()).collect();
    assert_eq!(gens, vec![SEED, "gen-a", "gen-b"]);
    assert!(exp.expanded.provenance[0].verdict_hash.is_none());
    assert!(exp.expanded.provenance[1..].iter().all(|p| p.verdict_hash.as_ref().is_some_and(|h| h.len() == 64)));
    let decisions: Vec<&Decision> = exp.outcomes.iter().map(|o| &o.decision).collect();
    assert_eq!(decisions, vec![&Decision::Accepted, &Decision::Invalid, &Decision::Accepted]);
    assert!(exp.outcomes.iter().all(|o| o.verdicts.len() == 1));

    let set = exp.expanded.to_reference_set();
    assert_eq!(set.reference_tokens(), exp.expanded.references);
}

#[test]
fn always_invalid_keeps_only_the_seed() {
    let (a, b) = generators();
    let exp = Expander::new(vec![&a, &b], &StubJudge::AlwaysInvalid).expand(&source(), &toks(SEED_REF)).unwrap();
    assert_eq!(exp.expanded.references, vec![toks(SEED_REF)]);
    assert!(exp.expanded.references.len() <= exp.pre_filter_count());
}

#[test]
fn always_valid_keeps_every_distinct_candidate() {
    let (a, b) = generators();
    let exp = Expander::new(vec![&a, &b], &StubJudge::AlwaysValid).expand(&source(), &toks(SEED_REF)).unwrap();
    assert_eq!(exp.expanded.references.len(), exp.pre_filter_count());
    assert_eq!(exp.expanded.references[3], toks("He went to school yesterday ."));
}

#[test]
fn candidates_without_novel_edits_are_rejected() {
    let g = ScriptedGenerator::always("g", format!("[correction 1] {SOURCE}"));
    let exp = Expander::new(vec![&g], &StubJudge::AlwaysValid).expand(&source(), &toks(SEED_REF)).unwrap();
    // reverting the seed's edit is not a new correction
    assert_eq!(exp.outcomes[0].decision, Decision::NoNovelEdits);
    assert_eq!(exp.expanded.references.len(), 1);
}

#[test]
fn one_invalid_edit_rejects_the_whole_candidate() {
    let g = ScriptedGenerator::always("g", "[correction 1] He went to the school yesterday .");
    let mut judge = table();
    judge.insert(SEED_REF, "He went to school yesterday .", false);
    let exp = Expander::new(vec![&g], &judge).expand(&source(), &toks(SEED_REF)).unwrap();
    assert_eq!(exp.outcomes[0].verdicts.len(), 2);
    assert_eq!(exp.outcomes[0].decision, Decision::Invalid);
}

#[test]
fn sentinel_means_no_candidates() {
    let g = ScriptedGenerator::always("g", "ONLY one reference!");
    let h = ScriptedGenerator::always("h", "ONLY one reference!\n[correction 1] He went to a school yesterday");
    let set = gather_candidates(&source(), &toks(SEED_REF), &[&g, &h]).unwrap();
    assert!(set.is_exhausted());
    assert_eq!(set.exhausted, vec!["g", "h"]);
    let exp = Expander::new(vec![&g], &StubJudge::AlwaysValid).filter(set);
    assert_eq!(exp.expanded.references, vec![toks(SEED_REF)]);
}

#[test]
fn failing_generator_is_not_fatal() {
    let (a, _) = generators();
    let broken = ScriptedGenerator::new("broken", vec![Err("connection refused".into())]);
    let garbage = ScriptedGenerator::always("garbage", "I cannot help with that.");
    let exp = Expander::new(vec![&broken, &a, &garbage], &table()).expand(&source(), &toks(SEED_REF)).unwrap();
    let failed: Vec<&str> = exp.candidates.failures.iter().map(|f| f.generator.as_str()).collect();
    assert_eq!(failed, vec!["broken", "garbage"]);
    assert_eq!(exp.expanded.references.len(), 2);
    assert!(Expander::new(vec![], &table()).expand(&source(), &toks(SEED_REF)).is_err());
    assert!(Expander::new(vec![&a], &table()).expand(&source(), &[]).is_err());
}

#[test]
fn expansion_is_deterministic_and_cached() {
    let cache = VerdictCache::in_memory();
    let run = || {
        let (a, b) = generators();
        let judge = table();
        let mut ex = Expander::new(vec![&a, &b], &judge);
        ex.cache = Some(&cache);
        serde_json::to_string(&ex.expand(&source(), &toks(SEED_REF)).unwrap()).unwrap()
    };
    let first = run();
    assert_eq!(cache.len(), 3);
    assert_eq!(run(), first);
    assert_eq!(cache.len(), 3);
}

#[test]
fn generation_cache_replays_offline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.jsonl");
    let transport = Arc::new(QueueTransport::new(vec![(
        "gpt",
        vec![Ok("[correction 1] He went to the school yesterday".to_owned())],
    )]));
    let live = {
        let cache = Arc::new(GenerationCache::open(&path).unwrap());
        let inner = ChatGenerator::new(endpoint("gpt"), transport.clone());
        let g = CachedGenerator::new(Box::new(inner), cache.clone());
        let out = Expander::new(vec![&g], &table()).expand(&source(), &toks(SEED_REF)).unwrap();
        // second call is served from the cache
        Expander::new(vec![&g], &table()).expand(&source(), &toks(SEED_REF)).unwrap();
        assert_eq!(transport.calls_to("gpt"), 1);
        out
    };
    let cache = Arc::new(GenerationCache::open(&path).unwrap());
    assert_eq!(cache.len(), 1);
    let offline = CachedGenerator::replay("gpt", "gpt-model", cache);
    assert_eq!(offline.id(), "gpt");
    let replayed = Expander::new(vec![&offline], &table()).expand(&source(), &toks(SEED_REF)).unwrap();
    assert_eq!(replayed.expanded, live.expanded);

    let other = Sentence::from_raw("essay", 1, "They is here");
    let miss = Expander::new(vec![&offline], &table()).expand(&other, &toks("They are here")).unwrap();
    assert_eq!(miss.candidates.failures.len(), 1);
}

#[test]
fn summary_statistics() {
    let s = stats_from_counts(&[2, 4, 6]).unwrap();
    assert_eq!((s.mean, s.sd, s.max, s.n), (4.0, 2.0, 6, 3));
    assert!(stats_from_counts(&[]).is_err());

    let (a, b) = generators();
    let exp = Expander::new(vec![&a, &b], &table()).expand(&source(), &toks(SEED_REF)).unwrap();
    let post = expansion_stats(std::slice::from_ref(&exp.expanded)).unwrap();
    let pre = stats_from_counts(&[exp.pre_filter_count()]).unwrap();
    assert!(post.mean <= pre.mean);
    let table = render_stats_table(Some(&pre), &post);
    assert_eq!(table, "          Pre-J   Post-J\nMean       4.00     3.00\nS.D.       0.00     0.00\nMax           4        3\n");
}
