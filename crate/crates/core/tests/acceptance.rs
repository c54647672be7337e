//! Release gate: each criterion prints one PASS/FAIL line.
//!
//! Run with `cargo test -p editval-core --test acceptance -- --nocapture`.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{
    edit_distance, endpoint, expected_pair_texts, first_turn_reply, random_counts, random_tokens, record, refinement_reply,
    rng, toks, LabelTransport,
};
use editval::align::{align, apply_edits, construct_pair, extract_edits};
use editval::corpus::{load_records, Sentence};
use editval::expand::{stats_from_counts, Expander, ScriptedGenerator};
use editval::judge::{
    judge_batch, parse_first_turn_response, parse_refinement_response, Judge, JudgeConfig, PipelineJudge, StubJudge,
    TableJudge, VerdictCache,
};
use editval::lm::BigramModel;
use editval::metaeval::{pairwise_eval, pearson, spearman, tune, Granularity, GridSpec, PairwiseJudgment, SentenceScores};
use editval::metric::{
    comprehensive, fluency_score, generalized_f, generalized_precision, recall, reclassify, score, score_corpus,
    EditCounts, FalsePositive, FpKind, MetricConfig,
};
use editval::Edit;
use rand::Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Check {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

/// Written out term by term, independent of the library.
fn oracle_precision(c: &EditCounts, alpha: f64) -> f64 {
    let d = c.tp as f64 + c.fp_noc as f64 + alpha * c.fp_oc as f64;
    if d == 0.0 {
        1.0
    } else {
        c.tp as f64 / d
    }
}

fn oracle_f(c: &EditCounts, alpha: f64, beta: f64) -> f64 {
    let p = oracle_precision(c, alpha);
    let r = if c.tp + c.fn_ == 0 { 1.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
    if p == 0.0 && r == 0.0 {
        return 0.0;
    }
    (1.0 + beta * beta) * p * r / (beta * beta * p + r)
}

fn textbook_f05(tp: u64, fp: u64, fn_: u64) -> f64 {
    let p = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
    if p == 0.0 && r == 0.0 {
        return 0.0;
    }
    1.25 * p * r / (0.25 * p + r)
}

fn formula_oracle() -> Check {
    let start = Instant::now();
    let mut r = rng(101);
    for _ in 0..10_000 {
        let c = random_counts(&mut r, 40);
        let alpha = r.random_range(0.0..=2.0);
        let beta = r.random_range(0.05..4.0);
        let (p, f) = (generalized_precision(&c, alpha), generalized_f(&c, alpha, beta));
        ensure((p - oracle_precision(&c, alpha)).abs() <= 1e-12, || format!("precision {c:?} alpha {alpha}"))?;
        ensure((f - oracle_f(&c, alpha, beta)).abs() <= 1e-12, || format!("F {c:?} alpha {alpha} beta {beta}"))?;
    }
    let worked = generalized_f(&EditCounts::new(3, 2, 1, 3), 0.5, 0.5);
    ensure((worked - 0.5769).abs() <= 1e-4, || format!("worked case gave {worked}"))?;
    within(Duration::from_secs(5), start)
}

fn ablation_reduction() -> Check {
    let mut r = rng(102);
    let cfg = MetricConfig::baseline(0.5);
    for _ in 0..10_000 {
        let c = random_counts(&mut r, 40);
        let fl = r.random_range(0.0..=1.0);
        let fx = comprehensive(generalized_f(&c, cfg.alpha, cfg.beta), fl, cfg.gamma);
        let want = textbook_f05(c.tp, c.fp(), c.fn_);
        ensure(fx.to_bits() == want.to_bits(), || format!("{c:?}: {fx} vs {want}"))?;
    }
    // through the full scorer on random sentences
    let lm = BigramModel::fit_text("w0 w1 w2 w3 w4");
    for _ in 0..300 {
        let src = random_tokens(&mut r, 8, 5).join(" ");
        let mut hyp = random_tokens(&mut r, 8, 5).join(" ");
        if hyp.is_empty() {
            // fluency is undefined on an empty hypothesis
            hyp.push_str("w0");
        }
        let reference = random_tokens(&mut r, 8, 5).join(" ");
        let rec = record(&src, &hyp, &[&reference]);
        let rep = score(&rec, "sys", &cfg, None, &lm).map_err(|e| e.to_string())?;
        let c = rep.counts;
        ensure(rep.f_x.to_bits() == textbook_f05(c.tp, c.fp(), c.fn_).to_bits(), || format!("{src:?} / {hyp:?}"))?;
    }
    Ok(())
}

fn reclassification_monotonicity() -> Check {
    let mut r = rng(103);
    for _ in 0..10_000 {
        let c = random_counts(&mut r, 20);
        let fps: Vec<FalsePositive> = (0..c.fp_oc)
            .map(|_| FpKind::Overcorrection)
            .chain((0..c.fp_noc).map(|_| FpKind::NonOvercorrection))
            .map(|kind| FalsePositive { edit: Edit::new(0, 1, &["x"]), kind })
            .collect();
        let validity: Vec<Option<bool>> = fps.iter().map(|_| Some(r.random_bool(0.4))).collect();
        let after = reclassify(&c, &fps, &validity).map_err(|e| e.to_string())?;
        let alpha = r.random_range(0.0..=2.0);
        let beta = r.random_range(0.1..3.0);
        ensure(generalized_precision(&after, alpha) >= generalized_precision(&c, alpha), || format!("P {c:?}"))?;
        ensure(recall(&after) >= recall(&c), || format!("R {c:?}"))?;
        ensure(generalized_f(&after, alpha, beta) >= generalized_f(&c, alpha, beta), || format!("F {c:?}"))?;
    }
    Ok(())
}

fn fluency_closed_forms() -> Check {
    let f = |lp: &[f64]| fluency_score(lp).map(|x| x.f).map_err(|e| e.to_string());
    ensure(f(&[0.0, 0.0, 0.0])? == 1.0, || "all zero".into())?;
    ensure(f(&[-1.0; 4])? == 0.5, || "all -1".into())?;
    ensure(f(&[-2.0, -4.0])? == 0.25, || "[-2,-4]".into())?;
    let mut last = f64::INFINITY;
    for i in 0..100 {
        let h = i as f64 * 0.05;
        let v = f(&[-h])?;
        ensure(v < last, || format!("not decreasing at H={h}"))?;
        last = v;
    }
    Ok(())
}

fn alignment_round_trip() -> Check {
    let start = Instant::now();
    let mut r = rng(105);
    for _ in 0..10_000 {
        let a = random_tokens(&mut r, 12, 5);
        let b = random_tokens(&mut r, 12, 5);
        let edits = extract_edits(&a, &b);
        let back = apply_edits(&a, &edits).map_err(|e| e.to_string())?;
        ensure(back == b, || format!("{a:?} -> {b:?}"))?;
        let (cost, dp) = (align(&a, &b).cost(), edit_distance(&a, &b));
        ensure(cost == dp, || format!("cost {cost} vs {dp} for {a:?} -> {b:?}"))?;
    }
    within(Duration::from_secs(30), start)
}

fn pair_contrast() -> Check {
    let mut r = rng(106);
    let mut emitted = 0;
    for _ in 0..1000 {
        let src = random_tokens(&mut r, 10, 5);
        let source = Sentence::from_tokens("d", 0, src.clone());
        let reference = extract_edits(&src, &random_tokens(&mut r, 10, 5));
        let hyp = extract_edits(&src, &random_tokens(&mut r, 10, 5));
        for e in &hyp {
            let Ok(pair) = construct_pair(&source, &reference, e, &hyp) else { continue };
            emitted += 1;
            let (s1, s2, pre, suf) = expected_pair_texts(&src, &reference, &hyp, pair.chunk.clone());
            ensure(pair.s1 == s1 && pair.s2 == s2, || format!("texts differ for {src:?}"))?;
            ensure(pair.s1 != pair.s2, || "identical pair".into())?;
            // the focal region is the only place the two may differ
            let (n1, n2) = (pair.s1.len(), pair.s2.len());
            ensure(pre + suf <= n1.min(n2), || format!("frame overlaps for {src:?}"))?;
            ensure(pair.s1[..pre] == pair.s2[..pre], || format!("prefix for {src:?}"))?;
            ensure(pair.s1[n1 - suf..] == pair.s2[n2 - suf..], || format!("suffix for {src:?}"))?;
        }
    }
    ensure(emitted > 500, || format!("only {emitted} pairs"))
}

fn jd(s: &str, better: &str, worse: &str) -> PairwiseJudgment {
    PairwiseJudgment {
        sentence_id: s.into(),
        better: better.into(),
        worse: worse.into(),
        granularity: Granularity::SentenceLevel,
    }
}

fn correlation_suite() -> Check {
    let e = |x: Result<f64, _>| x.map_err(|e: editval::metaeval::MetaEvalError| e.to_string());
    ensure((e(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]))? - 1.0).abs() <= 1e-12, || "pearson +1".into())?;
    ensure((e(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]))? + 1.0).abs() <= 1e-12, || "pearson -1".into())?;
    ensure((e(pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]))? - 0.5).abs() <= 1e-12, || "pearson 0.5".into())?;
    ensure((e(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 8.0, 27.0, 64.0]))? - 1.0).abs() <= 1e-12, || "spearman".into())?;
    // n = 4, d = (0,0,1,-1): 1 - 6*2/60
    ensure((e(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]))? - 0.8).abs() <= 1e-12, || "spearman 0.8".into())?;

    let mut r = rng(107);
    let systems = ["a", "b", "c", "d", "e"];
    for _ in 0..1000 {
        let mut scores = SentenceScores::new();
        for s in 0..3 {
            for sys in systems {
                scores.insert(s.to_string(), sys, r.random::<f64>());
            }
        }
        let judgments: Vec<PairwiseJudgment> = (0..r.random_range(1..40))
            .map(|_| {
                let i = r.random_range(0..5);
                let j = (i + r.random_range(1..5)) % 5;
                jd(&r.random_range(0..3).to_string(), systems[i], systems[j])
            })
            .collect();
        let rep = pairwise_eval(&scores, &judgments).map_err(|e| e.to_string())?;
        if rep.n_ties == 0 {
            let (tau, acc) = (rep.kendall_tau.unwrap_or(f64::NAN), rep.accuracy.unwrap_or(f64::NAN));
            ensure((tau - (2.0 * acc - 1.0)).abs() <= 1e-12, || format!("tau {tau} acc {acc}"))?;
        }
    }
    let (acc, tau) = (0.780_f64, 0.559_f64);
    ensure((tau - (2.0 * acc - 1.0)).abs() <= 0.005, || "reported pairing".into())
}

fn tuner() -> Check {
    let start = Instant::now();
    let spec = GridSpec::default();
    let planted = |a: f64, g: f64| -(a - 1.0).abs() - (g - 0.5).abs();
    let res = tune(&spec, |a, g| Ok(planted(a, g))).map_err(|e| e.to_string())?;
    ensure(res.grid.len() == 20_301, || format!("{} grid points", res.grid.len()))?;
    ensure(res.alpha == 1.0 && res.gamma == 0.5, || format!("argmax ({}, {})", res.alpha, res.gamma))?;
    let gammas = spec.gammas().map_err(|e| e.to_string())?;
    for a in spec.alphas().map_err(|e| e.to_string())? {
        for &g in &gammas {
            ensure(planted(a, g) <= res.value, || format!("({a}, {g}) beats the optimum"))?;
        }
    }
    within(Duration::from_secs(60), start)
}

fn judge_pipeline() -> Check {
    let pair_for = |i: usize| {
        let src = Sentence::from_raw("d", 0, format!("n{i} he go home"));
        let r = extract_edits(&src.tokens, &toks(&format!("n{i} he goes home")));
        let h = extract_edits(&src.tokens, &toks(&format!("n{i} he went home")));
        construct_pair(&src, &r, &h[0], &h).map_err(|e| e.to_string())
    };
    let turns = || JudgeConfig::new(vec![endpoint("t1"), endpoint("t2"), endpoint("t3")]);
    for bits in 0..8u8 {
        let l = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
        let t = Arc::new(LabelTransport::new("t1", &[("t1", l[0]), ("t2", l[1]), ("t3", l[2])]));
        let v = PipelineJudge::new(turns(), t).map_err(|e| e.to_string())?.judge(&pair_for(0)?).map_err(|e| e.to_string())?;
        ensure(v.valid == l[2], || format!("labels {l:?} gave {}", v.valid))?;
    }

    let t = Arc::new(LabelTransport::new("t1", &[("t1", true)]).with_delay(Duration::from_millis(2)));
    let judge = PipelineJudge::new(JudgeConfig::new(vec![endpoint("t1")]), t.clone()).map_err(|e| e.to_string())?;
    let pairs = (0..60).map(|i| pair_for(i % 20)).collect::<Result<Vec<_>, _>>()?;
    let cache = VerdictCache::in_memory();
    let out = judge_batch(&pairs, &judge, Some(&cache), 4);
    ensure(out.iter().all(|v| v.is_ok()), || "batch error".into())?;
    ensure(t.calls() == 20, || format!("{} transport calls for 20 unique pairs", t.calls()))?;
    ensure(t.peak() <= 4, || format!("peak concurrency {}", t.peak()))?;

    let first = parse_first_turn_response(&first_turn_reply(false)).map_err(|e| e.to_string())?;
    let second = parse_refinement_response(&refinement_reply(true)).map_err(|e| e.to_string())?;
    ensure(!first.1 && second.1, || "grammar labels".into())
}

fn expansion() -> Check {
    let source = Sentence::from_raw("e", 0, "He go to school yesterday");
    let seed = toks("He went to school yesterday");
    let a = ScriptedGenerator::always("a", "[correction 1] He went to the school yesterday\n[correction 2] He goes to school yesterday");
    let b = ScriptedGenerator::always("b", "[correction 1] He went to school yesterday .\n[correction 2] He went to the school yesterday");
    let table = TableJudge::new(
        [
            (("He went to school yesterday".to_owned(), "He went to the school yesterday".to_owned()), true),
            (("He go to school yesterday".to_owned(), "He goes to school yesterday".to_owned()), false),
            (("He went to school yesterday".to_owned(), "He went to school yesterday .".to_owned()), true),
        ],
        None,
    );
    let exp = Expander::new(vec![&a, &b], &table).expand(&source, &seed).map_err(|e| e.to_string())?;
    let expected = vec![seed.clone(), toks("He went to the school yesterday"), toks("He went to school yesterday .")];
    ensure(exp.expanded.references == expected, || format!("{:?}", exp.expanded.references))?;
    ensure(exp.expanded.references.len() <= exp.pre_filter_count(), || "post > pre".into())?;
    for judge in [&StubJudge::AlwaysValid as &dyn Judge, &StubJudge::AlwaysInvalid] {
        let e = Expander::new(vec![&a, &b], judge).expand(&source, &seed).map_err(|e| e.to_string())?;
        ensure(e.expanded.references.len() <= e.pre_filter_count(), || "post > pre".into())?;
    }

    let done = ScriptedGenerator::always("done", "ONLY one reference!");
    let e = Expander::new(vec![&done], &StubJudge::AlwaysValid).expand(&source, &seed).map_err(|e| e.to_string())?;
    ensure(e.candidates.candidates.is_empty() && e.expanded.references == vec![seed], || "sentinel".into())?;

    let s = stats_from_counts(&[2, 4, 6]).map_err(|e| e.to_string())?;
    ensure(s.mean == 4.0 && s.sd == 2.0 && s.max == 6, || format!("{s:?}"))
}

fn offline_completeness() -> Check {
    let records = load_records(include_str!("fixtures/records.jsonl")).map_err(|e| e.to_string())?;
    let lm = BigramModel::fit_text(
        &records.iter().flat_map(|r| r.references.reference_tokens()).map(|t| t.join(" ")).collect::<Vec<_>>().join("\n"),
    );
    let cfg = MetricConfig { gamma: 0.2, ..Default::default() };
    for sys in ["A", "B"] {
        let reports = score_corpus(&records, sys, &cfg, Some(&StubJudge::AlwaysValid), None, &lm, 2).map_err(|e| e.to_string())?;
        ensure(reports.iter().all(|r| (0.0..=1.0).contains(&r.f_x)), || "score out of range".into())?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 11] = [
        ("generalized precision and F oracle", formula_oracle),
        ("ablation reduces to F0.5 bit-for-bit", ablation_reduction),
        ("reclassification monotonicity", reclassification_monotonicity),
        ("fluency closed forms and sweep", fluency_closed_forms),
        ("alignment round-trip", alignment_round_trip),
        ("pair-construction contrast", pair_contrast),
        ("correlation suite", correlation_suite),
        ("tuner grid and planted argmax", tuner),
        ("judge pipeline", judge_pipeline),
        ("reference expansion", expansion),
        ("offline completeness", offline_completeness),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(()) => println!("PASS  {name}  ({:.2?})", start.elapsed()),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
