use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use editval::align::{construct_pair, partition_chunks};
use editval::corpus::Sentence;
use editval::extract_edits;
use editval_bench::{perturb, rng, tokens};
use std::hint::black_box;

fn extract(c: &mut Criterion) {
    let mut group = c.benchmark_group("extract_edits");
    for len in [10usize, 40, 120] {
        let mut r = rng(len as u64);
        let src = tokens(&mut r, len, 50);
        let tgt = perturb(&mut r, &src, 0.2, 50);
        group.throughput(Throughput::Elements(len as u64));
        group.bench_with_input(BenchmarkId::from_parameter(len), &(src, tgt), |b, (s, t)| {
            b.iter(|| extract_edits(black_box(s), black_box(t)))
        });
    }
    group.finish();
}

fn pairs(c: &mut Criterion) {
    let mut r = rng(7);
    let src_toks = tokens(&mut r, 40, 50);
    let source = Sentence::from_raw("bench", 0, src_toks.join(" "));
    let reference = extract_edits(&src_toks, &perturb(&mut r, &src_toks, 0.2, 50));
    let hyp = extract_edits(&src_toks, &perturb(&mut r, &src_toks, 0.2, 50));
    c.bench_function("partition_chunks/40", |b| {
        b.iter(|| partition_chunks(black_box(&source), &hyp, std::slice::from_ref(&reference)))
    });
    c.bench_function("construct_pair/all_edits/40", |b| {
        b.iter(|| hyp.iter().filter_map(|e| construct_pair(&source, &reference, e, &hyp).ok()).count())
    });
}

criterion_group!(benches, extract, pairs);
criterion_main!(benches);
