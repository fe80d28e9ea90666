use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use linkdistill::data::synthetic::{generate, SyntheticConfig};
use linkdistill::distill::{all_anchors, build_guidance, GuidanceConfig};
use linkdistill::heuristics::{score_batch, HeuristicKind};
use linkdistill::Edge;
use rand::Rng;
use std::hint::black_box;

fn pairs(n: usize, count: usize) -> Vec<Edge> {
    let mut rng = linkdistill::seed::rng(11);
    (0..count)
        .map(|_| loop {
            let (u, v) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
            if u != v {
                break (u, v);
            }
        })
        .collect()
}

fn scoring(c: &mut Criterion) {
    let data = generate(&SyntheticConfig::cora_like(1)).unwrap().dataset;
    let g = &data.graph;
    let queries = pairs(g.num_nodes(), 10_000);
    let mut group = c.benchmark_group("score_batch_10k");
    for kind in [
        HeuristicKind::Cn,
        HeuristicKind::Aa,
        HeuristicKind::Ra,
        HeuristicKind::Csp { tau: 2 },
        HeuristicKind::Csp { tau: 6 },
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(kind), &kind, |b, &k| {
            b.iter(|| score_batch(g, black_box(&queries), k).unwrap())
        });
    }
    group.finish();
}

fn guidance(c: &mut Criterion) {
    let data = generate(&SyntheticConfig::cora_like(1)).unwrap().dataset;
    let g = &data.graph;
    let anchors = all_anchors(g);
    let cfg = GuidanceConfig::default();
    let mut group = c.benchmark_group("build_guidance");
    group.sample_size(10);
    for kind in [HeuristicKind::Cn, HeuristicKind::Csp { tau: 6 }] {
        group.bench_with_input(BenchmarkId::from_parameter(kind), &kind, |b, &k| {
            b.iter(|| build_guidance(g, k, &anchors, &cfg, 3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, scoring, guidance);
criterion_main!(benches);
