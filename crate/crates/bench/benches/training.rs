use criterion::{criterion_group, criterion_main, Criterion};
use linkdistill::data::make_split;
use linkdistill::data::synthetic::{generate, SyntheticConfig};
use linkdistill::distill::{all_anchors, build_guidance, train_student, DistillConfig};
use linkdistill::ensemble::{train_gate_with, EnsembleConfig};
use linkdistill::eval::hits_at_k;
use linkdistill::HeuristicKind;
use rand::Rng;
use std::hint::black_box;

fn student_epoch(c: &mut Criterion) {
    let data = generate(&SyntheticConfig::small(2)).unwrap().dataset;
    let split = make_split(&data.graph, 0.05, 0.15, 2).unwrap();
    let g = split.train_graph().unwrap();
    let cfg = DistillConfig {
        epochs: 1,
        hidden: 64,
        ..DistillConfig::default()
    };
    let guidance = build_guidance(&g, HeuristicKind::Cn, &all_anchors(&g), &cfg.guidance_config(), 2)
        .unwrap()
        .guidance;
    c.bench_function("student_one_epoch_small", |b| {
        b.iter(|| train_student(&g, &data.features, &guidance, &split, black_box(&cfg)).unwrap())
    });
    let plain = DistillConfig {
        alpha: 0.0,
        beta: 0.0,
        ..cfg.clone()
    };
    c.bench_function("plain_one_epoch_small", |b| {
        b.iter(|| train_student(&g, &data.features, &guidance, &split, black_box(&plain)).unwrap())
    });
    let students = vec![
        train_student(&g, &data.features, &guidance, &split, &cfg).unwrap().model,
        train_student(&g, &data.features, &guidance, &split, &plain).unwrap().model,
    ];
    let labels = vec!["cn".to_string(), "mlp".to_string()];
    let gcfg = EnsembleConfig {
        epochs: 1,
        hidden: 32,
        ..EnsembleConfig::default()
    };
    c.bench_function("gate_one_epoch_small", |b| {
        b.iter(|| train_gate_with(&g, &data.features, &students, &labels, &split, &gcfg, &mut |_| {}).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let mut rng = linkdistill::seed::rng(5);
    let pos: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
    let neg: Vec<f64> = (0..100_000).map(|_| rng.gen()).collect();
    c.bench_function("hits_at_20_10k_pos_100k_neg", |b| {
        b.iter(|| hits_at_k(black_box(&pos), black_box(&neg), 20).unwrap())
    });
}

criterion_group!(benches, student_epoch, metrics);
criterion_main!(benches);
