mod common;

use common::grad::{gate_instance, student_instance, Term};
use common::{numeric_grad, relative_error, smooth_at};
use linkdistill::distill::loss::{distribution_with_grad, loss_distribution, loss_ranking, ranking_with_grad};
use linkdistill::nn::{bce_with_logit, sigmoid};
use linkdistill::seed;
use rand::Rng;

const TOL: f64 = 1e-4;

#[test]
fn bce_logit_gradient() {
    let mut rng = seed::rng(1);
    for _ in 0..50 {
        let z = rng.gen_range(-8.0..8.0);
        let y = f64::from(rng.gen_range(0..2u8));
        let (_, d) = bce_with_logit(z, y);
        let fd = numeric_grad(&[z], 1e-6, |t| bce_with_logit(t[0], y).0);
        assert!(relative_error(&[d], &fd) < TOL);
        assert!((d - (sigmoid(z) - y)).abs() < 1e-12);
    }
}

#[test]
fn ranking_and_distribution_gradients_in_q() {
    let mut rng = seed::rng(2);
    let mut checked = 0;
    while checked < 40 {
        let n = rng.gen_range(2..9);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let delta = [0.05, 0.1, 0.2][rng.gen_range(0..3)];
        let t = rng.gen_range(0.3..3.0);
        let lr = |v: &[f64]| loss_ranking(&p, v, delta).unwrap();
        if !smooth_at(&q, 1e-6, lr) {
            continue;
        }
        let mut g = vec![0.0; n];
        ranking_with_grad(&p, &q, delta, Some(&mut g)).unwrap();
        assert!(relative_error(&g, &numeric_grad(&q, 1e-6, lr)) < TOL);

        let mut g = vec![0.0; n];
        distribution_with_grad(&p, &q, t, Some(&mut g)).unwrap();
        let fd = numeric_grad(&q, 1e-6, |v| loss_distribution(&p, v, t).unwrap());
        assert!(relative_error(&g, &fd) < TOL);
        checked += 1;
    }
}

#[test]
fn student_objective_gradients() {
    let mut rng = seed::rng(3);
    for term in [Term::Bce, Term::Ranking, Term::Distribution, Term::Combined] {
        for _ in 0..10 {
            let e = student_instance(term, &mut rng);
            assert!(e < TOL, "{term:?}: relative error {e}");
        }
    }
}

#[test]
fn gate_objective_gradients() {
    let mut rng = seed::rng(4);
    for _ in 0..20 {
        let e = gate_instance(&mut rng);
        assert!(e < TOL, "relative error {e}");
    }
}
