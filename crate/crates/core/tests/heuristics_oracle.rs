mod common;

use common::{erdos_renyi, NaiveGraph};
use linkdistill::heuristics::{score, score_batch, HeuristicKind, Scorer};
use linkdistill::seed;
use proptest::prelude::*;

const KINDS: [HeuristicKind; 6] = [
    HeuristicKind::Cn,
    HeuristicKind::Aa,
    HeuristicKind::Ra,
    HeuristicKind::Csp { tau: 2 },
    HeuristicKind::Csp { tau: 4 },
    HeuristicKind::Csp { tau: 6 },
];

fn naive(o: &NaiveGraph, kind: HeuristicKind, i: usize, j: usize) -> f64 {
    match kind {
        HeuristicKind::Cn => o.cn(i, j),
        HeuristicKind::Aa => o.aa(i, j),
        HeuristicKind::Ra => o.ra(i, j),
        HeuristicKind::Csp { tau } => o.csp(i, j, tau),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_pair_matches_reference(n in 2usize..60, p in 0.0f64..0.3, s in any::<u64>()) {
        let (g, edges) = erdos_renyi(n, p, &mut seed::rng(s));
        let o = NaiveGraph::new(n, &edges);
        for kind in KINDS {
            let mut scorer = Scorer::new(&g, kind).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let expect = naive(&o, kind, i, j);
                    let got = scorer.score(i as u32, j as u32).unwrap();
                    prop_assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{kind} ({i},{j}): {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn scores_are_symmetric_and_batch_consistent(n in 3usize..40, p in 0.05f64..0.4, s in any::<u64>()) {
        let (g, _) = erdos_renyi(n, p, &mut seed::rng(s));
        let pairs: Vec<(u32, u32)> = (0..n as u32).flat_map(|i| (0..n as u32).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        for kind in KINDS {
            let batch = score_batch(&g, &pairs, kind).unwrap();
            for (sp, &(i, j)) in batch.iter().zip(&pairs) {
                prop_assert_eq!((sp.i, sp.j), (i, j));
                prop_assert_eq!(sp.score, score(&g, j, i, kind).unwrap());
            }
        }
    }

    #[test]
    fn csp_is_bounded_by_cap(n in 2usize..50, p in 0.0f64..0.2, s in any::<u64>(), half in 1u32..5) {
        let tau = 2 * half;
        let (g, _) = erdos_renyi(n, p, &mut seed::rng(s));
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                let v = score(&g, i, j, HeuristicKind::Csp { tau }).unwrap();
                prop_assert!(v >= 1.0 / tau as f64 && v <= 1.0);
            }
        }
    }
}

#[test]
fn invalid_queries_are_rejected() {
    let (g, _) = erdos_renyi(5, 0.5, &mut seed::rng(1));
    for kind in KINDS {
        assert!(score(&g, 0, 9, kind).is_err());
        assert_eq!(score(&g, 2, 2, kind).is_err(), matches!(kind, HeuristicKind::Csp { .. }));
    }
    assert!(HeuristicKind::csp(3).is_err());
    assert!(HeuristicKind::csp(0).is_err());
}
