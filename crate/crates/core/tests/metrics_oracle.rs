mod common;

use common::{hits_full_sort, mrr_full_sort};
use linkdistill::eval::{hit_flags, hits_at_k, jaccard_overlap, mrr, positive_edge_set, subset_ratio, EvalReport};
use proptest::prelude::*;

/// Scores on a coarse grid so ties are frequent.
fn tied_scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u8..12).prop_map(|v| f64::from(v) / 8.0), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hits_matches_full_sort(pos in tied_scores(200), neg in tied_scores(400), k in 1usize..50) {
        prop_assume!(k <= neg.len());
        prop_assert_eq!(hits_at_k(&pos, &neg, k).unwrap(), hits_full_sort(&pos, &neg, k));
    }

    #[test]
    fn hits_is_monotone_in_k(pos in tied_scores(100), neg in tied_scores(100)) {
        let mut prev = 0.0;
        for k in 1..=neg.len() {
            let h = hits_at_k(&pos, &neg, k).unwrap();
            prop_assert!(h >= prev && (0.0..=1.0).contains(&h));
            prev = h;
        }
    }

    #[test]
    fn mrr_matches_full_sort(pos in tied_scores(60), seed_neg in tied_scores(30)) {
        let negs: Vec<Vec<f64>> = (0..pos.len())
            .map(|i| seed_neg.iter().map(|v| (v + i as f64 * 0.125) % 1.5).collect())
            .collect();
        let got = mrr(&pos, &negs).unwrap();
        prop_assert!((got - mrr_full_sort(&pos, &negs)).abs() < 1e-15);
        prop_assert!(got > 0.0 && got <= 1.0);
    }

    #[test]
    fn positive_set_cardinality_equals_hits(pos in tied_scores(80), neg in tied_scores(80), k in 1usize..20) {
        prop_assume!(k <= neg.len());
        let edges: Vec<(u32, u32)> = (0..pos.len() as u32).map(|i| (i, i + 1000)).collect();
        let set = positive_edge_set(&edges, &pos, &neg, k).unwrap();
        prop_assert_eq!(set.hit_rate(), hits_at_k(&pos, &neg, k).unwrap());
        prop_assert!(set.members.iter().all(|e| edges.contains(e)));
        let flags = hit_flags(&pos, &neg, k).unwrap();
        prop_assert_eq!(flags.iter().filter(|&&f| f).count(), set.len());
    }
}

#[test]
fn hand_examples() {
    assert_eq!(hits_at_k(&[0.9], &[0.1, 0.2, 0.3], 1).unwrap(), 1.0);
    assert_eq!(hits_at_k(&[0.15], &[0.1, 0.2, 0.3], 2).unwrap(), 0.0);
    assert!(hits_at_k(&[0.5], &[0.1], 2).is_err());
    assert_eq!(mrr(&[0.5], &[vec![0.6, 0.7, 0.8, 0.1]]).unwrap(), 0.25);
    assert_eq!(mrr(&[0.9, 0.5], &[vec![0.1], vec![0.6]]).unwrap(), 0.75);
    assert_eq!(mrr(&[0.5], &[vec![0.5, 0.5]]).unwrap(), 1.0);
    let r = EvalReport::compute(&[0.9, 0.4], &[0.5, 0.3, 0.1], &[1, 3]).unwrap();
    assert_eq!((r.hits(1), r.hits(3)), (Some(0.5), Some(1.0)));
}

#[test]
fn ratio_examples() {
    let edges: Vec<(u32, u32)> = (0..5).map(|i| (i, i + 10)).collect();
    let set = |pos: &[f64]| positive_edge_set(&edges, pos, &[0.5], 1).unwrap();
    let a = set(&[1.0, 1.0, 1.0, 1.0, 0.0]);
    let b = set(&[1.0, 1.0, 1.0, 0.0, 1.0]);
    assert_eq!(subset_ratio(&a, &b).value, 0.75);
    assert_eq!(subset_ratio(&a, &a).value, 1.0);
    let empty = set(&[0.0; 5]);
    let r = subset_ratio(&empty, &a);
    assert!(!r.defined && r.value == 0.0);
    let c = set(&[1.0, 1.0, 0.0, 0.0, 0.0]);
    let d = set(&[0.0, 1.0, 1.0, 1.0, 0.0]);
    // |c ∩ d| = 1, |c ∪ d| = 4
    assert_eq!(jaccard_overlap(&c, &d).value, 0.25);
    let j = jaccard_overlap(&empty, &empty);
    assert!(!j.defined && j.value == 1.0);
}
