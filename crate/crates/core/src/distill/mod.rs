//! Heuristic-to-MLP distillation: context sampling, guidance sets, the
//! relational losses and the student training loop.

mod context;
mod guidance;
pub mod loss;
mod objective;
mod train;

pub use context::{sample_context, ContextConfig};
pub use guidance::{build_guidance, BuiltGuidance, GuidanceConfig, GuidanceRecord, GuidanceSet, TeacherSource};
pub use loss::{loss_distribution, loss_ranking};
pub use objective::{student_objective, Batch, BatchBuilder, ContextTerm, LossParts, LossWeights};
pub use train::{
    edge_scores, train_student, train_student_with, validation_hits, DistillConfig, EpochLog, TrainedStudent,
};

use crate::graph::{Graph, NodeId};

/// Every node of the training graph, the default anchor set.
pub fn all_anchors(g: &Graph) -> Vec<NodeId> {
    (0..g.num_nodes() as NodeId).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_split, synthetic};
    use crate::heuristics::HeuristicKind;

    fn quick_cfg(alpha: f64, beta: f64) -> DistillConfig {
        DistillConfig {
            alpha,
            beta,
            hidden: 32,
            epochs: 15,
            batch_size: 256,
            lr: 5e-3,
            eval_k: 10,
            seed: 4,
            ..DistillConfig::default()
        }
    }

    #[test]
    fn training_learns_and_is_deterministic() {
        let s = synthetic::generate(&synthetic::SyntheticConfig::small(2)).unwrap();
        let split = make_split(&s.dataset.graph, 0.05, 0.15, 1).unwrap();
        let gt = split.train_graph().unwrap();
        let cfg = quick_cfg(1.0, 1.0);
        let guid = build_guidance(&gt, HeuristicKind::Cn, &all_anchors(&gt), &cfg.guidance_config(), 3)
            .unwrap()
            .guidance;
        let mut lines = 0;
        let a = train_student_with(&gt, &s.dataset.features, &guid, &split, &cfg, &mut |_| lines += 1).unwrap();
        assert_eq!(lines, cfg.epochs);
        assert!(a.best_valid > 0.2, "{}", a.best_valid);
        assert!(a.history.last().unwrap().loss.bce < a.history[0].loss.bce);
        let b = train_student(&gt, &s.dataset.features, &guid, &split, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.best_valid, validation_hits(&a.model, &s.dataset.features, &split, 10).unwrap());

        let plain = train_student(&gt, &s.dataset.features, &guid, &split, &quick_cfg(0.0, 0.0)).unwrap();
        assert!(plain.history.iter().all(|h| h.loss.ranking == 0.0 && h.loss.distribution == 0.0));
    }

    #[test]
    fn rejects_empty_inputs() {
        let s = synthetic::generate(&synthetic::SyntheticConfig::small(2)).unwrap();
        let split = make_split(&s.dataset.graph, 0.05, 0.15, 1).unwrap();
        let gt = split.train_graph().unwrap();
        let empty = GuidanceSet {
            source: TeacherSource::Heuristic(HeuristicKind::Cn),
            records: vec![],
        };
        assert!(train_student(&gt, &s.dataset.features, &empty, &split, &quick_cfg(1.0, 1.0)).is_err());
        let mut bad = quick_cfg(1.0, 1.0);
        bad.delta = 0.0;
        let guid = build_guidance(&gt, HeuristicKind::Cn, &[0, 1, 2], &bad.guidance_config(), 0)
            .unwrap()
            .guidance;
        assert!(train_student(&gt, &s.dataset.features, &guid, &split, &bad).is_err());
        let mut no_train = split.clone();
        no_train.train.clear();
        assert!(train_student(&gt, &s.dataset.features, &guid, &no_train, &quick_cfg(1.0, 1.0)).is_err());
    }
}
