//! Distilling link-prediction MLPs from cheap graph heuristics.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: frozen CSR adjacency plus node features.
//! * [`heuristics`]: CN, AA, RA and capped shortest path teachers.
//! * [`nn`]: a small hand-differentiated MLP stack with Adam.
//! * [`distill`]: context sampling, guidance sets and student training.
//! * [`ensemble`]: the feature-only gate that fuses heuristic students.
//! * [`eval`]: Hits@K, MRR, positive-edge-set analysis and the KL identity check.
//! * [`data`]: edge splits, negative sampling, dataset loaders.
//! * [`pipeline`]: end-to-end orchestration, grid selection and run configs.

pub mod data;
pub mod distill;
pub mod ensemble;
mod error;
pub mod eval;
pub mod graph;
pub mod heuristics;
pub mod nn;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
pub use graph::{Edge, FeatureMatrix, Graph, NodeId};
pub use heuristics::HeuristicKind;
