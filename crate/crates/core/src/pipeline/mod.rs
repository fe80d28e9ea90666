//! End-to-end runs: split, guidance, per-heuristic distillation with grid
//! search, gate training and evaluation, with a stage timing breakdown.
//!
//! Output layout under `RunConfig::out`:
//!
//! ```text
//! config.txt            canonical configuration
//! split/                edge split
//! guidance/<h>.txt      teacher guidance per heuristic
//! grid/<h>.tsv          validation result for every grid point
//! students/<h>.ckpt     grid-selected student per heuristic (mlp.ckpt: baseline)
//! gate_grid.tsv         validation result per lambda
//! gate.ckpt             selected gate, referencing students/ relatively
//! report.txt            test metrics and analyses (deterministic)
//! timing.txt            wall-clock seconds per stage
//! ```

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{DataSource, DistillGrid, RunConfig, TAU_GRID};

use crate::data::{make_split, synthetic, Dataset, EdgeSplit};
use crate::distill::{all_anchors, build_guidance, edge_scores, train_student, DistillConfig, GuidanceSet};
use crate::ensemble::checkpoint::{GateCheckpoint, StudentRef};
use crate::ensemble::{train_gate_with, Ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::eval::{
    overlap_matrix, positive_edge_set, subset_ratio, write_key_values, EvalReport, PositiveEdgeSet, Ratio,
};
use crate::graph::{Edge, FeatureMatrix, Graph};
use crate::heuristics::{score_batch, HeuristicKind};
use crate::nn::checkpoint::{file_digest, write_student};
use crate::nn::StudentModel;
use crate::seed;

/// Label of the plain, undistilled student.
pub const BASELINE_LABEL: &str = "mlp";

/// Sizes the global worker pool; later calls keep the first size.
pub fn init_global_threads(jobs: usize) -> Result<()> {
    if jobs == 0 {
        return Err(Error::invalid("jobs must be at least 1"));
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    Ok(())
}

/// Index of the best result: highest metric, ties to the lexicographically
/// smallest key.
pub fn grid_select(results: &[(Vec<f64>, f64)]) -> Result<usize> {
    if results.is_empty() {
        return Err(Error::invalid("grid selection over no results"));
    }
    if let Some((k, _)) = results.iter().find(|(_, m)| m.is_nan()) {
        return Err(Error::invalid(format!("NaN validation metric for {k:?}")));
    }
    let lex = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.len().cmp(&b.len()))
    };
    let mut best = 0;
    for (i, (key, m)) in results.iter().enumerate().skip(1) {
        let (bk, bm) = &results[best];
        if m > bm || (m == bm && lex(key, bk).is_lt()) {
            best = i;
        }
    }
    Ok(best)
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub data: f64,
    pub guidance: f64,
    pub distill: f64,
    /// Longest single heuristic's distillation: the cost with one worker per heuristic.
    pub distill_parallel_max: f64,
    /// Sum over heuristics: the cost on a single worker.
    pub distill_serial_sum: f64,
    pub baseline: f64,
    pub ensemble: f64,
    pub eval: f64,
    pub total: f64,
}

impl StageTimes {
    pub fn key_values(&self) -> Vec<(String, String)> {
        [
            ("data", self.data),
            ("guidance", self.guidance),
            ("distill", self.distill),
            ("distill_parallel_max", self.distill_parallel_max),
            ("distill_serial_sum", self.distill_serial_sum),
            ("baseline", self.baseline),
            ("ensemble", self.ensemble),
            ("eval", self.eval),
            ("total", self.total),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), format!("{v:.6}")))
        .collect()
    }

    /// Stage times are non-negative and fit inside the total.
    pub fn is_consistent(&self) -> bool {
        let stages = [
            self.data,
            self.guidance,
            self.distill,
            self.baseline,
            self.ensemble,
            self.eval,
        ];
        stages.iter().all(|&t| t >= 0.0)
            && self.distill_parallel_max >= 0.0
            && self.distill_parallel_max <= self.distill_serial_sum + 1e-9
            && stages.iter().sum::<f64>() <= self.total + 1e-9
    }
}

/// Validation result for one distillation grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// `[alpha, beta, delta]`.
    pub params: [f64; 3],
    pub best_epoch: usize,
    pub valid: f64,
}

#[derive(Debug, Clone)]
pub struct HeuristicOutcome {
    pub kind: HeuristicKind,
    pub guidance_records: usize,
    pub skipped_anchors: usize,
    pub grid: Vec<GridPoint>,
    pub selected: usize,
    /// The heuristic itself scored on the training graph.
    pub teacher_test: EvalReport,
    pub student_valid: f64,
    pub student_test: EvalReport,
    pub guidance_secs: f64,
    pub distill_secs: f64,
}

impl HeuristicOutcome {
    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    pub fn selected_params(&self) -> [f64; 3] {
        self.grid[self.selected].params
    }
}

#[derive(Debug, Clone)]
pub struct ModelOutcome {
    pub valid: f64,
    pub test: EvalReport,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutcome {
    /// `(lambda, best validation Hits@K)` per grid value.
    pub grid: Vec<(f64, f64)>,
    pub selected: usize,
    pub valid: f64,
    pub test: EvalReport,
    /// Mean gate weight per student over the test positives.
    pub mean_weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub eval_ks: Vec<usize>,
    pub analysis_k: usize,
    pub heuristics: Vec<HeuristicOutcome>,
    pub baseline: Option<ModelOutcome>,
    pub ensemble: EnsembleOutcome,
    /// `subset_ratio(teacher set, distilled student set)` per heuristic.
    pub subset_distilled: Vec<Ratio>,
    /// `subset_ratio(teacher set, plain MLP set)` per heuristic.
    pub subset_plain: Vec<Ratio>,
    /// Labels of the rows/columns of `overlap`.
    pub overlap_labels: Vec<String>,
    /// Jaccard overlaps of the students' positive edge sets.
    pub overlap: Vec<Vec<f64>>,
    pub timing: StageTimes,
}

impl RunSummary {
    /// The primary cutoff, used for model selection.
    pub fn primary_k(&self) -> usize {
        self.eval_ks[0]
    }

    pub fn heuristic(&self, kind: HeuristicKind) -> Option<&HeuristicOutcome> {
        self.heuristics.iter().find(|h| h.kind == kind)
    }

    /// Flat report; contains no timings, so reruns compare equal.
    pub fn report(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut put = |k: String, v: String| kv.push((k, v));
        put("nodes".into(), self.num_nodes.to_string());
        put("edges".into(), self.num_edges.to_string());
        let model = |put: &mut dyn FnMut(String, String), prefix: &str, r: &EvalReport| {
            for (k, v) in r.key_values() {
                put(format!("{prefix}.test.{k}"), v);
            }
        };
        for h in &self.heuristics {
            let l = h.label();
            model(&mut put, &format!("teacher.{l}"), &h.teacher_test);
            let [a, b, d] = h.selected_params();
            put(format!("student.{l}.alpha"), a.to_string());
            put(format!("student.{l}.beta"), b.to_string());
            put(format!("student.{l}.delta"), d.to_string());
            put(format!("student.{l}.valid.hits@{}", self.primary_k()), format!("{:.6}", h.student_valid));
            model(&mut put, &format!("student.{l}"), &h.student_test);
        }
        if let Some(b) = &self.baseline {
            put(format!("student.{BASELINE_LABEL}.valid.hits@{}", self.primary_k()), format!("{:.6}", b.valid));
            model(&mut put, &format!("student.{BASELINE_LABEL}"), &b.test);
        }
        let e = &self.ensemble;
        put("ensemble.lambda".into(), e.grid[e.selected].0.to_string());
        put(format!("ensemble.valid.hits@{}", self.primary_k()), format!("{:.6}", e.valid));
        model(&mut put, "ensemble", &e.test);
        for (h, w) in self.heuristics.iter().zip(&e.mean_weights) {
            put(format!("ensemble.mean_weight.{}", h.label()), format!("{w:.6}"));
        }
        let ratio = |r: &Ratio| {
            if r.defined {
                format!("{:.6}", r.value)
            } else {
                "undefined".to_string()
            }
        };
        for (i, h) in self.heuristics.iter().enumerate() {
            let k = self.analysis_k;
            put(format!("subset@{k}.{}.distilled", h.label()), ratio(&self.subset_distilled[i]));
            if let Some(r) = self.subset_plain.get(i) {
                put(format!("subset@{k}.{}.plain", h.label()), ratio(r));
            }
        }
        for (i, a) in self.overlap_labels.iter().enumerate() {
            for (j, b) in self.overlap_labels.iter().enumerate().skip(i + 1) {
                put(format!("jaccard@{}.{a}.{b}", self.analysis_k), format!("{:.6}", self.overlap[i][j]));
            }
        }
        kv
    }
}

struct Inputs {
    data: Dataset,
    split: EdgeSplit,
    g_train: Graph,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let data = match &cfg.data {
        DataSource::Dir(d) => Dataset::from_dir(d)?,
        DataSource::Files { edges, features } => Dataset::from_files(edges, features)?,
        DataSource::Synthetic { .. } => {
            let sc = cfg.synthetic_config().expect("synthetic source")?;
            synthetic::generate(&sc)?.dataset
        }
    };
    let split = match &cfg.split_dir {
        Some(dir) => {
            let s = EdgeSplit::load(dir)?;
            if s.num_nodes != data.graph.num_nodes() {
                return Err(Error::invalid(format!(
                    "split has {} nodes, dataset has {}",
                    s.num_nodes,
                    data.graph.num_nodes()
                )));
            }
            s
        }
        None => make_split(&data.graph, cfg.val_frac, cfg.test_frac, cfg.seed)?,
    };
    let max_k = cfg.eval_ks.iter().chain([&cfg.analysis_k]).copied().max().unwrap_or(1);
    if split.test_neg.len() < max_k {
        return Err(Error::invalid(format!(
            "{} test negatives cannot support Hits@{max_k}",
            split.test_neg.len()
        )));
    }
    let g_train = split.train_graph()?;
    Ok(Inputs { data, split, g_train })
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn student_test(model: &StudentModel<f32>, x: &FeatureMatrix, split: &EdgeSplit, ks: &[usize]) -> Result<(Vec<f64>, Vec<f64>, EvalReport)> {
    let emb = model.embed_all(x)?;
    let pos = edge_scores(&emb, &split.test_pos);
    let neg = edge_scores(&emb, &split.test_neg);
    let report = EvalReport::compute(&pos, &neg, ks)?;
    Ok((pos, neg, report))
}

fn heuristic_scores(g: &Graph, kind: HeuristicKind, edges: &[Edge]) -> Result<Vec<f64>> {
    Ok(score_batch(g, edges, kind)?.into_iter().map(|s| s.score).collect())
}

fn grid_tsv(path: &Path, points: &[GridPoint]) -> Result<()> {
    let mut s = String::from("alpha\tbeta\tdelta\tbest_epoch\tvalid_hits\n");
    for p in points {
        let [a, b, d] = p.params;
        s.push_str(&format!("{a}\t{b}\t{d}\t{}\t{:.6}\n", p.best_epoch, p.valid));
    }
    std::fs::write(path, s)?;
    Ok(())
}

struct Distilled {
    grid: Vec<GridPoint>,
    selected: usize,
    model: StudentModel<f32>,
    valid: f64,
    secs: f64,
}

fn distill_grid(
    inputs: &Inputs,
    guidance: &GuidanceSet,
    base: &DistillConfig,
    points: &[[f64; 3]],
    seed: u64,
) -> Result<Distilled> {
    let t = Instant::now();
    let mut grid = Vec::with_capacity(points.len());
    let mut best: Option<(usize, StudentModel<f32>)> = None;
    let mut keyed: Vec<(Vec<f64>, f64)> = Vec::new();
    for &params in points {
        let cfg = DistillConfig {
            alpha: params[0],
            beta: params[1],
            delta: params[2],
            seed,
            ..base.clone()
        };
        let trained = train_student(&inputs.g_train, &inputs.data.features, guidance, &inputs.split, &cfg)?;
        log::debug!("grid point {params:?}: valid {:.4} at epoch {}", trained.best_valid, trained.best_epoch);
        keyed.push((params.to_vec(), trained.best_valid));
        grid.push(GridPoint {
            params,
            best_epoch: trained.best_epoch,
            valid: trained.best_valid,
        });
        if grid_select(&keyed)? == keyed.len() - 1 {
            best = Some((keyed.len() - 1, trained.model));
        }
    }
    let (selected, model) = best.ok_or_else(|| Error::invalid("empty distillation grid"))?;
    Ok(Distilled {
        valid: grid[selected].valid,
        grid,
        selected,
        model,
        secs: secs(t),
    })
}

/// Runs every stage and writes the run directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let total = Instant::now();
    let mut timing = StageTimes::default();
    let out = cfg.out.clone();
    for sub in ["split", "guidance", "grid", "students"] {
        std::fs::create_dir_all(out.join(sub))?;
    }
    write_key_values(out.join("config.txt"), &cfg.to_pairs())?;

    let t = Instant::now();
    let inputs = load_inputs(cfg).map_err(|e| e.in_stage("data"))?;
    inputs.split.save(out.join("split")).map_err(|e| e.in_stage("data"))?;
    timing.data = secs(t);
    log::info!(
        "data: {} nodes, {} train / {} valid / {} test edges",
        inputs.data.graph.num_nodes(),
        inputs.split.train.len(),
        inputs.split.valid_pos.len(),
        inputs.split.test_pos.len()
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let k = cfg.eval_ks[0];
    let mut base = cfg.distill.clone();
    base.eval_k = k;
    let x = &inputs.data.features;

    let t = Instant::now();
    let anchors = all_anchors(&inputs.g_train);
    let guidance: Vec<(crate::distill::BuiltGuidance, f64)> = pool
        .install(|| {
            cfg.heuristics
                .par_iter()
                .map(|&h| {
                    let t = Instant::now();
                    let s = seed::derive(cfg.seed, &format!("guidance/{h}"));
                    let built = build_guidance(&inputs.g_train, h, &anchors, &base.guidance_config(), s)?;
                    built.guidance.write(out.join("guidance").join(format!("{h}.txt")))?;
                    Ok((built, secs(t)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .map_err(|e| e.in_stage("guidance"))?;
    timing.guidance = secs(t);

    let t = Instant::now();
    let distilled: Vec<Distilled> = pool
        .install(|| {
            cfg.heuristics
                .par_iter()
                .zip(&guidance)
                .map(|(&h, (built, _))| {
                    let s = seed::derive(cfg.seed, &format!("distill/{h}"));
                    let d = distill_grid(&inputs, &built.guidance, &base, &cfg.grid_for(h).points(), s)?;
                    grid_tsv(&out.join("grid").join(format!("{h}.tsv")), &d.grid)?;
                    write_student(out.join("students").join(format!("{h}.ckpt")), &d.model)?;
                    log::info!("distill {h}: valid hits@{k} {:.4} with {:?}", d.valid, d.grid[d.selected].params);
                    Ok(d)
                })
                .collect::<Result<Vec<_>>>()
        })
        .map_err(|e| e.in_stage("distill"))?;
    timing.distill = secs(t);
    timing.distill_parallel_max = distilled.iter().map(|d| d.secs).fold(0.0, f64::max);
    timing.distill_serial_sum = distilled.iter().map(|d| d.secs).sum();

    let t = Instant::now();
    let baseline_model = if cfg.baseline {
        let first = &guidance[0].0.guidance;
        let min_delta = cfg.grid.delta.iter().copied().fold(f64::INFINITY, f64::min);
        let s = seed::derive(cfg.seed, &format!("distill/{BASELINE_LABEL}"));
        let d = pool
            .install(|| distill_grid(&inputs, first, &base, &[[0.0, 0.0, min_delta]], s))
            .map_err(|e| e.in_stage("baseline"))?;
        write_student(out.join("students").join(format!("{BASELINE_LABEL}.ckpt")), &d.model)
            .map_err(|e| e.in_stage("baseline"))?;
        Some((d.model, d.valid))
    } else {
        None
    };
    timing.baseline = secs(t);

    let t = Instant::now();
    let students: Vec<StudentModel<f32>> = distilled.iter().map(|d| d.model.clone()).collect();
    let labels: Vec<String> = cfg.heuristics.iter().map(ToString::to_string).collect();
    let ens_cfg = EnsembleConfig {
        eval_k: k,
        seed: seed::derive(cfg.seed, "ensemble"),
        ..cfg.ensemble.clone()
    };
    let ensemble = pool
        .install(|| -> Result<_> {
            let mut keyed = Vec::new();
            let mut best = None;
            for &lambda in &cfg.lambda_grid {
                let c = EnsembleConfig {
                    lambda,
                    ..ens_cfg.clone()
                };
                let trained = train_gate_with(&inputs.g_train, x, &students, &labels, &inputs.split, &c, &mut |_| {})?;
                keyed.push((vec![lambda], trained.best_valid));
                if grid_select(&keyed)? == keyed.len() - 1 {
                    best = Some(trained.gate);
                }
            }
            let selected = grid_select(&keyed)?;
            let mut tsv = String::from("lambda\tvalid_hits\n");
            for (l, v) in &keyed {
                tsv.push_str(&format!("{}\t{v:.6}\n", l[0]));
            }
            std::fs::write(out.join("gate_grid.tsv"), tsv)?;
            let gate = best.expect("nonempty lambda grid");
            let refs = labels
                .iter()
                .map(|l| {
                    let rel = PathBuf::from("students").join(format!("{l}.ckpt"));
                    Ok(StudentRef {
                        label: l.clone(),
                        digest: file_digest(out.join(&rel))?,
                        path: rel,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            GateCheckpoint {
                gate: gate.clone(),
                students: refs,
            }
            .write(out.join("gate.ckpt"))?;
            Ok((keyed, selected, gate))
        })
        .map_err(|e| e.in_stage("ensemble"))?;
    timing.ensemble = secs(t);

    let t = Instant::now();
    let summary_parts = pool
        .install(|| evaluate(cfg, &inputs, &guidance, distilled, baseline_model, &students, ensemble))
        .map_err(|e| e.in_stage("eval"))?;
    timing.eval = secs(t);
    timing.total = secs(total);

    let summary = RunSummary { timing, ..summary_parts };
    write_key_values(out.join("report.txt"), &summary.report())?;
    write_key_values(out.join("timing.txt"), &timing.key_values())?;
    Ok(summary)
}

fn evaluate(
    cfg: &RunConfig,
    inputs: &Inputs,
    guidance: &[(crate::distill::BuiltGuidance, f64)],
    distilled: Vec<Distilled>,
    baseline: Option<(StudentModel<f32>, f64)>,
    students: &[StudentModel<f32>],
    (lambda_grid, selected, gate): (Vec<(Vec<f64>, f64)>, usize, crate::ensemble::GateModel<f32>),
) -> Result<RunSummary> {
    let x = &inputs.data.features;
    let split = &inputs.split;
    let ks = &cfg.eval_ks;
    let ak = cfg.analysis_k;
    let set = |pos: &[f64], neg: &[f64]| positive_edge_set(&split.test_pos, pos, neg, ak);

    let mut heuristics = Vec::new();
    let mut teacher_sets = Vec::new();
    let mut student_sets: Vec<PositiveEdgeSet> = Vec::new();
    for ((&kind, (built, gsecs)), d) in cfg.heuristics.iter().zip(guidance).zip(distilled) {
        let tp = heuristic_scores(&inputs.g_train, kind, &split.test_pos)?;
        let tn = heuristic_scores(&inputs.g_train, kind, &split.test_neg)?;
        teacher_sets.push(set(&tp, &tn)?);
        let (sp, sn, student_test) = student_test(&d.model, x, split, ks)?;
        student_sets.push(set(&sp, &sn)?);
        heuristics.push(HeuristicOutcome {
            kind,
            guidance_records: built.guidance.len(),
            skipped_anchors: built.skipped_anchors.len(),
            teacher_test: EvalReport::compute(&tp, &tn, ks)?,
            student_valid: d.valid,
            student_test,
            grid: d.grid,
            selected: d.selected,
            guidance_secs: *gsecs,
            distill_secs: d.secs,
        });
    }

    let mut overlap_labels: Vec<String> = cfg.heuristics.iter().map(ToString::to_string).collect();
    let mut overlap_sets = student_sets.clone();
    let (baseline, subset_plain) = match baseline {
        Some((model, valid)) => {
            let (bp, bn, test) = student_test(&model, x, split, ks)?;
            let plain = set(&bp, &bn)?;
            let ratios = teacher_sets.iter().map(|t| subset_ratio(t, &plain)).collect();
            overlap_labels.push(BASELINE_LABEL.into());
            overlap_sets.push(plain);
            (Some(ModelOutcome { valid, test }), ratios)
        }
        None => (None, Vec::new()),
    };
    let subset_distilled = teacher_sets.iter().zip(&student_sets).map(|(t, s)| subset_ratio(t, s)).collect();

    let ens = Ensemble::new(gate, students, x)?;
    let ep = ens.score_pairs(x, &split.test_pos)?;
    let en = ens.score_pairs(x, &split.test_neg)?;
    let ensemble = EnsembleOutcome {
        grid: lambda_grid.iter().map(|(l, v)| (l[0], *v)).collect(),
        valid: lambda_grid[selected].1,
        selected,
        test: EvalReport::compute(&ep, &en, ks)?,
        mean_weights: ens.mean_weights(x, &split.test_pos)?,
    };

    Ok(RunSummary {
        out: cfg.out.clone(),
        num_nodes: inputs.data.graph.num_nodes(),
        num_edges: inputs.data.graph.num_edges(),
        eval_ks: ks.clone(),
        analysis_k: ak,
        heuristics,
        baseline,
        ensemble,
        subset_distilled,
        subset_plain,
        overlap: overlap_matrix(&overlap_sets),
        overlap_labels,
        timing: StageTimes::default(),
    })
}
