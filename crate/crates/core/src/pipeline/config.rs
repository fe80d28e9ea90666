//! Flat `key=value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! seed=7
//! out=runs/cora
//! data.dir=data/cora
//! heuristics=cn,aa,ra,csp6
//! distill.alpha=0,1
//! distill.cn.alpha=1
//! ensemble.lambda=0,0.1,1
//! ```
//!
//! List values are comma separated. `distill.<heuristic>.{alpha,beta,delta}`
//! overrides the shared grid for one heuristic (`csp` matches any cap).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::synthetic::SyntheticConfig;
use crate::data::{DEFAULT_TEST_FRAC, DEFAULT_VAL_FRAC};
use crate::distill::DistillConfig;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::heuristics::HeuristicKind;

pub const TAU_GRID: [u32; 3] = [2, 4, 6];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// `edges.txt` + `features.bin|csv`, or raw Planetoid files.
    Dir(PathBuf),
    Files { edges: PathBuf, features: PathBuf },
    /// Generated citation-style graph (`cora_like` or `small` preset).
    Synthetic { preset: String, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Default for DistillGrid {
    fn default() -> Self {
        DistillGrid {
            alpha: DistillConfig::ALPHA_GRID.to_vec(),
            beta: DistillConfig::BETA_GRID.to_vec(),
            delta: DistillConfig::DELTA_GRID.to_vec(),
        }
    }
}

impl DistillGrid {
    /// Every `(alpha, beta, delta)` combination. The margin only affects the
    /// ranking term, so `alpha = 0` points appear once, with the smallest margin.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let min_delta = self.delta.iter().copied().fold(f64::INFINITY, f64::min);
        let mut out = Vec::new();
        for &a in &self.alpha {
            for &b in &self.beta {
                if a == 0.0 {
                    out.push([a, b, min_delta]);
                } else {
                    out.extend(self.delta.iter().map(|&d| [a, b, d]));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    /// Pre-made split directory; when absent a split is drawn.
    pub split_dir: Option<PathBuf>,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub heuristics: Vec<HeuristicKind>,
    pub eval_ks: Vec<usize>,
    /// Cutoff for positive-edge-set analyses.
    pub analysis_k: usize,
    /// Base student settings; grid values replace alpha, beta and delta.
    pub distill: DistillConfig,
    pub grid: DistillGrid,
    pub heuristic_grids: BTreeMap<HeuristicKind, DistillGrid>,
    pub ensemble: EnsembleConfig,
    pub lambda_grid: Vec<f64>,
    /// Also train a plain (alpha = beta = 0) student for reference.
    pub baseline: bool,
    /// Permit grid values outside the standard search space.
    pub allow_off_grid: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSource::Dir(PathBuf::from("data/cora")),
            split_dir: None,
            val_frac: DEFAULT_VAL_FRAC,
            test_frac: DEFAULT_TEST_FRAC,
            seed: 0,
            out: PathBuf::from("run"),
            jobs: 1,
            heuristics: vec![
                HeuristicKind::Cn,
                HeuristicKind::Aa,
                HeuristicKind::Ra,
                HeuristicKind::Csp { tau: 6 },
            ],
            eval_ks: vec![20],
            analysis_k: 10,
            distill: DistillConfig::default(),
            grid: DistillGrid::default(),
            heuristic_grids: BTreeMap::new(),
            ensemble: EnsembleConfig::default(),
            lambda_grid: EnsembleConfig::LAMBDA_GRID.to_vec(),
            baseline: true,
            allow_off_grid: false,
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::invalid(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn list_str<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let kv = crate::eval::read_key_values(path)?;
        let mut cfg = Self::from_pairs(&kv)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    /// Makes relative input paths relative to `base` (the config file's
    /// directory). The output directory is left as given.
    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !base.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            DataSource::Dir(d) => fix(d),
            DataSource::Files { edges, features } => {
                fix(edges);
                fix(features);
            }
            DataSource::Synthetic { .. } => {}
        }
        if let Some(s) = self.split_dir.as_mut() {
            fix(s);
        }
    }

    pub fn from_pairs(kv: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut edges = None;
        let mut features = None;
        let mut deferred: Vec<(String, String, String)> = Vec::new();
        for (k, v) in kv {
            let d = &mut cfg.distill;
            let e = &mut cfg.ensemble;
            match k.as_str() {
                "seed" => cfg.seed = parse_one(k, v)?,
                "out" => cfg.out = PathBuf::from(v),
                "jobs" => cfg.jobs = parse_one(k, v)?,
                "data.dir" => cfg.data = DataSource::Dir(PathBuf::from(v)),
                "data.edges" => edges = Some(PathBuf::from(v)),
                "data.features" => features = Some(PathBuf::from(v)),
                "data.synthetic" => {
                    let (preset, seed) = match v.split_once(':') {
                        Some((p, s)) => (p.to_string(), parse_one(k, s)?),
                        None => (v.clone(), 0),
                    };
                    cfg.data = DataSource::Synthetic { preset, seed };
                }
                "split.dir" => cfg.split_dir = Some(PathBuf::from(v)),
                "split.val_frac" => cfg.val_frac = parse_one(k, v)?,
                "split.test_frac" => cfg.test_frac = parse_one(k, v)?,
                "heuristics" => cfg.heuristics = parse_list(k, v)?,
                "eval.k" => cfg.eval_ks = parse_list(k, v)?,
                "eval.analysis_k" => cfg.analysis_k = parse_one(k, v)?,
                "baseline" => cfg.baseline = parse_bool(k, v)?,
                "grid.allow_off_grid" => cfg.allow_off_grid = parse_bool(k, v)?,
                "distill.alpha" => cfg.grid.alpha = parse_list(k, v)?,
                "distill.beta" => cfg.grid.beta = parse_list(k, v)?,
                "distill.delta" => cfg.grid.delta = parse_list(k, v)?,
                "distill.temperature" => d.temperature = parse_one(k, v)?,
                "distill.lr" => d.lr = parse_one(k, v)?,
                "distill.epochs" => d.epochs = parse_one(k, v)?,
                "distill.batch_size" => d.batch_size = parse_one(k, v)?,
                "distill.hidden" => d.hidden = parse_one(k, v)?,
                "distill.layers" => d.layers = parse_one(k, v)?,
                "distill.patience" => d.patience = parse_one(k, v)?,
                "distill.max_grad_norm" => d.max_grad_norm = parse_one(k, v)?,
                "distill.num_nearby" => d.context.num_nearby = parse_one(k, v)?,
                "distill.walk_length" => d.context.walk_length = parse_one(k, v)?,
                "distill.num_random" => d.context.num_random = parse_one(k, v)?,
                "distill.pool_rounds" => d.pool_rounds = parse_one(k, v)?,
                "ensemble.lambda" => cfg.lambda_grid = parse_list(k, v)?,
                "ensemble.lr" => e.lr = parse_one(k, v)?,
                "ensemble.epochs" => e.epochs = parse_one(k, v)?,
                "ensemble.batch_size" => e.batch_size = parse_one(k, v)?,
                "ensemble.hidden" => e.hidden = parse_one(k, v)?,
                "ensemble.patience" => e.patience = parse_one(k, v)?,
                "ensemble.epsilon" => e.epsilon = parse_one(k, v)?,
                "ensemble.max_grad_norm" => e.max_grad_norm = parse_one(k, v)?,
                other => match other.strip_prefix("distill.").and_then(|r| r.split_once('.')) {
                    Some((h, param)) if matches!(param, "alpha" | "beta" | "delta") => {
                        deferred.push((h.to_string(), param.to_string(), v.clone()))
                    }
                    _ => return Err(Error::invalid(format!("unknown config key {other:?}"))),
                },
            }
        }
        match (edges, features) {
            (Some(edges), Some(features)) => cfg.data = DataSource::Files { edges, features },
            (None, None) => {}
            _ => return Err(Error::invalid("data.edges and data.features must be given together")),
        }
        for (h, param, v) in deferred {
            let matching: Vec<HeuristicKind> = cfg
                .heuristics
                .iter()
                .copied()
                .filter(|k| k.to_string() == h || k.tag().eq_ignore_ascii_case(&h))
                .collect();
            if matching.is_empty() {
                return Err(Error::invalid(format!(
                    "distill.{h}.{param} names a heuristic not in the heuristic list"
                )));
            }
            let key = format!("distill.{h}.{param}");
            let values: Vec<f64> = parse_list(&key, &v)?;
            for kind in matching {
                let grid = cfg.heuristic_grids.entry(kind).or_insert_with(|| cfg.grid.clone());
                match param.as_str() {
                    "alpha" => grid.alpha = values.clone(),
                    "beta" => grid.beta = values.clone(),
                    _ => grid.delta = values.clone(),
                }
            }
        }
        // Shared-grid keys that come after an override still apply to the
        // parameters the override did not set.
        let shared = cfg.grid.clone();
        for (kind, grid) in cfg.heuristic_grids.iter_mut() {
            let set: Vec<&str> = kv
                .iter()
                .filter_map(|(k, _)| k.strip_prefix("distill."))
                .filter_map(|r| r.split_once('.'))
                .filter(|(h, _)| kind.to_string() == *h || kind.tag().eq_ignore_ascii_case(h))
                .map(|(_, p)| p)
                .collect();
            if !set.contains(&"alpha") {
                grid.alpha = shared.alpha.clone();
            }
            if !set.contains(&"beta") {
                grid.beta = shared.beta.clone();
            }
            if !set.contains(&"delta") {
                grid.delta = shared.delta.clone();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid_for(&self, kind: HeuristicKind) -> &DistillGrid {
        self.heuristic_grids.get(&kind).unwrap_or(&self.grid)
    }

    pub fn synthetic_config(&self) -> Option<Result<SyntheticConfig>> {
        match &self.data {
            DataSource::Synthetic { preset, seed } => Some(match preset.as_str() {
                "cora_like" => Ok(SyntheticConfig::cora_like(*seed)),
                "small" => Ok(SyntheticConfig::small(*seed)),
                other => Err(Error::invalid(format!("unknown synthetic preset {other:?}"))),
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heuristics.is_empty() {
            return Err(Error::invalid("heuristic list is empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for h in &self.heuristics {
            h.validate()?;
            if !seen.insert(*h) {
                return Err(Error::invalid(format!("heuristic {h} listed twice")));
            }
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) || self.analysis_k == 0 {
            return Err(Error::invalid("evaluation cutoffs must be positive"));
        }
        if let Some(r) = self.synthetic_config() {
            r?;
        }
        let grids = std::iter::once(&self.grid).chain(self.heuristic_grids.values());
        for g in grids {
            if g.alpha.is_empty() || g.beta.is_empty() || g.delta.is_empty() {
                return Err(Error::invalid("distillation grids must be nonempty"));
            }
            for &a in g.alpha.iter().chain(&g.beta) {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::invalid(format!("loss weight {a} must be non-negative")));
                }
            }
            if g.delta.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::invalid("margins must be positive"));
            }
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid("lambda grid must be nonempty and non-negative"));
        }
        if !self.allow_off_grid {
            self.check_standard_grids()?;
        }
        let mut d = self.distill.clone();
        d.alpha = 0.0;
        d.beta = 0.0;
        d.delta = 0.1;
        d.validate()?;
        let mut e = self.ensemble.clone();
        e.lambda = 0.0;
        e.validate()
    }

    fn check_standard_grids(&self) -> Result<()> {
        let off = |name: &str, vals: &[f64], allowed: &[f64]| -> Result<()> {
            match vals.iter().find(|v| !allowed.contains(v)) {
                Some(v) => Err(Error::invalid(format!(
                    "{name} value {v} is outside the standard grid {allowed:?}; set grid.allow_off_grid=true to permit it"
                ))),
                None => Ok(()),
            }
        };
        for g in std::iter::once(&self.grid).chain(self.heuristic_grids.values()) {
            off("alpha", &g.alpha, &DistillConfig::ALPHA_GRID)?;
            off("beta", &g.beta, &DistillConfig::BETA_GRID)?;
            off("delta", &g.delta, &DistillConfig::DELTA_GRID)?;
        }
        off("lambda", &self.lambda_grid, &EnsembleConfig::LAMBDA_GRID)?;
        for h in &self.heuristics {
            if let Some(t) = h.tau() {
                if !TAU_GRID.contains(&t) {
                    return Err(Error::invalid(format!(
                        "CSP cap {t} is outside the standard grid {TAU_GRID:?}; set grid.allow_off_grid=true to permit it"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical `key=value` form; parsing it yields an equal config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        put("jobs", self.jobs.to_string());
        match &self.data {
            DataSource::Dir(d) => put("data.dir", d.display().to_string()),
            DataSource::Files { edges, features } => {
                put("data.edges", edges.display().to_string());
                put("data.features", features.display().to_string());
            }
            DataSource::Synthetic { preset, seed } => put("data.synthetic", format!("{preset}:{seed}")),
        }
        if let Some(s) = &self.split_dir {
            put("split.dir", s.display().to_string());
        }
        put("split.val_frac", self.val_frac.to_string());
        put("split.test_frac", self.test_frac.to_string());
        put("heuristics", list_str(&self.heuristics));
        put("eval.k", list_str(&self.eval_ks));
        put("eval.analysis_k", self.analysis_k.to_string());
        put("baseline", self.baseline.to_string());
        put("grid.allow_off_grid", self.allow_off_grid.to_string());
        put("distill.alpha", list_str(&self.grid.alpha));
        put("distill.beta", list_str(&self.grid.beta));
        put("distill.delta", list_str(&self.grid.delta));
        let d = &self.distill;
        put("distill.temperature", d.temperature.to_string());
        put("distill.lr", d.lr.to_string());
        put("distill.epochs", d.epochs.to_string());
        put("distill.batch_size", d.batch_size.to_string());
        put("distill.hidden", d.hidden.to_string());
        put("distill.layers", d.layers.to_string());
        put("distill.patience", d.patience.to_string());
        put("distill.max_grad_norm", d.max_grad_norm.to_string());
        put("distill.num_nearby", d.context.num_nearby.to_string());
        put("distill.walk_length", d.context.walk_length.to_string());
        put("distill.num_random", d.context.num_random.to_string());
        put("distill.pool_rounds", d.pool_rounds.to_string());
        for (kind, g) in &self.heuristic_grids {
            put(&format!("distill.{kind}.alpha"), list_str(&g.alpha));
            put(&format!("distill.{kind}.beta"), list_str(&g.beta));
            put(&format!("distill.{kind}.delta"), list_str(&g.delta));
        }
        let e = &self.ensemble;
        put("ensemble.lambda", list_str(&self.lambda_grid));
        put("ensemble.lr", e.lr.to_string());
        put("ensemble.epochs", e.epochs.to_string());
        put("ensemble.batch_size", e.batch_size.to_string());
        put("ensemble.hidden", e.hidden.to_string());
        put("ensemble.patience", e.patience.to_string());
        put("ensemble.epsilon", e.epsilon.to_string());
        put("ensemble.max_grad_norm", e.max_grad_norm.to_string());
        kv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(s: &str) -> Vec<(String, String)> {
        s.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (k, v) = l.split_once('=').unwrap();
                (k.trim().to_string(), v.trim().to_string())
            })
            .collect()
    }

    #[test]
    fn parses_sections_and_overrides() {
        let c = RunConfig::from_pairs(&kv(
            "seed=7\nheuristics=cn,csp4\ndistill.alpha=0,1\ndistill.cn.alpha=10\ndistill.csp.delta=0.2\nensemble.lambda=0\ndistill.epochs=5",
        ))
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.heuristics, vec![HeuristicKind::Cn, HeuristicKind::Csp { tau: 4 }]);
        assert_eq!(c.grid_for(HeuristicKind::Cn).alpha, vec![10.0]);
        assert_eq!(c.grid_for(HeuristicKind::Cn).delta, DistillConfig::DELTA_GRID.to_vec());
        let csp = c.grid_for(HeuristicKind::Csp { tau: 4 });
        assert_eq!((csp.alpha.clone(), csp.delta.clone()), (vec![0.0, 1.0], vec![0.2]));
        assert_eq!(c.distill.epochs, 5);
        assert_eq!(c.lambda_grid, vec![0.0]);
    }

    #[test]
    fn roundtrips_through_pairs() {
        let c = RunConfig::from_pairs(&kv(
            "data.synthetic=small:3\nheuristics=ra,cn\ndistill.ra.beta=1\nensemble.epochs=3\nbaseline=false",
        ))
        .unwrap();
        assert_eq!(RunConfig::from_pairs(&c.to_pairs()).unwrap(), c);
    }

    #[test]
    fn rejects_invalid() {
        for bad in [
            "heuristics=",
            "heuristics=cn,cn",
            "distill.alpha=0.5",
            "ensemble.lambda=2",
            "heuristics=csp8",
            "distill.aa.alpha=1\nheuristics=cn",
            "bogus=1",
            "data.edges=e.txt",
            "jobs=0",
            "data.synthetic=huge",
        ] {
            assert!(RunConfig::from_pairs(&kv(bad)).is_err(), "{bad}");
        }
        let ok = RunConfig::from_pairs(&kv("distill.alpha=0.5\ngrid.allow_off_grid=true")).unwrap();
        assert_eq!(ok.grid.alpha, vec![0.5]);
    }

    #[test]
    fn grid_points_skip_redundant_margins() {
        let g = DistillGrid {
            alpha: vec![0.0, 1.0],
            beta: vec![0.0, 1.0],
            delta: vec![0.1, 0.2],
        };
        let pts = g.points();
        assert_eq!(pts.len(), 2 + 2 * 2);
        assert_eq!(pts[0], [0.0, 0.0, 0.1]);
        assert_eq!(DistillGrid::default().points().len(), 4 + 3 * 4 * 3);
    }
}
