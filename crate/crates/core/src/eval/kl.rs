//! Exact check of the distillation-error decomposition on discrete models.
//!
//! The true link probability `f(x, s)` and a teacher `t(x, s)` are Bernoulli
//! parameters over a finite joint support of features `x` and latent
//! structure `s`. The best feature-only student of a teacher is its
//! conditional mean `E[t | x]`. With
//!
//! ```text
//! KL(f ‖ g) = Σ P(x,s) [ f ln(f/g) + (1-f) ln((1-f)/(1-g)) ]
//! ```
//!
//! the identity checked here is
//!
//! ```text
//! KL(f ‖ E[t|x]) = KL(f ‖ t) + Σ P(x,s) E_{y~f}[ ln p_t(y) - ln p_{E[t|x]}(y) ]
//! ```
//!
//! i.e. total error = teacher error + student-side correction. Comparing the
//! right-hand sides for two teachers tells which one yields the better
//! optimal student.

use crate::error::{Error, Result};

/// Joint distribution `P(x, s)` over `num_x × num_s` cells, row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    num_x: usize,
    num_s: usize,
    probs: Vec<f64>,
}

impl DiscreteJoint {
    /// Every cell must be strictly positive and the total must be 1.
    pub fn new(num_x: usize, num_s: usize, probs: Vec<f64>) -> Result<Self> {
        if num_x == 0 || num_s == 0 {
            return Err(Error::invalid("joint support must be nonempty"));
        }
        if probs.len() != num_x * num_s {
            return Err(Error::DimensionMismatch {
                expected: num_x * num_s,
                actual: probs.len(),
            });
        }
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::invalid(format!(
                "joint cell {i} has probability {}; every cell must be positive",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("joint sums to {total}, not 1")));
        }
        Ok(DiscreteJoint {
            num_x,
            num_s,
            probs,
        })
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn num_s(&self) -> usize {
        self.num_s
    }

    #[inline]
    pub fn p(&self, x: usize, s: usize) -> f64 {
        self.probs[x * self.num_s + s]
    }

    pub fn marginal_x(&self, x: usize) -> f64 {
        (0..self.num_s).map(|s| self.p(x, s)).sum()
    }
}

/// Bernoulli parameters per `(x, s)` cell, all strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    num_x: usize,
    num_s: usize,
    values: Vec<f64>,
}

impl ScoreTable {
    pub fn new(num_x: usize, num_s: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_x * num_s {
            return Err(Error::DimensionMismatch {
                expected: num_x * num_s,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::invalid(format!(
                "score cell {i} is {}; log is undefined outside (0, 1)",
                values[i]
            )));
        }
        Ok(ScoreTable {
            num_x,
            num_s,
            values,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, s: usize) -> f64 {
        self.values[x * self.num_s + s]
    }

    /// `E[t | x]` for every `x`.
    pub fn conditional_mean(&self, joint: &DiscreteJoint) -> Vec<f64> {
        (0..self.num_x)
            .map(|x| {
                let px = joint.marginal_x(x);
                (0..self.num_s).map(|s| joint.p(x, s) * self.get(x, s)).sum::<f64>() / px
            })
            .collect()
    }

    fn check_shape(&self, joint: &DiscreteJoint) -> Result<()> {
        if self.num_x != joint.num_x || self.num_s != joint.num_s {
            return Err(Error::invalid(format!(
                "score table is {}x{}, joint is {}x{}",
                self.num_x, self.num_s, joint.num_x, joint.num_s
            )));
        }
        Ok(())
    }
}

#[inline]
fn bernoulli_kl(f: f64, g: f64) -> f64 {
    f * (f / g).ln() + (1.0 - f) * ((1.0 - f) / (1.0 - g)).ln()
}

/// Both sides of the decomposition for one teacher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDecomposition {
    /// `KL(f ‖ E[t|x])`, computed directly.
    pub total: f64,
    /// `KL(f ‖ t)`.
    pub teacher_error: f64,
    /// `E_f[ln t − ln E[t|x]]` summed over both label outcomes.
    pub correction: f64,
    /// `|total − (teacher_error + correction)|`.
    pub residual: f64,
}

impl KlDecomposition {
    /// The right-hand side, `teacher_error + correction`.
    pub fn bound(&self) -> f64 {
        self.teacher_error + self.correction
    }
}

pub fn verify_kl_decomposition(
    joint: &DiscreteJoint,
    f: &ScoreTable,
    teacher: &ScoreTable,
) -> Result<KlDecomposition> {
    f.check_shape(joint)?;
    teacher.check_shape(joint)?;
    let mean = teacher.conditional_mean(joint);
    let (mut total, mut teacher_error, mut correction) = (0.0, 0.0, 0.0);
    for x in 0..joint.num_x {
        let m = mean[x];
        for s in 0..joint.num_s {
            let (p, fv, t) = (joint.p(x, s), f.get(x, s), teacher.get(x, s));
            total += p * bernoulli_kl(fv, m);
            teacher_error += p * bernoulli_kl(fv, t);
            correction += p * (fv * (t.ln() - m.ln()) + (1.0 - fv) * ((1.0 - t).ln() - (1.0 - m).ln()));
        }
    }
    Ok(KlDecomposition {
        total,
        teacher_error,
        correction,
        residual: (total - (teacher_error + correction)).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreferredTeacher {
    Heuristic,
    Gnn,
}

/// Evaluation of the sufficient condition for a heuristic teacher to beat a
/// GNN teacher in distillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeacherComparison {
    pub heuristic: KlDecomposition,
    pub gnn: KlDecomposition,
    /// `Heuristic` when `KL(f‖h) + corr_h <= KL(f‖g) + corr_g`.
    pub favors: PreferredTeacher,
}

impl TeacherComparison {
    /// The teacher whose optimal student has the lower total KL, computed
    /// from the direct left-hand sides rather than the condition.
    pub fn lower_total(&self) -> PreferredTeacher {
        if self.heuristic.total <= self.gnn.total {
            PreferredTeacher::Heuristic
        } else {
            PreferredTeacher::Gnn
        }
    }
}

pub fn compare_teachers(
    joint: &DiscreteJoint,
    f: &ScoreTable,
    heuristic: &ScoreTable,
    gnn: &ScoreTable,
) -> Result<TeacherComparison> {
    let h = verify_kl_decomposition(joint, f, heuristic)?;
    let g = verify_kl_decomposition(joint, f, gnn)?;
    let favors = if h.bound() <= g.bound() {
        PreferredTeacher::Heuristic
    } else {
        PreferredTeacher::Gnn
    };
    Ok(TeacherComparison {
        heuristic: h,
        gnn: g,
        favors,
    })
}
