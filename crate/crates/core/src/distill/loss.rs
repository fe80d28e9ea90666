//! Relational distillation losses over one anchor's context.

use crate::error::{Error, Result};

/// Teacher order relation of a context pair: `1` when `p_i` exceeds `p_j` by
/// more than `delta`, `-1` for the mirror case, `0` otherwise.
#[inline]
pub fn teacher_relation(p_i: f64, p_j: f64, delta: f64) -> i8 {
    let d = p_i - p_j;
    if d > delta {
        1
    } else if d < -delta {
        -1
    } else {
        0
    }
}

fn check_lengths(p: &[f64], q: &[f64], min: usize) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if p.len() < min {
        return Err(Error::invalid(format!(
            "context needs at least {min} nodes, got {}",
            p.len()
        )));
    }
    if p.iter().chain(q).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite score in context"));
    }
    Ok(())
}

/// Margin ranking loss summed over ordered pairs with a nonzero relation.
pub fn loss_ranking(p: &[f64], q: &[f64], delta: f64) -> Result<f64> {
    ranking_with_grad(p, q, delta, None)
}

/// As [`loss_ranking`], also accumulating `dL/dq` into `dq`.
pub fn ranking_with_grad(p: &[f64], q: &[f64], delta: f64, mut dq: Option<&mut [f64]>) -> Result<f64> {
    check_lengths(p, q, 2)?;
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("margin must be positive, got {delta}")));
    }
    let n = p.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = teacher_relation(p[i], p[j], delta);
            if r == 0 {
                continue;
            }
            let r = f64::from(r);
            let term = -r * (q[i] - q[j]) + delta;
            if term > 0.0 {
                total += term;
                if let Some(g) = dq.as_deref_mut() {
                    g[i] -= r;
                    g[j] += r;
                }
            }
        }
    }
    Ok(total)
}

/// Temperature softmax, computed stably.
pub fn softmax(v: &[f64], t: f64) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| ((x - max) / t).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

fn log_softmax(v: &[f64], t: f64) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = v.iter().map(|x| ((x - max) / t).exp()).sum::<f64>().ln();
    v.iter().map(|x| (x - max) / t - lse).collect()
}

/// Cross-entropy `-Σ softmax(p/t) · log softmax(q/t)`.
pub fn loss_distribution(p: &[f64], q: &[f64], t: f64) -> Result<f64> {
    distribution_with_grad(p, q, t, None)
}

/// As [`loss_distribution`], also accumulating `dL/dq` into `dq`.
pub fn distribution_with_grad(p: &[f64], q: &[f64], t: f64, dq: Option<&mut [f64]>) -> Result<f64> {
    check_lengths(p, q, 1)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("temperature must be positive, got {t}")));
    }
    let a = softmax(p, t);
    let log_s = log_softmax(q, t);
    let loss = -a.iter().zip(&log_s).map(|(a, l)| a * l).sum::<f64>();
    if let Some(g) = dq {
        for ((g, a), l) in g.iter_mut().zip(&a).zip(&log_s) {
            *g += (l.exp() - a) / t;
        }
    }
    Ok(loss)
}

/// Shannon entropy of `softmax(p/t)`, the minimum of [`loss_distribution`] over `q`.
pub fn softmax_entropy(p: &[f64], t: f64) -> f64 {
    let ls = log_softmax(p, t);
    -ls.iter().map(|l| l.exp() * l).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation() {
        assert_eq!(teacher_relation(0.9, 0.2, 0.1), 1);
        assert_eq!(teacher_relation(0.2, 0.9, 0.1), -1);
        assert_eq!(teacher_relation(0.5, 0.45, 0.1), 0);
    }

    #[test]
    fn ranking_values() {
        let v = loss_ranking(&[0.9, 0.2], &[0.3, 0.6], 0.1).unwrap();
        assert!((v - 0.8).abs() < 1e-12);
        assert_eq!(loss_ranking(&[0.9, 0.2], &[0.8, 0.1], 0.1).unwrap(), 0.0);
        assert_eq!(loss_ranking(&[0.5, 0.55, 0.52], &[0.1, 0.9, 0.3], 0.1).unwrap(), 0.0);
        assert!(loss_ranking(&[0.5], &[0.5], 0.1).is_err());
        assert!(loss_ranking(&[0.5, 0.2], &[0.5, 0.1], 0.0).is_err());
    }

    #[test]
    fn distribution_values() {
        assert!(loss_distribution(&[0.3], &[0.9], 1.0).unwrap().abs() < 1e-15);
        let v = loss_distribution(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        let s1 = std::f64::consts::E / (1.0 + std::f64::consts::E);
        let expect = -(s1 * (1.0 - s1).ln() + (1.0 - s1) * s1.ln());
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 1.044_320_266_148_228).abs() < 1e-9);
        let p = [0.2, 0.7, 0.4];
        let h = softmax_entropy(&p, 0.5);
        assert!((loss_distribution(&p, &p, 0.5).unwrap() - h).abs() < 1e-12);
        assert!(loss_distribution(&p, &[0.3, 0.1, 0.9], 0.5).unwrap() > h);
        assert!(loss_distribution(&p, &p, 0.0).is_err());
    }

    #[test]
    fn shift_invariance() {
        let p = [0.9, 0.1, 0.5, 0.3];
        let q = [0.2, 0.4, 0.6, 0.1];
        let shifted: Vec<f64> = q.iter().map(|v| v + 0.25).collect();
        let a = loss_ranking(&p, &q, 0.05).unwrap();
        assert!((a - loss_ranking(&p, &shifted, 0.05).unwrap()).abs() < 1e-12);
        let b = loss_distribution(&p, &q, 1.0).unwrap();
        assert!((b - loss_distribution(&p, &shifted, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = [0.9, 0.1, 0.55, 0.3];
        let q = [0.21, 0.43, 0.62, 0.17];
        for t in [0.5, 1.0, 2.0] {
            let mut g = vec![0.0; 4];
            distribution_with_grad(&p, &q, t, Some(&mut g)).unwrap();
            for k in 0..4 {
                let h = 1e-6;
                let (mut a, mut b) = (q, q);
                a[k] += h;
                b[k] -= h;
                let fd = (loss_distribution(&p, &a, t).unwrap() - loss_distribution(&p, &b, t).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-7, "t={t} k={k}");
            }
        }
        let mut g = vec![0.0; 4];
        ranking_with_grad(&p, &q, 0.1, Some(&mut g)).unwrap();
        for k in 0..4 {
            let h = 1e-7;
            let (mut a, mut b) = (q, q);
            a[k] += h;
            b[k] -= h;
            let fd = (loss_ranking(&p, &a, 0.1).unwrap() - loss_ranking(&p, &b, 0.1).unwrap()) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "k={k}");
        }
    }
}
