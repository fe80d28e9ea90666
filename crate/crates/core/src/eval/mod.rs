//! Ranking metrics and the analysis quantities built on them.

mod analysis;
pub mod kl;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use analysis::{jaccard_overlap, overlap_matrix, positive_edge_set, subset_ratio, PositiveEdgeSet, Ratio};
pub use kl::{compare_teachers, verify_kl_decomposition, DiscreteJoint, KlDecomposition, PreferredTeacher, ScoreTable, TeacherComparison};

use crate::error::{Error, Result};
use crate::graph::Edge;

/// Default Hits@K cutoff.
pub const DEFAULT_K: usize = 20;

/// The single tie rule used by every metric: a positive only counts as
/// ranked above a negative when its score is strictly greater.
#[inline]
pub fn outranks(score: f64, other: f64) -> bool {
    score > other
}

fn check_finite(name: &str, scores: &[f64]) -> Result<()> {
    match scores.iter().position(|s| !s.is_finite()) {
        Some(i) => Err(Error::invalid(format!("{name} score {i} is not finite"))),
        None => Ok(()),
    }
}

/// The K-th largest value of `neg` (1-based).
fn kth_largest(neg: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("Hits@K needs K >= 1"));
    }
    if k > neg.len() {
        return Err(Error::invalid(format!(
            "Hits@{k} needs at least {k} negatives, got {}",
            neg.len()
        )));
    }
    let mut v = neg.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    Ok(*kth)
}

/// Per-positive hit flags at cutoff `k` against a shared negative pool.
pub fn hit_flags(pos: &[f64], neg: &[f64], k: usize) -> Result<Vec<bool>> {
    check_finite("positive", pos)?;
    check_finite("negative", neg)?;
    let threshold = kth_largest(neg, k)?;
    Ok(pos.iter().map(|&p| outranks(p, threshold)).collect())
}

/// Fraction of positives scoring strictly above the K-th largest negative.
pub fn hits_at_k(pos: &[f64], neg: &[f64], k: usize) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::invalid("Hits@K over an empty positive set"));
    }
    let flags = hit_flags(pos, neg, k)?;
    Ok(flags.iter().filter(|&&h| h).count() as f64 / pos.len() as f64)
}

/// Mean reciprocal rank; each positive is ranked against its own negatives
/// with rank `1 + #{negatives scoring strictly higher}`.
pub fn mrr<N: AsRef<[f64]>>(pos: &[f64], negs: &[N]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::invalid("MRR over an empty positive set"));
    }
    if pos.len() != negs.len() {
        return Err(Error::DimensionMismatch {
            expected: pos.len(),
            actual: negs.len(),
        });
    }
    check_finite("positive", pos)?;
    let mut total = 0.0;
    for (&p, n) in pos.iter().zip(negs) {
        let n = n.as_ref();
        check_finite("negative", n)?;
        let above = n.iter().filter(|&&s| outranks(s, p)).count();
        total += 1.0 / (1 + above) as f64;
    }
    Ok(total / pos.len() as f64)
}

/// Hits at several cutoffs plus MRR, all against one shared negative pool.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub hit_flags: BTreeMap<usize, Vec<bool>>,
}

impl EvalReport {
    pub fn compute(pos: &[f64], neg: &[f64], ks: &[usize]) -> Result<Self> {
        let mut hits = BTreeMap::new();
        let mut flags = BTreeMap::new();
        for &k in ks {
            let f = hit_flags(pos, neg, k)?;
            if pos.is_empty() {
                return Err(Error::invalid("evaluation over an empty positive set"));
            }
            hits.insert(k, f.iter().filter(|&&h| h).count() as f64 / pos.len() as f64);
            flags.insert(k, f);
        }
        let shared: Vec<&[f64]> = vec![neg; pos.len()];
        Ok(EvalReport {
            hits,
            mrr: mrr(pos, &shared)?,
            hit_flags: flags,
        })
    }

    pub fn hits(&self, k: usize) -> Option<f64> {
        self.hits.get(&k).copied()
    }

    /// `hits@K=value` lines followed by `mrr=value`.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = self
            .hits
            .iter()
            .map(|(k, v)| (format!("hits@{k}"), format!("{v:.6}")))
            .collect();
        kv.push(("mrr".into(), format!("{:.6}", self.mrr)));
        kv
    }
}

/// Writes a flat `key=value` report.
pub fn write_key_values(path: impl AsRef<Path>, kv: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in kv {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a `key=value` report, skipping blank and `#` lines.
pub fn read_key_values(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected key=value".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Per-edge score dump: `u<TAB>v<TAB>label<TAB>score`.
pub fn write_scores_tsv(
    path: impl AsRef<Path>,
    pos: &[Edge],
    pos_scores: &[f64],
    neg: &[Edge],
    neg_scores: &[f64],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "u\tv\tlabel\tscore")?;
    for (label, edges, scores) in [(1, pos, pos_scores), (0, neg, neg_scores)] {
        for (&(u, v), s) in edges.iter().zip(scores) {
            writeln!(w, "{u}\t{v}\t{label}\t{s}")?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_examples() {
        assert_eq!(hits_at_k(&[0.9], &[0.1, 0.2, 0.3], 1).unwrap(), 1.0);
        assert_eq!(hits_at_k(&[0.15], &[0.1, 0.2, 0.3], 2).unwrap(), 0.0);
        assert!(hits_at_k(&[0.5], &[0.1, 0.2], 3).is_err());
        assert!(hits_at_k(&[0.5], &[0.1, 0.2], 0).is_err());
        assert!(hits_at_k(&[], &[0.1], 1).is_err());
        assert!(hits_at_k(&[f64::NAN], &[0.1], 1).is_err());
    }

    #[test]
    fn ties_do_not_hit() {
        // The positive equals the K-th negative: strict rule says miss.
        assert_eq!(hits_at_k(&[0.2], &[0.2, 0.2, 0.1], 1).unwrap(), 0.0);
        assert_eq!(hits_at_k(&[0.2], &[0.2, 0.1, 0.1], 2).unwrap(), 1.0);
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mrr(&[0.9], &[vec![0.1, 0.2]]).unwrap(), 1.0);
        assert_eq!(mrr(&[0.5], &[vec![0.6, 0.7, 0.8, 0.1]]).unwrap(), 0.25);
        assert_eq!(
            mrr(&[0.9, 0.5], &[vec![0.1, 0.2], vec![0.6, 0.1]]).unwrap(),
            0.75
        );
        // A tie ranks the positive first.
        assert_eq!(mrr(&[0.5], &[vec![0.5]]).unwrap(), 1.0);
        assert!(mrr::<Vec<f64>>(&[], &[]).is_err());
        assert!(mrr(&[0.5], &[vec![0.1], vec![0.2]]).is_err());
    }

    #[test]
    fn report_is_monotone_in_k() {
        let pos = [0.9, 0.5, 0.3, 0.05];
        let neg = [0.8, 0.6, 0.4, 0.35, 0.2, 0.1];
        let r = EvalReport::compute(&pos, &neg, &[1, 3, 5]).unwrap();
        let vals: Vec<f64> = r.hits.values().copied().collect();
        assert_eq!(vals, vec![0.25, 0.5, 0.75]);
        assert_eq!(r.hit_flags[&3], vec![true, true, false, false]);
        let kv = r.key_values();
        assert_eq!(kv[0], ("hits@1".to_string(), "0.250000".to_string()));
        assert_eq!(kv.last().unwrap().0, "mrr");
    }

    #[test]
    fn key_value_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.txt");
        let kv = vec![("a".to_string(), "1".to_string()), ("b.c".into(), "x=y".into())];
        write_key_values(&p, &kv).unwrap();
        assert_eq!(read_key_values(&p).unwrap(), kv);
    }
}
