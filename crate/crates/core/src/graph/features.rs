use crate::error::{Error, Result};

/// Row-major node feature matrix, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    num_nodes: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    /// Rejects a length mismatch and non-finite entries.
    pub fn new(num_nodes: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != num_nodes * dim {
            return Err(Error::DimensionMismatch {
                expected: num_nodes * dim,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at node {} column {}",
                pos / dim.max(1),
                pos % dim.max(1)
            )));
        }
        Ok(FeatureMatrix {
            num_nodes,
            dim,
            values,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Errors unless the matrix has exactly one row per graph node.
    pub fn check_rows(&self, num_nodes: usize) -> Result<()> {
        if self.num_nodes != num_nodes {
            return Err(Error::DimensionMismatch {
                expected: num_nodes,
                actual: self.num_nodes,
            });
        }
        Ok(())
    }

    /// Fraction of exactly-zero entries.
    pub fn sparsity(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|&&v| v == 0.0).count() as f64 / self.values.len() as f64
    }
}
