//! Riemannian metric fields on the observation space.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A field of symmetric positive-definite matrices x -> M(x).
#[derive(Clone)]
pub enum MetricField {
    /// M(x) = I.
    Euclidean { dim: usize },
    /// Constant diagonal metric.
    Diagonal { diag: DVector<f64> },
    /// Arbitrary position-dependent metric.
    Custom {
        dim: usize,
        field: Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>,
    },
}

impl MetricField {
    pub fn euclidean(dim: usize) -> Self {
        MetricField::Euclidean { dim }
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Domain("diagonal metric needs at least one entry".into()));
        }
        if diag.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(
                "diagonal metric entries must be positive and finite".into(),
            ));
        }
        Ok(MetricField::Diagonal { diag: DVector::from_vec(diag) })
    }

    pub fn custom<F>(dim: usize, field: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        MetricField::Custom { dim, field: Arc::new(field) }
    }

    /// Dimension of the space the metric lives on.
    pub fn dim(&self) -> usize {
        match self {
            MetricField::Euclidean { dim } => *dim,
            MetricField::Diagonal { diag } => diag.len(),
            MetricField::Custom { dim, .. } => *dim,
        }
    }

    /// Metric matrix at `x`. Checks shape and symmetry (relative 1e-12) so a
    /// bad custom field fails loudly instead of skewing pull-backs.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "metric is defined on dimension {}, point has dimension {}",
                self.dim(),
                x.len()
            )));
        }
        let m = match self {
            MetricField::Euclidean { dim } => DMatrix::identity(*dim, *dim),
            MetricField::Diagonal { diag } => DMatrix::from_diagonal(diag),
            MetricField::Custom { dim, field } => {
                let m = field(x);
                if m.nrows() != *dim || m.ncols() != *dim {
                    return Err(Error::Domain(format!(
                        "custom metric returned a {}x{} matrix on a dimension-{dim} space",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                m
            }
        };
        let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Domain(format!(
                        "metric at the evaluation point is not symmetric: \
                         entry ({i},{j}) = {} vs ({j},{i}) = {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricField::Euclidean { dim } => {
                f.debug_struct("Euclidean").field("dim", dim).finish()
            }
            MetricField::Diagonal { diag } => {
                f.debug_struct("Diagonal").field("diag", diag).finish()
            }
            MetricField::Custom { dim, .. } => {
                f.debug_struct("Custom").field("dim", dim).finish_non_exhaustive()
            }
        }
    }
}
