//! Latent-space sampling distributions for reference points.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Distribution over latent points. Construct through the associated
/// functions, which validate parameters up front.
#[derive(Debug, Clone)]
pub struct LatentPrior {
    kind: PriorKind,
}

#[derive(Debug, Clone)]
enum PriorKind {
    UniformBall { dim: usize, radius: f64 },
    Gaussian { mean: DVector<f64>, chol_l: DMatrix<f64> },
    Empirical { points: Vec<DVector<f64>> },
}

impl LatentPrior {
    /// Uniform distribution on the centered ball of the given radius.
    pub fn uniform_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("prior dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { kind: PriorKind::UniformBall { dim, radius } })
    }

    /// Uniform ball of radius 3, the default sampling region.
    pub fn default_ball(dim: usize) -> Result<Self> {
        Self::uniform_ball(dim, 3.0)
    }

    pub fn gaussian(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::Domain(format!(
                "covariance is {}x{} but the mean has dimension {}",
                covariance.nrows(),
                covariance.ncols(),
                mean.len()
            )));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("covariance must be positive definite".into()))?;
        Ok(Self { kind: PriorKind::Gaussian { mean, chol_l: chol.l() } })
    }

    pub fn empirical(points: Vec<DVector<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("empirical prior needs at least one point".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Domain("empirical prior points must share a dimension".into()));
        }
        Ok(Self { kind: PriorKind::Empirical { points } })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PriorKind::UniformBall { dim, .. } => *dim,
            PriorKind::Gaussian { mean, .. } => mean.len(),
            PriorKind::Empirical { points } => points[0].len(),
        }
    }

    /// Draw one point. Ball sampling rejects from the enclosing cube, which
    /// keeps the density exactly uniform in any dimension used here.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match &self.kind {
            PriorKind::UniformBall { dim, radius } => loop {
                let c =
                    DVector::from_fn(*dim, |_, _| rng.random_range(-*radius..=*radius));
                if c.norm_squared() <= radius * radius {
                    return c;
                }
            },
            PriorKind::Gaussian { mean, chol_l } => {
                let z = DVector::from_fn(mean.len(), |_, _| rng.sample(StandardNormal));
                mean + chol_l * z
            }
            PriorKind::Empirical { points } => {
                points[rng.random_range(0..points.len())].clone()
            }
        }
    }
}
