//! Similarity kernels: decreasing functions of squared distance used to turn
//! embedding distances into unnormalized similarities.

/// kappa(r^2), strictly positive and strictly decreasing, with kappa(0) = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityKernel {
    /// exp(-r^2 / 2)
    Gaussian,
    /// 1 / (1 + r^2), the heavy-tailed choice
    Student,
    /// exp(-lambda r^2 / 2)
    ScaledGaussian { lambda: f64 },
}

impl SimilarityKernel {
    /// Kernel value for squared distance `r2`.
    pub fn of_sq_dist(&self, r2: f64) -> f64 {
        match self {
            SimilarityKernel::Gaussian => (-0.5 * r2).exp(),
            SimilarityKernel::Student => 1.0 / (1.0 + r2),
            SimilarityKernel::ScaledGaussian { lambda } => (-0.5 * lambda * r2).exp(),
        }
    }

    /// Similarity of two points.
    pub fn evaluate(&self, a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>) -> f64 {
        self.of_sq_dist((a - b).norm_squared())
    }

    /// kappa'(r^2) / kappa(r^2), exact even where the kernel value itself
    /// underflows.
    pub(crate) fn log_d_of_sq_dist(&self, r2: f64) -> f64 {
        match self {
            SimilarityKernel::Gaussian => -0.5,
            SimilarityKernel::Student => -1.0 / (1.0 + r2),
            SimilarityKernel::ScaledGaussian { lambda } => -0.5 * lambda,
        }
    }
}
