//! Discrepancy measures for smooth low-dimensional embeddings.
//!
//! Given a smooth map `f` from a latent space into a higher-dimensional
//! observation space carrying a Riemannian metric, this crate quantifies how
//! far `f` is from an isometry by comparing, around each latent reference
//! point, the Gaussian neighborhood induced by the pulled-back metric with an
//! isotropic similarity kernel. The comparison is an alpha-divergence, so a
//! single order parameter sweeps from mass-covering to mode-seeking behavior.
//!
//! Module layout:
//!
//! * [`measures`]: alpha-divergences between positive measures, their KL
//!   limits, the analytic scale normalizer, the LogDet matrix divergence, and
//!   the trapezoid quadrature oracle.
//! * [`geometry`]: smooth maps with analytic or finite-difference Jacobians,
//!   metric fields, pull-back metrics, similarity kernels, latent priors, and
//!   Gaussian neighborhood densities.
//! * [`discrepancy`]: pointwise closed forms, Monte Carlo estimators, and
//!   the conformal (kernel-width-optimized) variant.
//! * [`neighbor_embedding`]: perplexity-calibrated similarities, discrete
//!   embedding costs with analytic gradients, a momentum optimizer, and the
//!   large-sample consistency experiment.

pub mod discrepancy;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod neighbor_embedding;

pub use error::{Error, Result};
