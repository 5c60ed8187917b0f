//! Pull-back geometry: smooth maps, observation-space metrics, and the local
//! Gaussian model each latent point induces.
//!
//! The central operation is [`pullback_metric`]: given a map `f` and a metric
//! field `M` on the observation space, the latent point `y0` sees the
//! symmetric positive-definite matrix `A(y0) = J^T M(f(y0)) J`. Everything
//! downstream (closed-form divergences, reference sampling, neighborhood
//! densities) consumes that matrix.

mod kernel;
mod maps;
mod metric;
mod prior;

pub use kernel::SimilarityKernel;
pub use maps::{
    builtin_map, builtin_mlp, builtin_test_maps, default_fd_step, finite_difference_jacobian,
    ComposedLinearMap, LinearMap, MlpMap, PolarMap, SmoothMap, SwissRollMap, BUILTIN_MAP_NAMES,
    ISOMETRIC_BUILTIN_NAMES,
};
pub use metric::MetricField;
pub use prior::LatentPrior;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ratio of smallest to largest singular value below which a Jacobian is
/// treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Pull the observation metric back through the map at `y0`:
/// `A = J^T M(f(y0)) J`, symmetrized to absorb round-off.
///
/// Fails when the Jacobian loses column rank (the map stops being an
/// immersion there) or when anything evaluates non-finite.
pub fn pullback_metric(
    map: &dyn SmoothMap,
    metric: &MetricField,
    y0: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if y0.len() != map.dim_in() {
        return Err(Error::Domain(format!(
            "map expects latent dimension {}, point has {}",
            map.dim_in(),
            y0.len()
        )));
    }
    if metric.dim() != map.dim_out() {
        return Err(Error::Domain(format!(
            "metric lives on dimension {} but the map produces {}",
            metric.dim(),
            map.dim_out()
        )));
    }
    let x = map.evaluate(y0);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { point: y0.as_slice().to_vec() });
    }
    let jac = map.jacobian(y0)?;
    if jac.nrows() != map.dim_out() || jac.ncols() != map.dim_in() {
        return Err(Error::Domain(format!(
            "jacobian is {}x{}, expected {}x{}",
            jac.nrows(),
            jac.ncols(),
            map.dim_out(),
            map.dim_in()
        )));
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { point: y0.as_slice().to_vec() });
    }

    let svd = jac.clone().svd(false, false);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_max > 0.0) || s_min < RANK_TOLERANCE * s_max {
        return Err(Error::RankDeficientJacobian {
            point: y0.as_slice().to_vec(),
            ratio: if s_max > 0.0 { s_min / s_max } else { 0.0 },
        });
    }

    let m = metric.evaluate(&x)?;
    let a = jac.transpose() * m * &jac;
    Ok(symmetrize(&a))
}

/// (A + A^T) / 2.
pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Add the standard diagonal shift `eps * I`, `eps = 1e-10 tr(A)/d`, so that
/// a positive semidefinite matrix survives Cholesky despite round-off.
pub fn regularize_spd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = a.nrows().max(1) as f64;
    let eps = 1e-10 * (a.trace() / d).max(0.0);
    let mut out = a.clone();
    for i in 0..a.nrows() {
        out[(i, i)] += eps;
    }
    out
}

fn neighborhood_cholesky(precision: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if precision.nrows() != precision.ncols() {
        return Err(Error::Domain(format!(
            "precision matrix must be square, got {}x{}",
            precision.nrows(),
            precision.ncols()
        )));
    }
    regularize_spd(precision)
        .cholesky()
        .ok_or_else(|| Error::Domain("neighborhood precision must be positive definite".into()))
}

/// Log of [`gaussian_neighborhood_density`]; the preferred form when values
/// may underflow.
pub fn gaussian_neighborhood_log_density(
    y0: &DVector<f64>,
    precision: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    let d = y0.len();
    if y.len() != d || precision.nrows() != d {
        return Err(Error::Domain(format!(
            "dimension mismatch: center {}, precision {}x{}, point {}",
            d,
            precision.nrows(),
            precision.ncols(),
            y.len()
        )));
    }
    let chol = neighborhood_cholesky(precision)?;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let diff = y - y0;
    // with P = L L^T the quadratic form is |L^T diff|^2
    let q = (chol.l().transpose() * diff).norm_squared();
    Ok(0.5 * log_det - 0.5 * (d as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * q)
}

/// Density at `y` of the Gaussian neighborhood model centered at `y0` with
/// the given precision matrix: `|P|^(1/2) (2 pi)^(-d/2) exp(-(y-y0)^T P (y-y0) / 2)`.
pub fn gaussian_neighborhood_density(
    y0: &DVector<f64>,
    precision: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    Ok(gaussian_neighborhood_log_density(y0, precision, y)?.exp())
}

/// Re-parametrize the observation space by an invertible linear map `phi`:
/// returns the composed map `phi . f` together with the transported metric
/// `M'(x') = phi^-T M(phi^-1 x') phi^-1`, so that pull-backs are unchanged.
pub fn linear_reparametrization(
    map: Box<dyn SmoothMap>,
    metric: &MetricField,
    phi: &DMatrix<f64>,
) -> Result<(ComposedLinearMap, MetricField)> {
    let dim = map.dim_out();
    if phi.nrows() != dim || phi.ncols() != dim {
        return Err(Error::Domain(format!(
            "re-parametrization must be square of size {dim}, got {}x{}",
            phi.nrows(),
            phi.ncols()
        )));
    }
    let phi_inv = phi
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("re-parametrization matrix is singular".into()))?;
    let composed = ComposedLinearMap::new(phi.clone(), map)?;
    let inner = metric.clone();
    let phi_inv_t = phi_inv.transpose();
    let transported = MetricField::custom(dim, move |x_prime: &DVector<f64>| {
        let x = &phi_inv * x_prime;
        let m = inner
            .evaluate(&x)
            .expect("inner metric evaluation failed during re-parametrization");
        &phi_inv_t * m * &phi_inv
    });
    Ok((composed, transported))
}
