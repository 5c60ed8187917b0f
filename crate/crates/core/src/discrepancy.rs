//! How far a smooth map is from an isometry.
//!
//! At a reference point `y0` the map induces the pull-back matrix
//! `A = J^T M J`. The neighborhood density `p` it defines is compared with a
//! distance kernel on the latent space; the comparison has a closed form in
//! the eigenvalues of `A`, and two Monte Carlo estimators reproduce it from
//! samples alone (no Jacobian access). The conformal variant additionally
//! frees the kernel's scale per reference point.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pullback_metric, regularize_spd, LatentPrior, MetricField, SimilarityKernel, SmoothMap};
use crate::measures::{check_symmetric, divergence_contribution, AlphaParam};

/// Which computation produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscrepancyVariant {
    #[serde(rename = "CLOSED_FORM")]
    ClosedForm,
    /// Monte Carlo with neighbors drawn from the pull-back density itself.
    #[serde(rename = "EMPIRICAL_R_EQ_P")]
    EmpiricalReferenceP,
    /// Monte Carlo with neighbors drawn from the kernel's normalized density.
    #[serde(rename = "EMPIRICAL_R_EQ_Q")]
    EmpiricalReferenceQ,
}

/// A discrepancy value with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyEstimate {
    pub value: f64,
    /// Sample standard deviation over reference points divided by sqrt(m);
    /// zero when the per-reference values are constant.
    pub std_error: f64,
    /// Reference points that entered the mean.
    pub m: usize,
    /// Neighbors per reference (0 for closed form).
    pub n: usize,
    pub alpha: f64,
    pub variant: DiscrepancyVariant,
    pub seed: u64,
    /// References dropped because every neighbor density underflowed or the
    /// per-reference value came out non-finite.
    pub skipped_points: usize,
}

const DENSITY_UNDERFLOW_LOG: f64 = -690.77552789821371; // ln(1e-300)

fn ln_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).ln()
}

/// Eigenvalues of a symmetric positive-definite pull-back matrix.
fn spd_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() || a.is_empty() {
        return Err(Error::Domain(format!(
            "pull-back matrix must be square and non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_symmetric(a, "pull-back matrix")?;
    let eigen = a.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    if vals.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain(
            "pull-back matrix must be positive definite".into(),
        ));
    }
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(vals)
}

/// log of the Hellinger-type integral for the Gaussian kernel:
/// sum over eigenvalues of (alpha/2) ln l - 1/2 ln(alpha l + 1 - alpha).
fn log_hellinger(eigenvalues: &[f64], alpha: f64) -> Result<f64> {
    let mut acc = 0.0;
    for &l in eigenvalues {
        let combination = alpha * l + (1.0 - alpha);
        if combination <= 0.0 {
            return Err(Error::IndefiniteCombination {
                alpha,
                eigenvalue: l,
                combination,
                point: None,
            });
        }
        acc += 0.5 * alpha * l.ln() - 0.5 * combination.ln();
    }
    Ok(acc)
}

fn gaussian_closed_form(eigenvalues: &[f64], alpha: &AlphaParam) -> Result<f64> {
    let d = eigenvalues.len() as f64;
    let log_det: f64 = eigenvalues.iter().map(|l| l.ln()).sum();
    if alpha.near_one() {
        let tr_inv: f64 = eigenvalues.iter().map(|l| 1.0 / l).sum();
        return Ok((0.5 * log_det + 0.5 * tr_inv - 0.5 * d).max(0.0));
    }
    if alpha.near_zero() {
        let tr: f64 = eigenvalues.iter().sum();
        return Ok((-0.5 * log_det + 0.5 * tr - 0.5 * d).max(0.0));
    }
    let a = alpha.alpha();
    let h = log_hellinger(eigenvalues, a)?.exp();
    Ok(((1.0 - h) / (a * (1.0 - a))).max(0.0))
}

/// Closed-form pointwise discrepancy of a pull-back matrix against the unit
/// kernel.
///
/// Gaussian kernel: `[1 - |A|^(a/2) / |aA + (1-a)I|^(1/2)] / (a(1-a))` with
/// the log-det limits at a = 0 and a = 1. The scaled Gaussian kernel with
/// rate lambda is the same expression on `A / lambda`. The Student kernel is
/// supported only at a = 1, where it reduces to a log-det score whose
/// additive constant is fixed so that `A = 2I` scores 0.
pub fn pointwise_discrepancy_closed_form(
    a: &DMatrix<f64>,
    alpha: &AlphaParam,
    kernel: &SimilarityKernel,
) -> Result<f64> {
    match kernel {
        SimilarityKernel::Gaussian => {
            let eig = spd_eigenvalues(a)?;
            gaussian_closed_form(&eig, alpha)
        }
        SimilarityKernel::ScaledGaussian { lambda } => {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Domain(format!(
                    "kernel rate {lambda} must be positive"
                )));
            }
            let eig: Vec<f64> = spd_eigenvalues(a)?.iter().map(|l| l / lambda).collect();
            gaussian_closed_form(&eig, alpha)
        }
        SimilarityKernel::Student => {
            if !alpha.near_one() {
                return Err(Error::UnsupportedKernel(
                    "the Student kernel has a closed form only at alpha = 1".into(),
                ));
            }
            let eig = spd_eigenvalues(a)?;
            let d = eig.len() as f64;
            let log_det: f64 = eig.iter().map(|l| l.ln()).sum();
            let tr_inv: f64 = eig.iter().map(|l| 1.0 / l).sum();
            // constant chosen so the optimal A = 2I scores 0
            Ok(0.5 * log_det + tr_inv - 0.5 * d * (1.0 + std::f64::consts::LN_2))
        }
    }
}

/// Pointwise discrepancy after optimizing the kernel's mass scale (the
/// auto-normalizer): `[1 - h^(1/a)] / (1-a)` with `h` the same integral as in
/// the plain form. Coincides with the plain form at a = 1; at a = 0 the limit
/// is `1 - exp(-D_0)`. Gaussian-family kernels only.
pub fn pointwise_discrepancy_reduced(
    a: &DMatrix<f64>,
    alpha: &AlphaParam,
    kernel: &SimilarityKernel,
) -> Result<f64> {
    let eig = match kernel {
        SimilarityKernel::Gaussian => spd_eigenvalues(a)?,
        SimilarityKernel::ScaledGaussian { lambda } => {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Domain(format!(
                    "kernel rate {lambda} must be positive"
                )));
            }
            spd_eigenvalues(a)?.iter().map(|l| l / lambda).collect()
        }
        SimilarityKernel::Student => {
            return Err(Error::UnsupportedKernel(
                "the scale-optimized form is defined for Gaussian-family kernels".into(),
            ))
        }
    };
    reduced_from_eigenvalues(&eig, alpha)
}

fn reduced_from_eigenvalues(eigenvalues: &[f64], alpha: &AlphaParam) -> Result<f64> {
    if alpha.near_one() {
        return gaussian_closed_form(eigenvalues, alpha);
    }
    if alpha.near_zero() {
        let d0 = gaussian_closed_form(eigenvalues, &AlphaParam::new(0.0))?;
        return Ok(1.0 - (-d0).exp());
    }
    let a = alpha.alpha();
    let log_h = log_hellinger(eigenvalues, a)?;
    Ok(((1.0 - (log_h / a).exp()) / (1.0 - a)).max(0.0))
}

fn attach_point(err: Error, y0: &DVector<f64>) -> Error {
    match err {
        Error::IndefiniteCombination { alpha, eigenvalue, combination, point: None } => {
            Error::IndefiniteCombination {
                alpha,
                eigenvalue,
                combination,
                point: Some(y0.as_slice().to_vec()),
            }
        }
        other => other,
    }
}

fn summarize(
    values: &[f64],
    n: usize,
    alpha: &AlphaParam,
    variant: DiscrepancyVariant,
    seed: u64,
    skipped: usize,
) -> Result<DiscrepancyEstimate> {
    let m = values.len();
    if m == 0 {
        return Err(Error::Numerical(
            "every reference point was skipped; nothing to average".into(),
        ));
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let std_error = if m > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    } else {
        0.0
    };
    Ok(DiscrepancyEstimate {
        value: mean,
        std_error,
        m,
        n,
        alpha: alpha.alpha(),
        variant,
        seed,
        skipped_points: skipped,
    })
}

/// Expected closed-form discrepancy over reference points drawn from the
/// prior. Deterministic given the seed.
pub fn alpha_discrepancy(
    map: &dyn SmoothMap,
    metric: &MetricField,
    prior: &LatentPrior,
    alpha: &AlphaParam,
    kernel: &SimilarityKernel,
    m: usize,
    seed: u64,
) -> Result<DiscrepancyEstimate> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 reference points, got {m}")));
    }
    if prior.dim() != map.dim_in() {
        return Err(Error::Domain(format!(
            "prior dimension {} does not match the map's latent dimension {}",
            prior.dim(),
            map.dim_in()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        let y0 = prior.sample(&mut rng);
        let a = pullback_metric(map, metric, &y0)?;
        let v = pointwise_discrepancy_closed_form(&a, alpha, kernel)
            .map_err(|e| attach_point(e, &y0))?;
        values.push(v);
    }
    summarize(&values, 0, alpha, DiscrepancyVariant::ClosedForm, seed, 0)
}

/// Per-reference divergence of the sampled similarity ratios, with the mass
/// scale gamma either optimized in closed form (`None`) or imposed.
///
/// `log_shat[j]` is ln of the j-th similarity-to-density ratio. Returns the
/// gamma that was used and the divergence value.
pub(crate) fn reference_divergence(
    log_shat: &[f64],
    alpha: &AlphaParam,
    gamma: Option<f64>,
) -> (f64, f64) {
    let n = log_shat.len() as f64;
    let log_s1 = log_sum_exp(log_shat) - n.ln(); // ln mean(shat)
    if alpha.near_one() {
        let mean_log: f64 = log_shat.iter().sum::<f64>() / n;
        match gamma {
            None => {
                // optimum gamma = 1 / mean(shat); value is the normalized form
                ((-log_s1).exp(), log_s1 - mean_log)
            }
            Some(g) => {
                let h = -1.0 + g * log_s1.exp() - g.ln() - mean_log;
                (g, h)
            }
        }
    } else if alpha.near_zero() {
        // weights proportional to shat
        let denom = log_sum_exp(log_shat);
        let weighted_mean_log: f64 = log_shat
            .iter()
            .map(|&l| (l - denom).exp() * l)
            .sum();
        match gamma {
            None => {
                let log_gamma = -weighted_mean_log;
                let g = log_gamma.exp();
                (g, 1.0 - (log_gamma + log_s1).exp())
            }
            Some(g) => {
                // 1 - gamma mean(shat) + gamma mean(shat ln(gamma shat))
                let s1 = log_s1.exp();
                let mean_shat_log: f64 = log_shat
                    .iter()
                    .map(|&l| l.exp() * (g.ln() + l))
                    .sum::<f64>()
                    / n;
                (g, 1.0 - g * s1 + g * mean_shat_log)
            }
        }
    } else {
        let a = alpha.alpha();
        let scaled: Vec<f64> = log_shat.iter().map(|&l| (1.0 - a) * l).collect();
        let log_s2 = log_sum_exp(&scaled) - n.ln(); // ln mean(shat^(1-a))
        match gamma {
            None => {
                let g = ((log_s2 - log_s1) / a).exp();
                // plugging the optimum in collapses the two gamma terms
                let log_t = log_s2 / a + (1.0 - 1.0 / a) * log_s1;
                let h = ((1.0 - log_t.exp()) / (1.0 - a)).max(0.0);
                (g, h)
            }
            Some(g) => {
                let s1 = log_s1.exp();
                let s2 = log_s2.exp();
                let h = 1.0 / (1.0 - a) + g * s1 / a - g.powf(1.0 - a) * s2 / (a * (1.0 - a));
                (g, h)
            }
        }
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

struct ReferenceGeometry {
    chol_l: DMatrix<f64>,
    log_det: f64,
}

fn reference_geometry(
    map: &dyn SmoothMap,
    metric: &MetricField,
    y0: &DVector<f64>,
) -> Result<ReferenceGeometry> {
    let a = pullback_metric(map, metric, y0)?;
    let chol = regularize_spd(&a).cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "pull-back matrix is not positive definite at {:?}",
            y0.as_slice()
        ))
    })?;
    let chol_l = chol.l();
    let log_det: f64 = chol_l.diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    Ok(ReferenceGeometry { chol_l, log_det })
}

fn require_gaussian_kernel(kernel: &SimilarityKernel, what: &str) -> Result<()> {
    match kernel {
        SimilarityKernel::Gaussian => Ok(()),
        other => Err(Error::UnsupportedKernel(format!(
            "{what} is defined for the unit Gaussian kernel, not {other:?}"
        ))),
    }
}

fn check_estimator_sizes(m: usize, n: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 reference points, got {m}")));
    }
    if n < 10 {
        return Err(Error::Domain(format!("need at least 10 neighbors per reference, got {n}")));
    }
    Ok(())
}

/// Monte Carlo discrepancy with neighbors drawn from the pull-back density
/// itself (the low-variance choice for the importance weights).
///
/// Per reference `y0`: neighbors are `y0 + L^-T z` with `A = L L^T` and `z`
/// standard normal, so the density of each neighbor is known exactly; the
/// per-reference divergence optimizes gamma in closed form. References whose
/// neighbor densities all underflow are skipped and counted.
pub fn empirical_alpha_discrepancy_rp(
    map: &dyn SmoothMap,
    metric: &MetricField,
    prior: &LatentPrior,
    alpha: &AlphaParam,
    kernel: &SimilarityKernel,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<DiscrepancyEstimate> {
    require_gaussian_kernel(kernel, "the density-sampled estimator")?;
    check_estimator_sizes(m, n)?;
    let d = map.dim_in();
    let mut ref_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(m);
    let mut skipped = 0usize;
    for i in 0..m {
        let y0 = prior.sample(&mut ref_rng);
        let geo = reference_geometry(map, metric, &y0).map_err(|e| attach_point(e, &y0))?;
        let lt = geo.chol_l.transpose();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + i as u64);
        let mut log_shat = Vec::with_capacity(n);
        let mut any_density = false;
        for _ in 0..n {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            // neighbor offset w solves L^T w = z, giving w^T A w = |z|^2
            let w = lt
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            let log_p =
                0.5 * geo.log_det - 0.5 * d as f64 * ln_2pi() - 0.5 * z.norm_squared();
            let log_s = -0.5 * w.norm_squared();
            if log_p >= DENSITY_UNDERFLOW_LOG {
                any_density = true;
            }
            log_shat.push(log_s - log_p);
        }
        let (_, h) = reference_divergence(&log_shat, alpha, None);
        if !any_density || !h.is_finite() {
            skipped += 1;
            continue;
        }
        values.push(h);
    }
    summarize(&values, n, alpha, DiscrepancyVariant::EmpiricalReferenceP, seed, skipped)
}

/// Monte Carlo discrepancy with neighbors drawn from the kernel's normalized
/// density (`y = y0 + e`, `e` standard normal for the unit Gaussian kernel).
/// Averages the pointwise divergence of the density ratios; no mass scale is
/// involved because the sampling density is already normalized.
pub fn empirical_alpha_discrepancy_rq(
    map: &dyn SmoothMap,
    metric: &MetricField,
    prior: &LatentPrior,
    alpha: &AlphaParam,
    kernel: &SimilarityKernel,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<DiscrepancyEstimate> {
    require_gaussian_kernel(kernel, "the kernel-sampled estimator")?;
    check_estimator_sizes(m, n)?;
    let d = map.dim_in();
    let mut ref_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(m);
    let mut skipped = 0usize;
    for i in 0..m {
        let y0 = prior.sample(&mut ref_rng);
        let geo = reference_geometry(map, metric, &y0).map_err(|e| attach_point(e, &y0))?;
        let lt = geo.chol_l.transpose();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + i as u64);
        let mut total = 0.0;
        let mut any_density = false;
        for _ in 0..n {
            let e = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            // quadratic form e^T A e through the Cholesky factor
            let q = (&lt * &e).norm_squared();
            let log_p = 0.5 * geo.log_det - 0.5 * d as f64 * ln_2pi() - 0.5 * q;
            let log_q = -0.5 * d as f64 * ln_2pi() - 0.5 * e.norm_squared();
            if log_p >= DENSITY_UNDERFLOW_LOG {
                any_density = true;
            }
            let ratio = (log_p - log_q).exp();
            total += divergence_contribution(ratio, 1.0, alpha);
        }
        let h = total / n as f64;
        if !any_density || !h.is_finite() {
            skipped += 1;
            continue;
        }
        values.push(h);
    }
    summarize(&values, n, alpha, DiscrepancyVariant::EmpiricalReferenceQ, seed, skipped)
}

/// How the per-reference kernel scale is optimized.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSearch {
    /// Closed form `lambda* = d / tr(A^-1)`; valid only at alpha = 1.
    AnalyticD1,
    /// Golden-section search on ln(lambda) over `bracket` to relative
    /// tolerance `tol`.
    GoldenSection { bracket: (f64, f64), tol: f64 },
}

/// Configuration for the conformal variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalConfig {
    pub lambda_search: LambdaSearch,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        ConformalConfig {
            lambda_search: LambdaSearch::GoldenSection { bracket: (1e-4, 1e4), tol: 1e-8 },
        }
    }
}

/// Conformal discrepancy result: the estimate plus the per-reference
/// optimized kernel scales.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalReport {
    pub estimate: DiscrepancyEstimate,
    pub lambdas: Vec<f64>,
}

/// Expected pointwise discrepancy minimized per reference over both the mass
/// scale (analytic) and the kernel rate lambda.
pub fn conformal_alpha_discrepancy(
    map: &dyn SmoothMap,
    metric: &MetricField,
    prior: &LatentPrior,
    alpha: &AlphaParam,
    m: usize,
    cfg: &ConformalConfig,
    seed: u64,
) -> Result<ConformalReport> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 reference points, got {m}")));
    }
    if let LambdaSearch::AnalyticD1 = cfg.lambda_search {
        if !alpha.near_one() {
            return Err(Error::Domain(
                "the analytic kernel-scale formula holds only at alpha = 1; \
                 use the golden-section search for other alpha"
                    .into(),
            ));
        }
    }
    if let LambdaSearch::GoldenSection { bracket, tol } = &cfg.lambda_search {
        if !(bracket.0 > 0.0 && bracket.1 > bracket.0 && bracket.1.is_finite()) {
            return Err(Error::Domain(format!(
                "kernel-scale bracket ({}, {}) must be positive and increasing",
                bracket.0, bracket.1
            )));
        }
        if !(*tol > 0.0) {
            return Err(Error::Domain(format!("search tolerance {tol} must be positive")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(m);
    let mut lambdas = Vec::with_capacity(m);
    for _ in 0..m {
        let y0 = prior.sample(&mut rng);
        let a = pullback_metric(map, metric, &y0)?;
        let eig = spd_eigenvalues(&a).map_err(|e| attach_point(e, &y0))?;
        let (lambda, value) = match &cfg.lambda_search {
            LambdaSearch::AnalyticD1 => {
                let tr_inv: f64 = eig.iter().map(|l| 1.0 / l).sum();
                let lambda = eig.len() as f64 / tr_inv;
                let scaled: Vec<f64> = eig.iter().map(|l| l / lambda).collect();
                (lambda, reduced_from_eigenvalues(&scaled, alpha)?)
            }
            LambdaSearch::GoldenSection { bracket, tol } => {
                let objective = |log_lambda: f64| -> Result<f64> {
                    let lambda = log_lambda.exp();
                    let scaled: Vec<f64> = eig.iter().map(|l| l / lambda).collect();
                    reduced_from_eigenvalues(&scaled, alpha)
                };
                let (x, v) =
                    golden_section_min(&objective, bracket.0.ln(), bracket.1.ln(), *tol)?;
                (x.exp(), v)
            }
        };
        values.push(value);
        lambdas.push(lambda);
    }
    let estimate = summarize(&values, 0, alpha, DiscrepancyVariant::ClosedForm, seed, 0)?;
    Ok(ConformalReport { estimate, lambdas })
}

/// Golden-section minimization on [a, b]. Errors if the minimum sits at an
/// endpoint, which means the bracket does not contain the minimizer.
fn golden_section_min(
    g: &dyn Fn(f64) -> Result<f64>,
    a0: f64,
    b0: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.6180339887498949;
    let (mut a, mut b) = (a0, b0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c)?;
    let mut gd = g(d)?;
    let width_tol = tol * (1.0 + a0.abs().max(b0.abs()));
    while b - a > width_tol {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let edge = 10.0 * width_tol.max(f64::EPSILON * (1.0 + x.abs()));
    if x - a0 < edge || b0 - x < edge {
        return Err(Error::BracketWithoutMinimum { lo: a0.exp(), hi: b0.exp() });
    }
    Ok((x, g(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_map, linear_reparametrization, LinearMap};
    use crate::measures::{alpha_divergence_quadrature, GridSpec};
    use approx::assert_abs_diff_eq;

    fn scalar(a: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 1, &[a])
    }

    fn gauss(alpha: f64) -> (AlphaParam, SimilarityKernel) {
        (AlphaParam::new(alpha), SimilarityKernel::Gaussian)
    }

    #[test]
    fn closed_form_anchors_for_precision_two() {
        let a = scalar(2.0);
        let (a1, k) = gauss(1.0);
        assert_abs_diff_eq!(
            pointwise_discrepancy_closed_form(&a, &a1, &k).unwrap(),
            0.0965735902799726,
            epsilon = 1e-12
        );
        let a0 = AlphaParam::new(0.0);
        assert_abs_diff_eq!(
            pointwise_discrepancy_closed_form(&a, &a0, &k).unwrap(),
            0.1534264097200274,
            epsilon = 1e-12
        );
        let ah = AlphaParam::new(0.5);
        let expected = 4.0 * (1.0 - 2.0f64.powf(0.25) / 1.5f64.sqrt());
        assert_abs_diff_eq!(
            pointwise_discrepancy_closed_form(&a, &ah, &k).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn identity_matrix_scores_zero_for_all_alpha() {
        let a = DMatrix::identity(3, 3);
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, -0.5] {
            let (ap, k) = gauss(alpha);
            let v = pointwise_discrepancy_closed_form(&a, &ap, &k).unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_matches_quadrature_oracle() {
        // 1-D neighborhood density with precision a versus the unit kernel's
        // normalized density
        for (a_val, alpha) in [(2.0, 0.25), (0.5, 0.75), (5.0, 0.5)] {
            let (ap, k) = gauss(alpha);
            let closed = pointwise_discrepancy_closed_form(&scalar(a_val), &ap, &k).unwrap();
            let p = move |y: &[f64]| {
                (a_val / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * a_val * y[0] * y[0]).exp()
            };
            let q = |y: &[f64]| {
                (1.0 / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * y[0] * y[0]).exp()
            };
            let grid = GridSpec::line(-12.0, 12.0, 8001).unwrap();
            let quad = alpha_divergence_quadrature(&p, &q, &grid, &ap).unwrap();
            assert_abs_diff_eq!(closed, quad.value, epsilon = 1e-6);
        }
    }

    #[test]
    fn scaled_kernel_rescales_the_matrix() {
        let (ap, _) = gauss(0.5);
        let scaled = SimilarityKernel::ScaledGaussian { lambda: 2.0 };
        let direct = pointwise_discrepancy_closed_form(&scalar(4.0), &ap, &scaled).unwrap();
        let manual =
            pointwise_discrepancy_closed_form(&scalar(2.0), &ap, &SimilarityKernel::Gaussian)
                .unwrap();
        assert_abs_diff_eq!(direct, manual, epsilon = 1e-14);
    }

    #[test]
    fn student_kernel_scores_zero_at_twice_identity() {
        let a = DMatrix::identity(3, 3) * 2.0;
        let ap = AlphaParam::new(1.0);
        let v = pointwise_discrepancy_closed_form(&a, &ap, &SimilarityKernel::Student).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn student_kernel_minimum_sits_at_c_two() {
        let ap = AlphaParam::new(1.0);
        let mut best = (f64::INFINITY, 0.0);
        for step in 0..=80 {
            let c = 0.5 + 3.5 * step as f64 / 80.0;
            let a = DMatrix::identity(2, 2) * c;
            let v = pointwise_discrepancy_closed_form(&a, &ap, &SimilarityKernel::Student)
                .unwrap();
            if v < best.0 {
                best = (v, c);
            }
        }
        assert_abs_diff_eq!(best.1, 2.0, epsilon = 3.5 / 80.0 + 1e-12);
    }

    #[test]
    fn student_kernel_rejects_other_alpha() {
        let err = pointwise_discrepancy_closed_form(
            &scalar(2.0),
            &AlphaParam::new(0.5),
            &SimilarityKernel::Student,
        )
        .err()
        .expect("must fail");
        assert!(matches!(err, Error::UnsupportedKernel(_)), "got {err:?}");
    }

    #[test]
    fn indefinite_combination_reports_the_eigenvalue() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 0.1]));
        let (ap, k) = gauss(-0.2);
        match pointwise_discrepancy_closed_form(&a, &ap, &k) {
            Err(Error::IndefiniteCombination { eigenvalue, combination, .. }) => {
                assert_abs_diff_eq!(eigenvalue, 10.0, epsilon = 1e-12);
                assert!(combination <= 0.0);
            }
            other => panic!("got {other:?}"),
        }
        let (ap, k) = gauss(1.2);
        assert!(matches!(
            pointwise_discrepancy_closed_form(&a, &ap, &k),
            Err(Error::IndefiniteCombination { .. })
        ));
    }

    #[test]
    fn closed_form_is_finite_and_continuous_on_the_admissible_range() {
        // admissible alpha for eigenvalues {10, 0.1} is (-1/9, 10/9); strong
        // contraction/expansion directions coexist, and the value climbs
        // toward +inf at both endpoints without a mode/cover regime change
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 0.1]));
        let k = SimilarityKernel::Gaussian;
        let eval = |alpha: f64| {
            pointwise_discrepancy_closed_form(&a, &AlphaParam::new(alpha), &k).unwrap()
        };
        let (lo, hi) = (-1.0 / 9.0 + 0.005, 10.0 / 9.0 - 0.005);
        let steps = 400;
        let mut worst = (0.0f64, lo, lo);
        let mut prev = eval(lo);
        for i in 1..=steps {
            let alpha = lo + (hi - lo) * i as f64 / steps as f64;
            let v = eval(alpha);
            assert!(v.is_finite() && v >= 0.0, "alpha = {alpha}");
            let jump = (v - prev).abs();
            if jump > worst.0 {
                worst = (jump, alpha - (hi - lo) / steps as f64, alpha);
            }
            prev = v;
        }
        // bisecting the steepest interval must shrink the jump: a step
        // discontinuity would keep its full height at any refinement
        let (coarse_jump, mut wl, mut wr) = worst;
        for _ in 0..12 {
            let mid = 0.5 * (wl + wr);
            if (eval(mid) - eval(wl)).abs() > (eval(wr) - eval(mid)).abs() {
                wr = mid;
            } else {
                wl = mid;
            }
        }
        let refined_jump = (eval(wr) - eval(wl)).abs();
        assert!(
            refined_jump < 0.05 * coarse_jump,
            "jump {coarse_jump} near [{wl}, {wr}] did not vanish under refinement: {refined_jump}"
        );
        // the limit formulas take over smoothly at both switch points
        let tol = AlphaParam::new(0.0).limit_tolerance();
        assert_abs_diff_eq!(eval(0.0), eval(3.0 * tol), epsilon = 1e-3);
        assert_abs_diff_eq!(eval(1.0), eval(1.0 - 3.0 * tol), epsilon = 1e-3);
    }

    #[test]
    fn reduced_form_coincides_at_alpha_one_and_lies_below_elsewhere() {
        let a = scalar(2.0);
        let k = SimilarityKernel::Gaussian;
        let plain1 = pointwise_discrepancy_closed_form(&a, &AlphaParam::new(1.0), &k).unwrap();
        let red1 = pointwise_discrepancy_reduced(&a, &AlphaParam::new(1.0), &k).unwrap();
        assert_abs_diff_eq!(plain1, red1, epsilon = 1e-14);
        for alpha in [0.0, 0.25, 0.5, 0.75] {
            let plain =
                pointwise_discrepancy_closed_form(&a, &AlphaParam::new(alpha), &k).unwrap();
            let red = pointwise_discrepancy_reduced(&a, &AlphaParam::new(alpha), &k).unwrap();
            assert!(red <= plain + 1e-14, "alpha {alpha}: {red} vs {plain}");
            assert!(red >= 0.0);
        }
        // the alpha -> 0 limit transforms the plain value monotonically
        let d0 = pointwise_discrepancy_closed_form(&a, &AlphaParam::new(0.0), &k).unwrap();
        let r0 = pointwise_discrepancy_reduced(&a, &AlphaParam::new(0.0), &k).unwrap();
        assert_abs_diff_eq!(r0, 1.0 - (-d0).exp(), epsilon = 1e-14);
    }

    #[test]
    fn reduced_form_matches_a_direct_scale_scan() {
        // independent oracle: quadrature of the divergence against gamma *
        // kernel over a fine gamma grid
        let ap = AlphaParam::new(0.5);
        let red = pointwise_discrepancy_reduced(&scalar(2.0), &ap, &SimilarityKernel::Gaussian)
            .unwrap();
        let p = |y: &[f64]| {
            (2.0 / (2.0 * std::f64::consts::PI)).sqrt() * (-y[0] * y[0]).exp()
        };
        let grid = GridSpec::line(-12.0, 12.0, 4001).unwrap();
        let mut best = f64::INFINITY;
        for step in 0..=400 {
            let gamma = 0.2 * 10f64.powf(step as f64 / 400.0); // [0.2, 2]
            let s = move |y: &[f64]| {
                gamma * (1.0 / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * y[0] * y[0]).exp()
            };
            let v = alpha_divergence_quadrature(&p, &s, &grid, &ap).unwrap().value;
            best = best.min(v);
        }
        assert_abs_diff_eq!(red, best, epsilon = 1e-5);
    }

    #[test]
    fn expected_discrepancy_of_isometric_builtins_is_zero() {
        for name in crate::geometry::ISOMETRIC_BUILTIN_NAMES {
            let map = builtin_map(name).unwrap();
            let prior = LatentPrior::default_ball(map.dim_in()).unwrap();
            let metric = MetricField::euclidean(map.dim_out());
            for alpha in [0.0, 0.3, 0.5, 0.7, 1.0] {
                let (ap, k) = gauss(alpha);
                let est =
                    alpha_discrepancy(&*map, &metric, &prior, &ap, &k, 20, 7).unwrap();
                assert!(est.value.abs() <= 1e-10, "{name} at alpha {alpha}: {}", est.value);
                assert!(est.std_error <= 1e-10);
            }
        }
    }

    #[test]
    fn doubling_map_in_two_dimensions_gives_constant_value() {
        let map = LinearMap::uniform_scale(2.0, 2);
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(2);
        let (ap, k) = gauss(1.0);
        let est = alpha_discrepancy(&map, &metric, &prior, &ap, &k, 30, 3).unwrap();
        assert_abs_diff_eq!(est.value, 0.6362943611198906, epsilon = 1e-12);
        assert_abs_diff_eq!(est.std_error, 0.0, epsilon = 1e-15);
        assert_eq!(est.variant, DiscrepancyVariant::ClosedForm);
        assert_eq!(est.n, 0);
    }

    #[test]
    fn conformal_linear_map_scores_positive_in_plain_form() {
        let map = builtin_map("conformal-3x").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(2);
        let (ap, k) = gauss(1.0);
        let est = alpha_discrepancy(&*map, &metric, &prior, &ap, &k, 10, 1).unwrap();
        assert!(est.value > 0.5, "9I is far from identity: {}", est.value);
    }

    fn scale2_setup() -> (Box<dyn SmoothMap>, MetricField, LatentPrior) {
        let map = builtin_map("scale2-1d").unwrap();
        let prior = LatentPrior::default_ball(1).unwrap();
        let metric = MetricField::euclidean(1);
        (map, metric, prior)
    }

    #[test]
    fn density_sampled_estimator_is_exact_for_the_identity_map() {
        let map = builtin_map("identity-2d").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(2);
        let (ap, k) = gauss(0.5);
        let est =
            empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &k, 50, 500, 11)
                .unwrap();
        assert!(
            est.value.abs() <= (3.0 * est.std_error).max(1e-12),
            "value {} se {}",
            est.value,
            est.std_error
        );
        assert_eq!(est.skipped_points, 0);
        assert_eq!(est.m, 50);
    }

    #[test]
    fn density_sampled_estimator_recovers_kl_anchor() {
        let (map, metric, prior) = scale2_setup();
        let (ap, k) = gauss(1.0);
        let est =
            empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &k, 100, 2000, 5)
                .unwrap();
        assert!(
            (est.value - 0.0965735902799726).abs() <= 3.0 * est.std_error,
            "value {} se {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn kernel_sampled_estimator_recovers_anchors() {
        let (map, metric, prior) = scale2_setup();
        for (alpha, target) in [
            (0.0, 0.1534264097200274),
            (0.5, 4.0 * (1.0 - 2.0f64.powf(0.25) / 1.5f64.sqrt())),
            (1.0, 0.0965735902799726),
        ] {
            let (ap, k) = gauss(alpha);
            let est =
                empirical_alpha_discrepancy_rq(&*map, &metric, &prior, &ap, &k, 100, 2000, 5)
                    .unwrap();
            assert!(
                (est.value - target).abs() <= 3.0 * est.std_error,
                "alpha {alpha}: value {} target {target} se {}",
                est.value,
                est.std_error
            );
        }
    }

    #[test]
    fn kernel_sampled_estimator_is_exact_for_the_identity_map() {
        let map = builtin_map("identity-2d").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(2);
        let (ap, k) = gauss(0.3);
        let est =
            empirical_alpha_discrepancy_rq(&*map, &metric, &prior, &ap, &k, 30, 100, 2).unwrap();
        assert!(est.value.abs() <= 1e-12, "value {}", est.value);
    }

    #[test]
    fn estimators_agree_on_the_swiss_roll_at_alpha_one() {
        let map = builtin_map("swiss-roll").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(3);
        let (ap, k) = gauss(1.0);
        let rp =
            empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &k, 80, 1000, 13)
                .unwrap();
        let rq =
            empirical_alpha_discrepancy_rq(&*map, &metric, &prior, &ap, &k, 80, 1000, 13)
                .unwrap();
        let combined = rp.std_error.hypot(rq.std_error);
        assert!(
            (rp.value - rq.value).abs() <= 3.0 * combined,
            "rp {} rq {} combined se {}",
            rp.value,
            rq.value,
            combined
        );
    }

    #[test]
    fn density_sampled_estimator_tracks_its_scale_optimized_target() {
        // at alpha != 1 the per-reference optimization lands on the
        // scale-optimized value, not the plain one
        let (map, metric, prior) = scale2_setup();
        for alpha in [0.0, 0.5] {
            let (ap, k) = gauss(alpha);
            let est =
                empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &k, 100, 4000, 17)
                    .unwrap();
            let target =
                pointwise_discrepancy_reduced(&scalar(2.0), &ap, &SimilarityKernel::Gaussian)
                    .unwrap();
            assert!(
                (est.value - target).abs() <= 3.0 * est.std_error,
                "alpha {alpha}: value {} target {target} se {}",
                est.value,
                est.std_error
            );
        }
    }

    #[test]
    fn density_sampled_estimator_stays_near_the_reverse_kl_anchor() {
        let (map, metric, prior) = scale2_setup();
        let (ap, k) = gauss(0.0);
        let est =
            empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &k, 100, 2000, 9)
                .unwrap();
        assert!(
            (est.value - 0.1534264097200274).abs() <= 3.0 * est.std_error,
            "value {} se {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn perturbing_the_mass_scale_never_helps() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = 60;
            let log_shat: Vec<f64> =
                (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 1.3 + 0.4).collect();
            for alpha in [0.0, 0.3, 0.5, 0.7, 1.0, 1.4, -0.3] {
                let ap = AlphaParam::new(alpha);
                let (g_star, h_star) = reference_divergence(&log_shat, &ap, None);
                for factor in [0.9, 1.1] {
                    let (_, h) = reference_divergence(&log_shat, &ap, Some(g_star * factor));
                    assert!(
                        h >= h_star - 1e-12,
                        "alpha {alpha} factor {factor}: {h} < {h_star}"
                    );
                }
            }
        }
    }

    #[test]
    fn estimators_are_invariant_under_linear_reparametrization() {
        let phi = DMatrix::from_row_slice(
            3,
            3,
            &[0.9, 0.2, -0.3, 0.1, 1.2, 0.4, -0.2, 0.3, 1.1],
        );
        let metric = MetricField::euclidean(3);
        let (composed, transported) =
            linear_reparametrization(builtin_map("swiss-roll").unwrap(), &metric, &phi).unwrap();
        let original = builtin_map("swiss-roll").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let (ap, k) = gauss(0.5);

        let base = alpha_discrepancy(&*original, &metric, &prior, &ap, &k, 25, 19).unwrap();
        let re = alpha_discrepancy(&composed, &transported, &prior, &ap, &k, 25, 19).unwrap();
        assert_abs_diff_eq!(base.value, re.value, epsilon = 1e-8);

        let base_mc = empirical_alpha_discrepancy_rp(
            &*original, &metric, &prior, &ap, &k, 30, 300, 19,
        )
        .unwrap();
        let re_mc = empirical_alpha_discrepancy_rp(
            &composed,
            &transported,
            &prior,
            &ap,
            &k,
            30,
            300,
            19,
        )
        .unwrap();
        let spread = base_mc.std_error.hypot(re_mc.std_error).max(1e-12);
        assert!(
            (base_mc.value - re_mc.value).abs() <= 3.0 * spread,
            "{} vs {}",
            base_mc.value,
            re_mc.value
        );
    }

    #[test]
    fn more_neighbors_shrink_the_error() {
        let (map, metric, prior) = scale2_setup();
        let (ap, k) = gauss(0.5);
        let target = 4.0 * (1.0 - 2.0f64.powf(0.25) / 1.5f64.sqrt());
        let median_err = |n: usize| -> f64 {
            let mut errs: Vec<f64> = (0..5u64)
                .map(|seed| {
                    let est = empirical_alpha_discrepancy_rq(
                        &*map, &metric, &prior, &ap, &k, 40, n, 100 + seed,
                    )
                    .unwrap();
                    (est.value - target).abs()
                })
                .collect();
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            errs[2]
        };
        assert!(
            median_err(4000) < median_err(250),
            "error did not shrink with more neighbors"
        );
    }

    #[test]
    fn conformal_map_scores_zero_with_matching_scale() {
        let map = builtin_map("conformal-3x").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(2);
        let ap = AlphaParam::new(1.0);

        let analytic = conformal_alpha_discrepancy(
            &*map,
            &metric,
            &prior,
            &ap,
            20,
            &ConformalConfig { lambda_search: LambdaSearch::AnalyticD1 },
            29,
        )
        .unwrap();
        assert!(analytic.estimate.value.abs() <= 1e-10);
        for l in &analytic.lambdas {
            // pull-back is 9I, so the kernel must tighten by that factor
            assert_abs_diff_eq!(*l, 9.0, epsilon = 1e-10);
        }

        let golden = conformal_alpha_discrepancy(
            &*map,
            &metric,
            &prior,
            &ap,
            20,
            &ConformalConfig::default(),
            29,
        )
        .unwrap();
        assert!(golden.estimate.value.abs() <= 1e-8);
        for l in &golden.lambdas {
            assert_abs_diff_eq!(*l, 9.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn isometric_map_needs_no_rescaling() {
        let map = builtin_map("isometric-plane").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(3);
        let ap = AlphaParam::new(1.0);
        let report = conformal_alpha_discrepancy(
            &*map,
            &metric,
            &prior,
            &ap,
            10,
            &ConformalConfig::default(),
            31,
        )
        .unwrap();
        assert!(report.estimate.value.abs() <= 1e-8);
        for l in &report.lambdas {
            assert_abs_diff_eq!(*l, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn anisotropic_conformal_value_matches_a_grid_oracle() {
        let map = builtin_map("aniso-1-4").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(2);
        let ap = AlphaParam::new(1.0);
        let report = conformal_alpha_discrepancy(
            &*map,
            &metric,
            &prior,
            &ap,
            5,
            &ConformalConfig::default(),
            37,
        )
        .unwrap();

        // fine grid over lambda of D1(A / lambda) with A = diag(1, 16)
        let mut best = f64::INFINITY;
        for step in 0..=200_000 {
            let lambda = 0.5 * (8.0f64 / 0.5).powf(step as f64 / 200_000.0);
            let v = 0.5 * (16.0f64 / (lambda * lambda)).ln()
                + 0.5 * lambda * (1.0 + 1.0 / 16.0)
                - 1.0;
            best = best.min(v);
        }
        assert_abs_diff_eq!(report.estimate.value, best, epsilon = 1e-8);
        let lambda_star = 2.0 / (1.0 + 1.0 / 16.0);
        for l in &report.lambdas {
            assert_abs_diff_eq!(*l, lambda_star, epsilon = 1e-6);
        }
    }

    #[test]
    fn monotone_bracket_is_reported() {
        let map = builtin_map("isometric-plane").unwrap();
        let prior = LatentPrior::default_ball(2).unwrap();
        let metric = MetricField::euclidean(3);
        let ap = AlphaParam::new(1.0);
        // optimum lambda = 1 lies far below this bracket
        let cfg = ConformalConfig {
            lambda_search: LambdaSearch::GoldenSection { bracket: (1e3, 1e4), tol: 1e-8 },
        };
        let err = conformal_alpha_discrepancy(&*map, &metric, &prior, &ap, 3, &cfg, 41)
            .err()
            .expect("must fail");
        assert!(matches!(err, Error::BracketWithoutMinimum { .. }), "got {err:?}");
    }

    #[test]
    fn estimators_reject_unsupported_kernels_and_sizes() {
        let (map, metric, prior) = scale2_setup();
        let ap = AlphaParam::new(1.0);
        let student = SimilarityKernel::Student;
        assert!(matches!(
            empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &student, 10, 100, 1),
            Err(Error::UnsupportedKernel(_))
        ));
        let k = SimilarityKernel::Gaussian;
        assert!(empirical_alpha_discrepancy_rp(&*map, &metric, &prior, &ap, &k, 1, 100, 1)
            .is_err());
        assert!(empirical_alpha_discrepancy_rq(&*map, &metric, &prior, &ap, &k, 10, 5, 1)
            .is_err());
    }

    #[test]
    fn estimates_serialize_with_stable_variant_names() {
        let est = DiscrepancyEstimate {
            value: 0.5,
            std_error: 0.01,
            m: 10,
            n: 100,
            alpha: 0.5,
            variant: DiscrepancyVariant::EmpiricalReferenceP,
            seed: 7,
            skipped_points: 0,
        };
        let json = serde_json::to_string(&est).unwrap();
        assert!(json.contains("\"variant\":\"EMPIRICAL_R_EQ_P\""), "{json}");
        assert!(json.starts_with("{\"value\":"), "key order changed: {json}");
        let back: DiscrepancyEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.m, 10);
    }

    #[test]
    fn rank_deficiency_is_propagated_with_the_point() {
        let map = builtin_map("polar").unwrap();
        let prior = LatentPrior::empirical(vec![DVector::from_vec(vec![0.0, 1.0])]).unwrap();
        // m = 2 draws of the same degenerate point
        let err = alpha_discrepancy(
            &*map,
            &MetricField::euclidean(2),
            &prior,
            &AlphaParam::new(1.0),
            &SimilarityKernel::Gaussian,
            2,
            1,
        )
        .err()
        .expect("must fail");
        assert!(matches!(err, Error::RankDeficientJacobian { .. }), "got {err:?}");
    }
}

