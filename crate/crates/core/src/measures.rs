//! Alpha-divergences between positive measures.
//!
//! The family is parametrized by `alpha` and, between two positive measures
//! `p` and `q`, takes the form
//!
//! ```text
//! D_a(p : q) = sum_i [ a p_i + (1 - a) q_i - p_i^a q_i^(1-a) ] / (a (1 - a))
//! ```
//!
//! with Kullback-Leibler limits at the removable singularities: `KL(p : q)`
//! as `a -> 1` and `KL(q : p)` as `a -> 0`. The same integrand evaluated on a
//! trapezoid grid ([`alpha_divergence_quadrature`]) serves as the independent
//! oracle for every closed form in this crate.
//!
//! [`optimal_gamma`] rescales an unnormalized similarity `s` so that
//! `gamma * s` is as close to `p` as the divergence can measure; the reduced
//! value after that rescaling has its own closed form
//! ([`reduced_divergence_after_normalization`]).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default threshold on |alpha| and |1 - alpha| below which the closed limit
/// formulas replace the generic expression (which loses all precision to the
/// 1/(a(1-a)) prefactor near the singularities).
pub const DEFAULT_LIMIT_TOLERANCE: f64 = 1e-6;

/// Divergence order together with the switch-to-limit threshold.
#[derive(Debug, Clone, Copy)]
pub struct AlphaParam {
    alpha: f64,
    limit_tolerance: f64,
}

impl AlphaParam {
    /// Order `alpha` with the default limit tolerance.
    ///
    /// Panics if `alpha` is not finite.
    pub fn new(alpha: f64) -> Self {
        assert!(alpha.is_finite(), "alpha must be finite");
        Self {
            alpha,
            limit_tolerance: DEFAULT_LIMIT_TOLERANCE,
        }
    }

    /// Order `alpha` with an explicit limit tolerance in (0, 0.01).
    pub fn with_tolerance(alpha: f64, limit_tolerance: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain("alpha must be finite".into()));
        }
        if !(limit_tolerance > 0.0 && limit_tolerance < 0.01) {
            return Err(Error::Domain(format!(
                "limit tolerance must lie in (0, 0.01), got {limit_tolerance}"
            )));
        }
        Ok(Self {
            alpha,
            limit_tolerance,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn limit_tolerance(&self) -> f64 {
        self.limit_tolerance
    }

    /// True when the reverse-KL limit formula applies.
    pub fn near_zero(&self) -> bool {
        self.alpha.abs() <= self.limit_tolerance
    }

    /// True when the KL limit formula applies.
    pub fn near_one(&self) -> bool {
        (1.0 - self.alpha).abs() <= self.limit_tolerance
    }
}

/// Finite positive measure: nonnegative mass per atom, with atom ids that
/// align two measures over the same support.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMeasure {
    weights: Vec<f64>,
    atom_ids: Vec<usize>,
}

impl PositiveMeasure {
    /// Measure over atoms `0..weights.len()`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let atom_ids = (0..weights.len()).collect();
        Self::with_atom_ids(weights, atom_ids)
    }

    /// Measure over explicitly identified atoms.
    pub fn with_atom_ids(weights: Vec<f64>, atom_ids: Vec<usize>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("a measure needs at least one atom".into()));
        }
        if weights.len() != atom_ids.len() {
            return Err(Error::Domain(format!(
                "{} weights but {} atom ids",
                weights.len(),
                atom_ids.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Domain(format!("weight {w} is not a nonnegative real")));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::Domain("at least one weight must be positive".into()));
        }
        Ok(Self { weights, atom_ids })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom_ids(&self) -> &[usize] {
        &self.atom_ids
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_aligned(p: &PositiveMeasure, q: &PositiveMeasure) -> Result<()> {
    if p.atom_ids != q.atom_ids {
        return Err(Error::SupportMismatch);
    }
    Ok(())
}

/// Pointwise divergence contribution of one atom (or grid node).
///
/// This is `q * f_a(p/q)` for the convex generator
/// `f_a(t) = [a t + 1 - a - t^a] / (a (1 - a))`, so it is nonnegative for
/// every admissible branch; the final clamp only shields against rounding in
/// `exp`/`ln`. Conventions at the boundary: `0 * log 0 := 0`, and mass of `p`
/// where `q` vanishes is an infinite divergence whenever the exponent makes
///`q^(1-a)` singular (`a >= 1`), symmetrically for `q` against `p` at `a <= 0`.
pub(crate) fn divergence_contribution(p: f64, q: f64, a: &AlphaParam) -> f64 {
    if p == q {
        return 0.0;
    }
    if a.near_one() {
        if p == 0.0 {
            return q;
        }
        if q == 0.0 {
            return f64::INFINITY;
        }
        return clamp_round_off(p * (p / q).ln() - p + q);
    }
    if a.near_zero() {
        if q == 0.0 {
            return p;
        }
        if p == 0.0 {
            return f64::INFINITY;
        }
        return clamp_round_off(q * (q / p).ln() - q + p);
    }
    let alpha = a.alpha();
    if p == 0.0 {
        return if alpha > 0.0 { q / alpha } else { f64::INFINITY };
    }
    if q == 0.0 {
        return if alpha < 1.0 {
            p / (1.0 - alpha)
        } else {
            f64::INFINITY
        };
    }
    let cross = (alpha * p.ln() + (1.0 - alpha) * q.ln()).exp();
    clamp_round_off((alpha * p + (1.0 - alpha) * q - cross) / (alpha * (1.0 - alpha)))
}

/// Zero out small negative round-off without masking a NaN the way
/// `f64::max(0.0)` would.
fn clamp_round_off(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Alpha-divergence between two discrete positive measures over a shared
/// support. Returns `+inf` (not an error) when the divergence is infinite.
pub fn alpha_divergence_discrete(
    p: &PositiveMeasure,
    q: &PositiveMeasure,
    a: &AlphaParam,
) -> Result<f64> {
    check_aligned(p, q)?;
    Ok(p
        .weights
        .iter()
        .zip(&q.weights)
        .map(|(&pi, &qi)| divergence_contribution(pi, qi, a))
        .sum())
}

/// Cross term `p^a * s^(1-a)` with explicit zero handling.
fn cross_term(p: f64, s: f64, alpha: f64) -> f64 {
    if p == 0.0 {
        return if alpha > 0.0 { 0.0 } else { f64::INFINITY };
    }
    if s == 0.0 {
        return if alpha < 1.0 { 0.0 } else { f64::INFINITY };
    }
    (alpha * p.ln() + (1.0 - alpha) * s.ln()).exp()
}

/// Analytic scale minimizing `D_a(p : gamma * s)` over `gamma > 0`:
///
/// ```text
/// gamma* = ( sum_i p_i^a s_i^(1-a) / sum_i s_i )^(1/a)
/// ```
///
/// The exponent `1/a` makes the expression undefined at `alpha = 0`; that
/// case is rejected with [`Error::UnsupportedLimit`].
pub fn optimal_gamma(p: &PositiveMeasure, s: &PositiveMeasure, a: &AlphaParam) -> Result<f64> {
    if a.near_zero() {
        return Err(Error::UnsupportedLimit);
    }
    check_aligned(p, s)?;
    let alpha = a.alpha();
    let total: f64 = s.total_mass();
    let hellinger: f64 = p
        .weights
        .iter()
        .zip(&s.weights)
        .map(|(&pi, &si)| cross_term(pi, si, alpha))
        .sum();
    Ok((hellinger / total).powf(1.0 / alpha))
}

/// Divergence left after the optimal rescaling of `s`:
///
/// ```text
/// D_a(p : gamma* s) = (1/(1-a)) [ 1 - ( sum_i p_i^a q_i^(1-a) )^(1/a) ]
/// ```
///
/// with `q = s / sum(s)`. Requires `p` normalized (the leading `1` is its
/// total mass). At `alpha = 1` the expression is the KL divergence
/// `KL(p : q)`, evaluated directly; `alpha = 0` is rejected as in
/// [`optimal_gamma`].
pub fn reduced_divergence_after_normalization(
    p: &PositiveMeasure,
    s: &PositiveMeasure,
    a: &AlphaParam,
) -> Result<f64> {
    if a.near_zero() {
        return Err(Error::UnsupportedLimit);
    }
    check_aligned(p, s)?;
    if (p.total_mass() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "p must be a probability measure, total mass {}",
            p.total_mass()
        )));
    }
    let total = s.total_mass();
    if a.near_one() {
        return Ok(p
            .weights
            .iter()
            .zip(&s.weights)
            .map(|(&pi, &si)| divergence_contribution(pi, si / total, a))
            .sum());
    }
    let alpha = a.alpha();
    let hellinger: f64 = p
        .weights
        .iter()
        .zip(&s.weights)
        .map(|(&pi, &si)| cross_term(pi, si / total, alpha))
        .sum();
    if !hellinger.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(((1.0 - hellinger.powf(1.0 / alpha)) / (1.0 - alpha)).max(0.0))
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let scale = m.amax().max(1e-300);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Domain(format!("{name} is not symmetric")));
            }
        }
    }
    Ok(())
}

/// LogDet matrix divergence `tr(A B^-1) - log|A B^-1| - d` between symmetric
/// positive definite matrices. The `- d` shift pins `logdet_divergence(A, A)`
/// to zero, making it a proper divergence.
pub fn logdet_divergence(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Domain(format!(
            "dimension mismatch: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    check_symmetric(a, "A")?;
    check_symmetric(b, "B")?;
    let d = a.nrows() as f64;
    let chol_a = nalgebra::Cholesky::new(a.clone())
        .ok_or_else(|| Error::Domain("A is not positive definite".into()))?;
    let chol_b = nalgebra::Cholesky::new(b.clone())
        .ok_or_else(|| Error::Domain("B is not positive definite".into()))?;
    let log_det_a: f64 = chol_a.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let log_det_b: f64 = chol_b.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let trace = chol_b.solve(a).trace();
    Ok(trace - (log_det_a - log_det_b) - d)
}

/// One axis of a trapezoid grid.
#[derive(Debug, Clone, Copy)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Tensor-product trapezoid grid over one or more axes.
#[derive(Debug, Clone)]
pub struct GridSpec {
    axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Domain("grid needs at least one axis".into()));
        }
        for ax in &axes {
            if !(ax.min.is_finite() && ax.max.is_finite() && ax.min < ax.max) {
                return Err(Error::Domain(format!(
                    "grid axis [{}, {}] is not a finite interval",
                    ax.min, ax.max
                )));
            }
            if ax.points < 2 {
                return Err(Error::Domain("each axis needs at least 2 points".into()));
            }
        }
        Ok(Self { axes })
    }

    /// Single-axis grid.
    pub fn line(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new(vec![GridAxis { min, max, points }])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }
}

/// Quadrature value plus the mass checks that back the normalization warning.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub p_mass: f64,
    pub q_mass: f64,
    /// Set when either density integrates to something off 1 by more than 1e-6.
    pub normalization_warning: bool,
}

/// Trapezoid-rule alpha-divergence between two densities sampled on a
/// tensor-product grid. The caller picks a grid wide and fine enough for the
/// target accuracy; a mass check flags (but does not reject) densities that
/// fail to integrate to 1 within 1e-6.
pub fn alpha_divergence_quadrature<P, Q>(
    p_density: P,
    q_density: Q,
    grid: &GridSpec,
    a: &AlphaParam,
) -> Result<QuadratureResult>
where
    P: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
{
    let dim = grid.dim();
    let steps: Vec<f64> = grid
        .axes
        .iter()
        .map(|ax| (ax.max - ax.min) / (ax.points - 1) as f64)
        .collect();

    let mut index = vec![0usize; dim];
    let mut point = vec![0.0f64; dim];
    let mut value = 0.0;
    let mut p_mass = 0.0;
    let mut q_mass = 0.0;
    loop {
        let mut weight = 1.0;
        for (k, &i) in index.iter().enumerate() {
            let ax = &grid.axes[k];
            point[k] = ax.min + steps[k] * i as f64;
            let edge = i == 0 || i == ax.points - 1;
            weight *= if edge { 0.5 * steps[k] } else { steps[k] };
        }
        let pv = p_density(&point);
        let qv = q_density(&point);
        if !(pv.is_finite() && pv >= 0.0 && qv.is_finite() && qv >= 0.0) {
            return Err(Error::Domain(format!(
                "density not finite and nonnegative at {point:?}: p = {pv}, q = {qv}"
            )));
        }
        value += weight * divergence_contribution(pv, qv, a);
        p_mass += weight * pv;
        q_mass += weight * qv;

        // odometer over the tensor grid
        let mut k = 0;
        loop {
            if k == dim {
                let normalization_warning =
                    (p_mass - 1.0).abs() > 1e-6 || (q_mass - 1.0).abs() > 1e-6;
                return Ok(QuadratureResult {
                    value,
                    p_mass,
                    q_mass,
                    normalization_warning,
                });
            }
            index[k] += 1;
            if index[k] < grid.axes[k].points {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}
