//! The neighbor-embedding cost family: per-row divergences between input
//! affinities and mass-scaled embedding similarities, with analytic
//! gradients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::SimilarityKernel;
use crate::measures::{divergence_contribution, AlphaParam};

use super::similarity::{embedding_similarities, Normalization, SimilarityMatrix};

/// How the per-row mass scale is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// Analytic per-row minimizer of the divergence.
    Optimal,
    /// One hand-set scale shared by every row (the elastic-embedding regime).
    Fixed(f64),
}

/// One row with its scale applied: the scale itself, the per-row divergence,
/// and the scaled masses `u_k = gamma * s_k`. The masses are computed in
/// groupings that stay representable even when `gamma` alone overflows (all
/// similarities having underflowed far from the data).
struct RowFit {
    gamma: f64,
    cost: f64,
    scaled: Vec<f64>,
}

/// ln of the stationary scale minimizing `D_alpha(p : gamma * s)` away from
/// the KL limit.
fn ln_optimal_scale(p: &[f64], s: &[f64], alpha: &AlphaParam) -> f64 {
    let sum_s: f64 = s.iter().sum();
    if alpha.near_zero() {
        // an underflowed similarity contributes 0 to the weighted mean,
        // not 0 * inf
        let weighted: f64 = p
            .iter()
            .zip(s)
            .map(|(&pi, &si)| if si == 0.0 { 0.0 } else { si * (pi / si).ln() })
            .sum();
        return weighted / sum_s;
    }
    // ln gamma = (ln sum_k p^a s^(1-a) - ln sum_s) / a
    let a = alpha.alpha();
    let terms: Vec<f64> = p
        .iter()
        .zip(s)
        .map(|(&pi, &si)| a * pi.ln() + (1.0 - a) * si.ln())
        .collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // +inf only at alpha > 1 with a dead similarity (infinite cost for
        // every scale); -inf when the whole row is dead
        return m;
    }
    let ln_cross = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
    (ln_cross - sum_s.ln()) / a
}

fn fit_row(pr: &[f64], sr: &[f64], alpha: &AlphaParam, mode: &GammaMode) -> RowFit {
    let (gamma, scaled): (f64, Vec<f64>) = match mode {
        GammaMode::Fixed(g) => (*g, sr.iter().map(|&s| g * s).collect()),
        GammaMode::Optimal => {
            if alpha.near_one() {
                let sum_p: f64 = pr.iter().sum();
                let sum_s: f64 = sr.iter().sum();
                (sum_p / sum_s, sr.iter().map(|&s| sum_p * (s / sum_s)).collect())
            } else {
                let ln_gamma = ln_optimal_scale(pr, sr, alpha);
                let scaled = sr
                    .iter()
                    .map(|&s| if s == 0.0 { 0.0 } else { (ln_gamma + s.ln()).exp() })
                    .collect();
                (ln_gamma.exp(), scaled)
            }
        }
    };
    let cost = pr
        .iter()
        .zip(&scaled)
        .map(|(&p, &u)| divergence_contribution(p, u, alpha))
        .sum();
    RowFit { gamma, cost, scaled }
}

fn check_pair(p: &SimilarityMatrix, s: &SimilarityMatrix) -> Result<()> {
    if p.normalization() != Normalization::RowNormalized {
        return Err(Error::Domain(
            "input affinities must be row-normalized".into(),
        ));
    }
    if p.n() != s.n() {
        return Err(Error::Domain(format!(
            "affinity matrices disagree on size: {} vs {}",
            p.n(),
            s.n()
        )));
    }
    Ok(())
}

fn fit_rows(
    p: &SimilarityMatrix,
    s: &SimilarityMatrix,
    alpha: &AlphaParam,
    gamma_mode: &GammaMode,
) -> Result<Vec<RowFit>> {
    check_pair(p, s)?;
    if let GammaMode::Fixed(g) = gamma_mode {
        if !(*g > 0.0 && g.is_finite()) {
            return Err(Error::Domain(format!("mass scale {g} must be positive")));
        }
    }
    Ok((0..p.n())
        .map(|i| fit_row(p.row(i), s.row(i), alpha, gamma_mode))
        .collect())
}

/// Divergence of each row, with the gamma that was applied.
pub(crate) fn per_row_costs(
    p: &SimilarityMatrix,
    s: &SimilarityMatrix,
    alpha: &AlphaParam,
    gamma_mode: &GammaMode,
) -> Result<Vec<(f64, f64)>> {
    Ok(fit_rows(p, s, alpha, gamma_mode)?
        .into_iter()
        .map(|f| (f.gamma, f.cost))
        .collect())
}

/// Total embedding cost: the sum over reference rows of the discrete
/// divergence between the input affinities and the (scaled) embedding
/// similarities. Infinite when some row needs mass where the similarity
/// vanished. At `alpha = 1` with optimal scales this is the classic
/// log-ratio cost against row-normalized similarities, up to a data-only
/// constant; see [`sne_consistency`].
pub fn embedding_cost(
    p: &SimilarityMatrix,
    s: &SimilarityMatrix,
    alpha: &AlphaParam,
    gamma_mode: &GammaMode,
) -> Result<f64> {
    Ok(per_row_costs(p, s, alpha, gamma_mode)?
        .iter()
        .map(|(_, c)| c)
        .sum())
}

/// Both sides of the `alpha = 1` identity: the optimal-scale cost, and the
/// direct sum of `p ln(p / (s / row_sum))`. The two agree up to rounding.
pub fn sne_consistency(p: &SimilarityMatrix, s: &SimilarityMatrix) -> Result<(f64, f64)> {
    let alpha = AlphaParam::new(1.0);
    let optimal = embedding_cost(p, s, &alpha, &GammaMode::Optimal)?;
    check_pair(p, s)?;
    let mut direct = 0.0;
    for i in 0..p.n() {
        let row_sum: f64 = s.row(i).iter().sum();
        for (&pi, &si) in p.row(i).iter().zip(s.row(i)) {
            direct += pi * (pi / (si / row_sum)).ln();
        }
    }
    Ok((optimal, direct))
}

/// The hand-set-scale repulsion term: `gamma` times the total similarity
/// mass. Takes no input affinities at all; the attraction and data-only
/// parts of the fixed-scale cost live elsewhere.
pub fn background_repulsion(s: &SimilarityMatrix, gamma: f64) -> f64 {
    gamma * s.total_mass()
}

/// `u * dt/du` of the per-atom divergence `t(p, u)` at `u = gamma * s`.
///
/// The gradient only ever needs the slope multiplied by `u` (see below), and
/// this product stays bounded by the masses involved where the bare slope
/// can overflow; each branch is written so no intermediate blows up first.
fn slope_times_u(p: f64, u: f64, alpha: &AlphaParam) -> f64 {
    if alpha.near_one() {
        return u - p;
    }
    if alpha.near_zero() {
        // u ln(u/p) -> 0 as u -> 0; the naive product would be 0 * -inf
        return if u == 0.0 { 0.0 } else { u * (u / p).ln() };
    }
    let a = alpha.alpha();
    (u - p.powf(a) * u.powf(1.0 - a)) / a
}

/// Analytic gradient of [`embedding_cost`] with respect to the embedding
/// coordinates, with similarities recomputed from `y`.
///
/// With optimal scales the per-row gamma is a stationary point of the cost,
/// so its dependence on `y` contributes nothing (envelope argument); fixed
/// scales have no dependence to begin with. Either way only the kernel terms
/// differentiate.
pub fn embedding_cost_gradient(
    p: &SimilarityMatrix,
    y: &DMatrix<f64>,
    kernel: &SimilarityKernel,
    alpha: &AlphaParam,
    gamma_mode: &GammaMode,
) -> Result<DMatrix<f64>> {
    let n = p.n();
    if y.nrows() != n {
        return Err(Error::Domain(format!(
            "{} coordinate rows for {} affinity rows",
            y.nrows(),
            n
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("coordinates contain non-finite values".into()));
    }
    let s = embedding_similarities(y, kernel);
    let fits = fit_rows(p, &s, alpha, gamma_mode)?;

    // w[(i, j)] = dt/du * gamma_i * kappa'(r_ij^2), grouped as
    // (u * dt/du) * (kappa'/kappa) with u = gamma_i * s_ij so that extreme
    // gammas cannot overflow an intermediate
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for (k, &pk) in p.row(i).iter().enumerate() {
            let j = SimilarityMatrix::neighbor_index(i, k);
            let r2 = (y.row(i) - y.row(j)).norm_squared();
            w[(i, j)] =
                slope_times_u(pk, fits[i].scaled[k], alpha) * kernel.log_d_of_sq_dist(r2);
        }
    }
    let mut grad = DMatrix::zeros(n, y.ncols());
    for k in 0..n {
        for j in 0..n {
            if j == k {
                continue;
            }
            let coeff = 2.0 * (w[(k, j)] + w[(j, k)]);
            for c in 0..y.ncols() {
                grad[(k, c)] += coeff * (y[(k, c)] - y[(j, c)]);
            }
        }
    }
    Ok(grad)
}
