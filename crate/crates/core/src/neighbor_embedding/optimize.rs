//! Momentum gradient descent on the embedding cost.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::SimilarityKernel;
use crate::measures::AlphaParam;

use super::cost::{embedding_cost, embedding_cost_gradient, GammaMode};
use super::similarity::{embedding_similarities, Normalization, SimilarityMatrix};

/// Where a descent run ended up.
#[derive(Debug, Clone)]
pub struct EmbeddingState {
    /// Final coordinates, one point per row.
    pub y: DMatrix<f64>,
    /// Gradient steps attempted (accepted or not).
    pub iterations: usize,
    /// Step size in effect at the end, after any halvings.
    pub step: f64,
    /// The momentum coefficient the run used.
    pub momentum: f64,
    /// Cost after every accepted move, starting with the initial cost.
    pub cost_trace: Vec<f64>,
}

/// Descends [`embedding_cost`] from `y0` by momentum gradient descent.
///
/// A trial move is kept only if its cost is finite and no worse than the
/// current one; a rejected move halves the step and clears the velocity.
/// The run stops after `max_iter` attempts or once the step has collapsed
/// fifteen orders of magnitude below its initial value, whichever comes
/// first.
///
/// The procedure itself is deterministic; `seed` is accepted so callers can
/// treat all drivers uniformly, and is deliberately unused.
#[allow(clippy::too_many_arguments)]
pub fn optimize_embedding(
    p: &SimilarityMatrix,
    y0: &DMatrix<f64>,
    kernel: &SimilarityKernel,
    alpha: &AlphaParam,
    gamma_mode: &GammaMode,
    max_iter: usize,
    step: f64,
    momentum: f64,
    seed: u64,
) -> Result<EmbeddingState> {
    let _ = seed;
    if p.normalization() != Normalization::RowNormalized {
        return Err(Error::Domain(
            "input affinities must be row-normalized".into(),
        ));
    }
    if y0.nrows() != p.n() {
        return Err(Error::Domain(format!(
            "{} initial rows for {} affinity rows",
            y0.nrows(),
            p.n()
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step size {step} must be positive")));
    }
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::Domain(format!(
            "momentum {momentum} must lie in [0, 1)"
        )));
    }

    let cost_at = |y: &DMatrix<f64>| -> Result<f64> {
        embedding_cost(p, &embedding_similarities(y, kernel), alpha, gamma_mode)
    };

    let mut y = y0.clone();
    let mut cost = cost_at(&y)?;
    if !cost.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite cost {cost} at iteration 0"
        )));
    }
    let mut trace = vec![cost];
    let mut velocity = DMatrix::zeros(y.nrows(), y.ncols());
    let mut current_step = step;
    let floor = step * 1e-15;
    let mut iterations = 0;

    for it in 0..max_iter {
        let grad = embedding_cost_gradient(p, &y, kernel, alpha, gamma_mode)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient at iteration {}",
                it + 1
            )));
        }
        iterations = it + 1;
        velocity = momentum * &velocity - current_step * &grad;
        let trial = &y + &velocity;
        let trial_cost = cost_at(&trial)?;
        if trial_cost.is_finite() && trial_cost <= cost {
            y = trial;
            cost = trial_cost;
            trace.push(cost);
        } else {
            velocity.fill(0.0);
            current_step *= 0.5;
            if current_step < floor {
                break;
            }
        }
    }

    Ok(EmbeddingState {
        y,
        iterations,
        step: current_step,
        momentum,
        cost_trace: trace,
    })
}
