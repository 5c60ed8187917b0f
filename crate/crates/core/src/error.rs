use thiserror::Error;

/// Library-wide error type.
///
/// Numerical routines return `Error` for contract violations (bad inputs,
/// unsupported parameter regions) and for hard numerical failures. Values
/// that are merely infinite (e.g. a divergence with an empty overlap) are
/// reported as `f64::INFINITY`, not as errors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two measures were compared over different atom supports.
    #[error("support mismatch: measures are indexed by different atoms")]
    SupportMismatch,

    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The gamma normalizer has exponent 1/alpha and is undefined at alpha = 0.
    #[error("unsupported limit: the analytic normalizer is undefined at alpha = 0")]
    UnsupportedLimit,

    /// A kernel was requested in a regime where no formula is available.
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    /// alpha * lambda_i + (1 - alpha) <= 0 for some eigenvalue lambda_i of the
    /// pull-back matrix; the closed form requires a positive definite mixture.
    /// `point` names the reference point when one is in play.
    #[error(
        "indefinite combination at alpha = {alpha}: eigenvalue {eigenvalue:.6e} gives \
         alpha*lambda + (1 - alpha) = {combination:.6e} <= 0"
    )]
    IndefiniteCombination {
        alpha: f64,
        eigenvalue: f64,
        combination: f64,
        point: Option<Vec<f64>>,
    },

    /// Jacobian does not have full column rank at the given point.
    #[error(
        "rank-deficient Jacobian at {point:?}: smallest/largest singular value ratio \
         {ratio:.3e} (the map must be an immersion: full column rank everywhere)"
    )]
    RankDeficientJacobian { point: Vec<f64>, ratio: f64 },

    /// A map returned a non-finite coordinate.
    #[error("non-finite map output at {point:?}")]
    NonFiniteValue { point: Vec<f64> },

    /// Scale search bracket has its minimum at an endpoint.
    #[error(
        "bracket [{lo:.3e}, {hi:.3e}] does not contain an interior minimum; \
         the objective is monotone over the bracket, widen it"
    )]
    BracketWithoutMinimum { lo: f64, hi: f64 },

    /// Per-row precision calibration did not converge.
    #[error(
        "row {row}: entropy calibration did not converge after {iterations} iterations \
         (bracket [{lo:.3e}, {hi:.3e}], target entropy {target:.6})"
    )]
    CalibrationFailed {
        row: usize,
        iterations: usize,
        lo: f64,
        hi: f64,
        target: f64,
    },

    /// A similarity row cannot reach the requested entropy for any precision.
    #[error(
        "row {row}: degenerate distances pin the row entropy at {achievable:.6} \
         for every precision (target {target:.6})"
    )]
    DegenerateRow {
        row: usize,
        target: f64,
        achievable: f64,
    },

    /// Weights-file parse failure.
    #[error("weights file, line {line}: {message}")]
    WeightsParse { line: usize, message: String },

    /// A hard numerical failure (degenerate estimates, non-finite cost, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
