//! Neighbor embedding on top of the divergence machinery: perplexity
//! calibration, the discrete embedding cost family with analytic gradients,
//! a momentum descent driver, and the convergence experiment relating row
//! costs to the closed-form pointwise discrepancy.

mod cost;
mod experiment;
mod optimize;
mod similarity;

pub use cost::{
    background_repulsion, embedding_cost, embedding_cost_gradient, sne_consistency, GammaMode,
};
pub use experiment::{theorem6_experiment, Theorem6Report, Theorem6Row};
pub use optimize::{optimize_embedding, EmbeddingState};
pub use similarity::{
    calibrate_precisions, embedding_similarities, input_similarities, Calibration, Normalization,
    SimilarityMatrix,
};
