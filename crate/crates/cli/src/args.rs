//! Command-line surface. Every run is reproducible from the flags echoed in
//! its report; there are no hidden defaults and no timestamps.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "adisc",
    about = "Discrepancy measures for smooth low-dimensional embeddings",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score a map's distance from an isometry (closed form or Monte Carlo).
    Discrepancy(DiscrepancyArgs),
    /// Score the map with a per-point free kernel scale (conformal variant).
    Conformal(ConformalArgs),
    /// Embed a data matrix by neighbor-similarity matching.
    Embed(EmbedArgs),
    /// Compare per-row embedding costs against the pointwise closed form
    /// over growing sample sizes.
    Theorem6(Theorem6Args),
    /// Cross-check the closed form against quadrature on 1-d Gaussians.
    Oracle(OracleArgs),
}

/// Map selection shared by the map-driven subcommands: a built-in name or a
/// weights file defining a tanh multilayer perceptron.
#[derive(Args, Debug)]
pub struct MapArgs {
    /// Built-in map name (identity-2d, scale2-1d, scale2-2d, isometric-plane,
    /// linear-random, conformal-3x, aniso-1-4, polar, swiss-roll, mlp)
    #[arg(long, conflicts_with = "mlp_weights")]
    pub map: Option<String>,

    /// Plain-text weights file for a tanh MLP map
    #[arg(long)]
    pub mlp_weights: Option<PathBuf>,

    /// Observation-space metric: "euclidean" or "diag:v1,v2,..."
    #[arg(long, default_value = "euclidean")]
    pub metric: String,

    /// Radius of the uniform ball the latent reference points are drawn from
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Closed form in the pull-back eigenvalues
    Closed,
    /// Monte Carlo, neighbors drawn from the pull-back density
    EmpiricalRp,
    /// Monte Carlo, neighbors drawn from the kernel's normalized density
    EmpiricalRq,
}

#[derive(Args, Debug)]
pub struct DiscrepancyArgs {
    #[command(flatten)]
    pub map: MapArgs,

    /// Divergence order
    #[arg(long)]
    pub alpha: f64,

    /// Similarity kernel: "gaussian", "student", or "scaled:LAMBDA"
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,

    #[arg(long, value_enum, default_value_t = VariantArg::Closed)]
    pub variant: VariantArg,

    /// Reference points averaged over
    #[arg(long, default_value_t = 64)]
    pub m: usize,

    /// Neighbors per reference point (Monte Carlo variants only)
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// RNG seed; mandatory for the Monte Carlo variants
    #[arg(long)]
    pub seed: Option<u64>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchArg {
    /// Golden-section search on the log kernel scale
    Golden,
    /// Closed-form scale d / tr(A^-1); only valid at alpha = 1
    Analytic,
}

#[derive(Args, Debug)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub map: MapArgs,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 64)]
    pub m: usize,

    #[arg(long, value_enum, default_value_t = SearchArg::Golden)]
    pub search: SearchArg,

    /// Kernel-scale bracket for the golden-section search, "LO,HI"
    #[arg(long, default_value = "1e-4,1e4")]
    pub bracket: String,

    /// Relative tolerance of the golden-section search
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    /// RNG seed for reference-point sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    /// Input data matrix, one point per CSV row (optional single header row)
    #[arg(long)]
    pub input: PathBuf,

    /// Perplexity: target effective neighbor count
    #[arg(long)]
    pub rho: f64,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Similarity kernel on the embedding side; "student" is the t-SNE choice
    #[arg(long, default_value = "student")]
    pub kernel: String,

    /// Mass scale per row: "optimal" or "fixed:VALUE"
    #[arg(long, default_value = "optimal")]
    pub gamma: String,

    /// Embedding dimension
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    #[arg(long, default_value_t = 500)]
    pub iters: usize,

    #[arg(long, default_value_t = 1.0)]
    pub step: f64,

    #[arg(long, default_value_t = 0.8)]
    pub momentum: f64,

    /// Standard deviation of the random initial coordinates
    #[arg(long, default_value_t = 1.0)]
    pub init_scale: f64,

    /// RNG seed for the random initial coordinates
    #[arg(long)]
    pub seed: u64,

    /// Final coordinates, one point per CSV row
    #[arg(long)]
    pub out: PathBuf,

    /// Optional JSON cost trace
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Theorem6Args {
    #[command(flatten)]
    pub map: MapArgs,

    /// Perplexity used for the input similarities at every sample size
    #[arg(long, default_value_t = 20.0)]
    pub rho: f64,

    /// Comma-separated, strictly increasing sample sizes
    #[arg(long, default_value = "128,256,512,1024")]
    pub n_list: String,

    /// RNG seed for latent sampling
    #[arg(long)]
    pub seed: u64,

    /// CSV report (n, sne_cost_fitted_residual, closed_form_value, seed)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Pull-back values A for the 1-d closed form, comma-separated
    #[arg(long, default_value = "0.5,1,2,5")]
    pub a_list: String,

    /// Divergence orders, comma-separated
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    pub alpha_list: String,

    /// Quadrature grid lower end
    #[arg(long, default_value_t = -12.0)]
    pub grid_min: f64,

    /// Quadrature grid upper end
    #[arg(long, default_value_t = 12.0)]
    pub grid_max: f64,

    /// Quadrature grid points
    #[arg(long, default_value_t = 8001)]
    pub points: usize,

    #[arg(long)]
    pub out: Option<PathBuf>,
}
