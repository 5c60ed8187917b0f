//! One function per subcommand. Each run resolves its flags into a config
//! struct, computes, echoes the config inside the machine-readable report,
//! and prints a one-line human summary on stderr.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use alpha_discrepancy::discrepancy::{
    alpha_discrepancy, conformal_alpha_discrepancy, empirical_alpha_discrepancy_rp,
    empirical_alpha_discrepancy_rq, pointwise_discrepancy_closed_form, ConformalConfig,
    DiscrepancyEstimate, LambdaSearch,
};
use alpha_discrepancy::geometry::{LatentPrior, SimilarityKernel};
use alpha_discrepancy::measures::{alpha_divergence_quadrature, AlphaParam, GridSpec};
use alpha_discrepancy::neighbor_embedding::{
    input_similarities, optimize_embedding, theorem6_experiment, Theorem6Row,
};

use crate::args::{
    ConformalArgs, DiscrepancyArgs, EmbedArgs, OracleArgs, SearchArg, Theorem6Args, VariantArg,
};
use crate::csvio::{emit_json, fmt_float, read_matrix_csv, write_matrix_csv, write_text};
use crate::errors::{CliError, CliResult};
use crate::resolve::{
    parse_bracket, parse_f64_list, parse_usize_list, resolve_gamma, resolve_kernel, resolve_map,
    resolve_metric,
};

fn check_finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be a finite number, got {v}")))
    }
}

#[derive(Serialize)]
struct DiscrepancyConfig {
    map: String,
    metric: String,
    radius: f64,
    alpha: f64,
    kernel: String,
    variant: &'static str,
    m: usize,
    n: usize,
    seed: u64,
}

#[derive(Serialize)]
struct DiscrepancyReport {
    command: &'static str,
    config: DiscrepancyConfig,
    estimate: DiscrepancyEstimate,
}

pub fn run_discrepancy(args: &DiscrepancyArgs) -> CliResult<()> {
    check_finite("--alpha", args.alpha)?;
    let (map, map_echo) = resolve_map(&args.map)?;
    let metric = resolve_metric(&args.map.metric, map.dim_out())?;
    let kernel = resolve_kernel(&args.kernel)?;
    let prior = LatentPrior::uniform_ball(map.dim_in(), args.map.radius)?;
    let alpha = AlphaParam::new(args.alpha);

    let seed = match (args.variant, args.seed) {
        (VariantArg::Closed, s) => s.unwrap_or(0),
        (_, Some(s)) => s,
        (_, None) => {
            return Err(CliError::Usage(
                "--seed is required for the Monte Carlo variants".into(),
            ))
        }
    };
    let (variant_echo, n_echo) = match args.variant {
        VariantArg::Closed => ("closed", 0),
        VariantArg::EmpiricalRp => ("empirical-rp", args.n),
        VariantArg::EmpiricalRq => ("empirical-rq", args.n),
    };

    let estimate = match args.variant {
        VariantArg::Closed => {
            alpha_discrepancy(&*map, &metric, &prior, &alpha, &kernel, args.m, seed)?
        }
        VariantArg::EmpiricalRp => empirical_alpha_discrepancy_rp(
            &*map, &metric, &prior, &alpha, &kernel, args.m, args.n, seed,
        )?,
        VariantArg::EmpiricalRq => empirical_alpha_discrepancy_rq(
            &*map, &metric, &prior, &alpha, &kernel, args.m, args.n, seed,
        )?,
    };

    eprintln!(
        "discrepancy value {:.6} std_error {:.6} (variant {variant_echo}, m {}, skipped {})",
        estimate.value, estimate.std_error, estimate.m, estimate.skipped_points
    );
    let report = DiscrepancyReport {
        command: "discrepancy",
        config: DiscrepancyConfig {
            map: map_echo,
            metric: args.map.metric.clone(),
            radius: args.map.radius,
            alpha: args.alpha,
            kernel: args.kernel.clone(),
            variant: variant_echo,
            m: args.m,
            n: n_echo,
            seed,
        },
        estimate,
    };
    emit_json(args.out.as_deref(), &report)
}

#[derive(Serialize)]
struct ConformalCliConfig {
    map: String,
    metric: String,
    radius: f64,
    alpha: f64,
    m: usize,
    search: &'static str,
    bracket: (f64, f64),
    tol: f64,
    seed: u64,
}

/// Summary statistics of the per-reference optimized kernel scales.
#[derive(Serialize)]
struct ScaleSummary {
    count: usize,
    min: f64,
    max: f64,
    mean: f64,
    median: f64,
}

impl ScaleSummary {
    fn from_values(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        ScaleSummary {
            count: n,
            min: sorted[0],
            max: sorted[n - 1],
            mean: values.iter().sum::<f64>() / n as f64,
            median,
        }
    }
}

#[derive(Serialize)]
struct ConformalCliReport {
    command: &'static str,
    config: ConformalCliConfig,
    estimate: DiscrepancyEstimate,
    kernel_scales: ScaleSummary,
}

pub fn run_conformal(args: &ConformalArgs) -> CliResult<()> {
    check_finite("--alpha", args.alpha)?;
    let (map, map_echo) = resolve_map(&args.map)?;
    let metric = resolve_metric(&args.map.metric, map.dim_out())?;
    let prior = LatentPrior::uniform_ball(map.dim_in(), args.map.radius)?;
    let alpha = AlphaParam::new(args.alpha);
    let bracket = parse_bracket(&args.bracket)?;
    let (search_echo, lambda_search) = match args.search {
        SearchArg::Golden => (
            "golden",
            LambdaSearch::GoldenSection { bracket, tol: args.tol },
        ),
        SearchArg::Analytic => ("analytic", LambdaSearch::AnalyticD1),
    };

    let report = conformal_alpha_discrepancy(
        &*map,
        &metric,
        &prior,
        &alpha,
        args.m,
        &ConformalConfig { lambda_search },
        args.seed,
    )?;
    let scales = ScaleSummary::from_values(&report.lambdas);
    eprintln!(
        "conformal value {:.6} std_error {:.6} (m {}, median kernel scale {:.6})",
        report.estimate.value, report.estimate.std_error, report.estimate.m, scales.median
    );
    let out = ConformalCliReport {
        command: "conformal",
        config: ConformalCliConfig {
            map: map_echo,
            metric: args.map.metric.clone(),
            radius: args.map.radius,
            alpha: args.alpha,
            m: args.m,
            search: search_echo,
            bracket,
            tol: args.tol,
            seed: args.seed,
        },
        estimate: report.estimate,
        kernel_scales: scales,
    };
    emit_json(args.out.as_deref(), &out)
}

#[derive(Serialize)]
struct EmbedConfig {
    input: String,
    rho: f64,
    alpha: f64,
    kernel: String,
    gamma: String,
    dim: usize,
    iters: usize,
    step: f64,
    momentum: f64,
    init_scale: f64,
    seed: u64,
}

#[derive(Serialize)]
struct EmbedTrace {
    command: &'static str,
    config: EmbedConfig,
    points: usize,
    input_dim: usize,
    iterations: usize,
    final_step: f64,
    final_cost: f64,
    cost_trace: Vec<f64>,
}

pub fn run_embed(args: &EmbedArgs) -> CliResult<()> {
    check_finite("--rho", args.rho)?;
    check_finite("--alpha", args.alpha)?;
    if args.dim == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    let kernel = resolve_kernel(&args.kernel)?;
    let gamma = resolve_gamma(&args.gamma)?;
    let x = read_matrix_csv(&args.input)?;
    let p = input_similarities(&x, args.rho)?;

    if !(args.init_scale > 0.0 && args.init_scale.is_finite()) {
        return Err(CliError::Usage(format!(
            "--init-scale {} must be positive and finite",
            args.init_scale
        )));
    }
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let y0 = DMatrix::from_fn(n, args.dim, |_, _| {
        args.init_scale * rng.sample::<f64, _>(StandardNormal)
    });
    let alpha = AlphaParam::new(args.alpha);
    let state = optimize_embedding(
        &p,
        &y0,
        &kernel,
        &alpha,
        &gamma,
        args.iters,
        args.step,
        args.momentum,
        args.seed,
    )?;

    let final_cost = *state.cost_trace.last().expect("trace holds the initial cost");
    eprintln!(
        "embedded {n} points into {} dims: cost {:.6} after {} iterations",
        args.dim, final_cost, state.iterations
    );
    write_matrix_csv(&args.out, &state.y)?;
    if let Some(trace_path) = &args.trace {
        let trace = EmbedTrace {
            command: "embed",
            config: EmbedConfig {
                input: args.input.display().to_string(),
                rho: args.rho,
                alpha: args.alpha,
                kernel: args.kernel.clone(),
                gamma: args.gamma.clone(),
                dim: args.dim,
                iters: args.iters,
                step: args.step,
                momentum: args.momentum,
                init_scale: args.init_scale,
                seed: args.seed,
            },
            points: n,
            input_dim: x.ncols(),
            iterations: state.iterations,
            final_step: state.step,
            final_cost,
            cost_trace: state.cost_trace.clone(),
        };
        emit_json(Some(trace_path), &trace)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Theorem6Config {
    map: String,
    metric: String,
    radius: f64,
    rho: f64,
    n_list: Vec<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct Theorem6CliReport {
    command: &'static str,
    config: Theorem6Config,
    rows: Vec<Theorem6Row>,
}

pub fn run_theorem6(args: &Theorem6Args) -> CliResult<()> {
    check_finite("--rho", args.rho)?;
    let (map, map_echo) = resolve_map(&args.map)?;
    let metric = resolve_metric(&args.map.metric, map.dim_out())?;
    let n_list = parse_usize_list(&args.n_list, "--n-list")?;

    let report = theorem6_experiment(&*map, &metric, args.map.radius, args.rho, &n_list, args.seed)?;

    let mut csv = String::from("n,sne_cost_fitted_residual,closed_form_value,seed\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.n,
            fmt_float(row.residual),
            fmt_float(row.closed_form_mean),
            args.seed
        ));
    }
    write_text(&args.out, &csv)?;

    let first = report.rows.first().expect("n_list is nonempty");
    let last = report.rows.last().expect("n_list is nonempty");
    eprintln!(
        "theorem6 residual {:.6} (n {}) -> {:.6} (n {}) over {} sizes",
        first.residual,
        first.n,
        last.residual,
        last.n,
        report.rows.len()
    );
    let out = Theorem6CliReport {
        command: "theorem6",
        config: Theorem6Config {
            map: map_echo,
            metric: args.map.metric.clone(),
            radius: args.map.radius,
            rho: args.rho,
            n_list,
            seed: args.seed,
        },
        rows: report.rows,
    };
    emit_json(None, &out)
}

#[derive(Serialize)]
struct OracleConfig {
    a_list: Vec<f64>,
    alpha_list: Vec<f64>,
    grid_min: f64,
    grid_max: f64,
    points: usize,
}

#[derive(Serialize)]
struct OracleRow {
    a: f64,
    alpha: f64,
    closed_form: f64,
    quadrature: f64,
    abs_diff: f64,
    normalization_warning: bool,
}

#[derive(Serialize)]
struct OracleReport {
    command: &'static str,
    config: OracleConfig,
    rows: Vec<OracleRow>,
    max_abs_diff: f64,
}

pub fn run_oracle(args: &OracleArgs) -> CliResult<()> {
    let a_list = parse_f64_list(&args.a_list, "--a-list")?;
    let alpha_list = parse_f64_list(&args.alpha_list, "--alpha-list")?;
    let grid = GridSpec::line(args.grid_min, args.grid_max, args.points)?;
    let kernel = SimilarityKernel::Gaussian;

    let mut rows = Vec::new();
    let mut max_abs_diff = 0.0f64;
    for &a in &a_list {
        if !(a > 0.0 && a.is_finite()) {
            return Err(CliError::Usage(format!(
                "--a-list entries must be positive, got {a}"
            )));
        }
        let pull_back = DMatrix::from_element(1, 1, a);
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        // precision-a Gaussian against the standard one
        let p = move |x: &[f64]| (a.sqrt() / norm) * (-0.5 * a * x[0] * x[0]).exp();
        let q = move |x: &[f64]| (1.0 / norm) * (-0.5 * x[0] * x[0]).exp();
        for &al in &alpha_list {
            let alpha = AlphaParam::new(al);
            let closed = pointwise_discrepancy_closed_form(&pull_back, &alpha, &kernel)?;
            let quad = alpha_divergence_quadrature(p, q, &grid, &alpha)?;
            let abs_diff = (closed - quad.value).abs();
            max_abs_diff = max_abs_diff.max(abs_diff);
            rows.push(OracleRow {
                a,
                alpha: al,
                closed_form: closed,
                quadrature: quad.value,
                abs_diff,
                normalization_warning: quad.normalization_warning,
            });
        }
    }

    eprintln!(
        "oracle max |closed - quadrature| = {max_abs_diff:.3e} over {} cases",
        rows.len()
    );
    let report = OracleReport {
        command: "oracle",
        config: OracleConfig {
            a_list,
            alpha_list,
            grid_min: args.grid_min,
            grid_max: args.grid_max,
            points: args.points,
        },
        rows,
        max_abs_diff,
    };
    emit_json(args.out.as_deref(), &report)
}
