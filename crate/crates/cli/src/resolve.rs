//! Flag-value parsing: map, metric, kernel, and mass-scale selections plus
//! comma-separated numeric lists.

use alpha_discrepancy::geometry::{builtin_map, MetricField, MlpMap, SimilarityKernel, SmoothMap};
use alpha_discrepancy::neighbor_embedding::GammaMode;

use crate::args::MapArgs;
use crate::errors::{CliError, CliResult};

/// The map plus the string echoed into reports.
pub fn resolve_map(args: &MapArgs) -> CliResult<(Box<dyn SmoothMap>, String)> {
    match (&args.map, &args.mlp_weights) {
        (Some(name), None) => Ok((builtin_map(name)?, name.clone())),
        (None, Some(path)) => {
            let map = MlpMap::from_weights_file(path)?;
            Ok((Box::new(map), format!("mlp-weights:{}", path.display())))
        }
        _ => Err(CliError::Usage(
            "exactly one of --map or --mlp-weights is required".into(),
        )),
    }
}

pub fn resolve_metric(raw: &str, dim_out: usize) -> CliResult<MetricField> {
    if raw == "euclidean" {
        return Ok(MetricField::euclidean(dim_out));
    }
    if let Some(rest) = raw.strip_prefix("diag:") {
        let diag = parse_f64_list(rest, "--metric diagonal")?;
        return Ok(MetricField::diagonal(diag)?);
    }
    Err(CliError::Usage(format!(
        "unknown metric '{raw}'; expected \"euclidean\" or \"diag:v1,v2,...\""
    )))
}

pub fn resolve_kernel(raw: &str) -> CliResult<SimilarityKernel> {
    match raw {
        "gaussian" => Ok(SimilarityKernel::Gaussian),
        "student" => Ok(SimilarityKernel::Student),
        _ => {
            if let Some(rest) = raw.strip_prefix("scaled:") {
                let lambda: f64 = rest.parse().map_err(|_| {
                    CliError::Usage(format!("kernel scale '{rest}' is not a decimal float"))
                })?;
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(CliError::Usage(format!(
                        "kernel scale {lambda} must be positive and finite"
                    )));
                }
                return Ok(SimilarityKernel::ScaledGaussian { lambda });
            }
            Err(CliError::Usage(format!(
                "unknown kernel '{raw}'; expected \"gaussian\", \"student\", or \"scaled:LAMBDA\""
            )))
        }
    }
}

pub fn resolve_gamma(raw: &str) -> CliResult<GammaMode> {
    if raw == "optimal" {
        return Ok(GammaMode::Optimal);
    }
    if let Some(rest) = raw.strip_prefix("fixed:") {
        let g: f64 = rest.parse().map_err(|_| {
            CliError::Usage(format!("mass scale '{rest}' is not a decimal float"))
        })?;
        if !(g > 0.0 && g.is_finite()) {
            return Err(CliError::Usage(format!(
                "mass scale {g} must be positive and finite"
            )));
        }
        return Ok(GammaMode::Fixed(g));
    }
    Err(CliError::Usage(format!(
        "unknown mass scale '{raw}'; expected \"optimal\" or \"fixed:VALUE\""
    )))
}

pub fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|f| f.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!(
            "{what}: '{s}' is not a comma-separated float list"
        ))),
    }
}

pub fn parse_usize_list(s: &str, what: &str) -> CliResult<Vec<usize>> {
    let vals: Result<Vec<usize>, _> = s.split(',').map(|f| f.trim().parse::<usize>()).collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!(
            "{what}: '{s}' is not a comma-separated integer list"
        ))),
    }
}

pub fn parse_bracket(s: &str) -> CliResult<(f64, f64)> {
    let v = parse_f64_list(s, "--bracket")?;
    if v.len() != 2 {
        return Err(CliError::Usage(format!(
            "--bracket: expected \"LO,HI\", got '{s}'"
        )));
    }
    Ok((v[0], v[1]))
}
