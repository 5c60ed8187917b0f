//! Smooth maps from a latent space into an observation space.
//!
//! Every map knows its dimensions, evaluates pointwise, and provides a
//! Jacobian: analytic where one is implemented, central finite differences
//! otherwise. Maps must be immersions (full column rank Jacobian); rank is
//! checked where pull-back metrics are formed, not here.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default central-difference step for a point: eps^(1/3) * (1 + |y0|),
/// the standard compromise between truncation and rounding error.
pub fn default_fd_step(y0: &DVector<f64>) -> f64 {
    f64::EPSILON.powf(1.0 / 3.0) * (1.0 + y0.norm())
}

/// Central-difference Jacobian, column i = (f(y0 + h e_i) - f(y0 - h e_i)) / 2h.
pub fn finite_difference_jacobian<M: SmoothMap + ?Sized>(
    f: &M,
    y0: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("finite-difference step {h} must be positive")));
    }
    let (d, out) = (f.dim_in(), f.dim_out());
    let mut jac = DMatrix::zeros(out, d);
    let mut probe = y0.clone();
    for i in 0..d {
        probe[i] = y0[i] + h;
        let plus = f.evaluate(&probe);
        probe[i] = y0[i] - h;
        let minus = f.evaluate(&probe);
        probe[i] = y0[i];
        for (v, label) in [(&plus, "+"), (&minus, "-")] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteValue {
                    point: {
                        let mut p = y0.as_slice().to_vec();
                        p[i] += if label == "+" { h } else { -h };
                        p
                    },
                });
            }
        }
        jac.set_column(i, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}

/// A smooth map y -> x with a Jacobian provider.
pub trait SmoothMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn evaluate(&self, y: &DVector<f64>) -> DVector<f64>;

    /// Jacobian at `y` (dim_out x dim_in). Defaults to central finite
    /// differences with the standard step; implementations with an analytic
    /// form override this.
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        finite_difference_jacobian(self, y, default_fd_step(y))
    }
}

/// Linear map x = A y.
#[derive(Debug, Clone)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }

    /// c * identity in `dim` dimensions.
    pub fn uniform_scale(c: f64, dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim) * c)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl SmoothMap for LinearMap {
    fn dim_in(&self) -> usize {
        self.matrix.ncols()
    }
    fn dim_out(&self) -> usize {
        self.matrix.nrows()
    }
    fn evaluate(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.matrix * y
    }
    fn jacobian(&self, _y: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.matrix.clone())
    }
}

/// Polar-coordinates chart (r, theta) -> (r cos theta, r sin theta).
/// Rank-deficient on the line r = 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct PolarMap;

impl SmoothMap for PolarMap {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        2
    }
    fn evaluate(&self, y: &DVector<f64>) -> DVector<f64> {
        let (r, th) = (y[0], y[1]);
        DVector::from_vec(vec![r * th.cos(), r * th.sin()])
    }
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (r, th) = (y[0], y[1]);
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[th.cos(), -r * th.sin(), th.sin(), r * th.cos()],
        ))
    }
}

/// Swiss-roll-style surface (t, h) -> (t cos t, h, t sin t); full column rank
/// everywhere (the rolling column has norm sqrt(1 + t^2) and is orthogonal to
/// the height column).
#[derive(Debug, Clone, Copy, Default)]
pub struct SwissRollMap;

impl SmoothMap for SwissRollMap {
    fn dim_in(&self) -> usize {
        2
    }
    fn dim_out(&self) -> usize {
        3
    }
    fn evaluate(&self, y: &DVector<f64>) -> DVector<f64> {
        let (t, h) = (y[0], y[1]);
        DVector::from_vec(vec![t * t.cos(), h, t * t.sin()])
    }
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let t = y[0];
        Ok(DMatrix::from_row_slice(
            3,
            2,
            &[
                t.cos() - t * t.sin(),
                0.0,
                0.0,
                1.0,
                t.sin() + t * t.cos(),
                0.0,
            ],
        ))
    }
}

/// Fully-connected network with tanh hidden activations and a linear output
/// layer. tanh keeps the map smooth everywhere, which piecewise-linear
/// activations would not.
#[derive(Debug, Clone)]
pub struct MlpMap {
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

impl MlpMap {
    /// Build from per-layer (weight, bias) pairs; layer l maps its input
    /// through `W_l x + b_l`, with tanh applied after every layer but the last.
    pub fn new(layers: Vec<(DMatrix<f64>, DVector<f64>)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Domain("an MLP needs at least one layer".into()));
        }
        for (l, (w, b)) in layers.iter().enumerate() {
            if w.nrows() != b.len() {
                return Err(Error::Domain(format!(
                    "layer {l}: weight has {} rows but bias has {} entries",
                    w.nrows(),
                    b.len()
                )));
            }
            if l > 0 && w.ncols() != layers[l - 1].0.nrows() {
                return Err(Error::Domain(format!(
                    "layer {l}: expects {} inputs but layer {} produces {}",
                    w.ncols(),
                    l - 1,
                    layers[l - 1].0.nrows()
                )));
            }
        }
        let dim_in = layers[0].0.ncols();
        let dim_out = layers.last().unwrap().0.nrows();
        if dim_out < dim_in {
            return Err(Error::Domain(format!(
                "map must not reduce dimension: {dim_in} -> {dim_out}"
            )));
        }
        let (weights, biases) = layers.into_iter().unzip();
        Ok(Self { weights, biases })
    }

    /// Parse the plain-text layered weights format:
    ///
    /// ```text
    /// layers: k
    /// rows cols        (layer 1 shape)
    /// <cols floats>    (weight row, repeated `rows` times)
    /// <rows floats>    (bias line)
    /// ...              (remaining layers)
    /// ```
    pub fn from_weights_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Domain(format!("cannot read weights file {}: {e}", path.display()))
        })?;
        Self::from_weights_text(&text)
    }

    /// Parse the weights format from an in-memory string (see
    /// [`MlpMap::from_weights_file`]).
    pub fn from_weights_text(text: &str) -> Result<Self> {
        // (line number, content) for non-blank lines, 1-based
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line_no, header) = lines
            .next()
            .ok_or(Error::WeightsParse { line: 1, message: "empty file".into() })?;
        let count_str = header.strip_prefix("layers:").ok_or(Error::WeightsParse {
            line: line_no,
            message: format!("expected 'layers: k' header, got '{header}'"),
        })?;
        let layer_count: usize = count_str.trim().parse().map_err(|_| Error::WeightsParse {
            line: line_no,
            message: format!("invalid layer count '{}'", count_str.trim()),
        })?;
        if layer_count == 0 {
            return Err(Error::WeightsParse {
                line: line_no,
                message: "layer count must be positive".into(),
            });
        }

        let mut next_line = |what: &str| {
            lines.next().ok_or(Error::WeightsParse {
                line: text.lines().count(),
                message: format!("unexpected end of file, expected {what}"),
            })
        };
        let parse_floats = |line_no: usize, line: &str, expected: usize| -> Result<Vec<f64>> {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != expected {
                return Err(Error::WeightsParse {
                    line: line_no,
                    message: format!("expected {expected} values, found {}", fields.len()),
                });
            }
            fields
                .iter()
                .enumerate()
                .map(|(k, f)| {
                    f.parse::<f64>().map_err(|_| Error::WeightsParse {
                        line: line_no,
                        message: format!("field {}: '{f}' is not a decimal float", k + 1),
                    })
                })
                .collect()
        };

        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let (ln, shape_line) = next_line("a 'rows cols' shape line")?;
            let dims = parse_floats(ln, shape_line, 2)?;
            let (rows, cols) = (dims[0] as usize, dims[1] as usize);
            if rows == 0 || cols == 0 || dims[0].fract() != 0.0 || dims[1].fract() != 0.0 {
                return Err(Error::WeightsParse {
                    line: ln,
                    message: format!("invalid layer shape '{shape_line}'"),
                });
            }
            let mut w = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                let (ln, row_line) = next_line("a weight row")?;
                let vals = parse_floats(ln, row_line, cols)?;
                for (c, v) in vals.into_iter().enumerate() {
                    w[(r, c)] = v;
                }
            }
            let (ln, bias_line) = next_line("a bias line")?;
            let b = DVector::from_vec(parse_floats(ln, bias_line, rows)?);
            layers.push((w, b));
        }
        Self::new(layers)
    }

    /// Pre-activations and activations of every layer at `y`.
    fn forward(&self, y: &DVector<f64>) -> Vec<DVector<f64>> {
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.weights.len());
        let mut a = y.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w * &a + b;
            a = if l == last { z } else { z.map(f64::tanh) };
            activations.push(a.clone());
        }
        activations
    }
}

impl SmoothMap for MlpMap {
    fn dim_in(&self) -> usize {
        self.weights[0].ncols()
    }
    fn dim_out(&self) -> usize {
        self.weights.last().unwrap().nrows()
    }
    fn evaluate(&self, y: &DVector<f64>) -> DVector<f64> {
        self.forward(y).pop().unwrap()
    }
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        // forward-mode chain rule: J <- W_l diag(1 - a_l^2) ... W_1
        let activations = self.forward(y);
        let last = self.weights.len() - 1;
        let mut jac = self.weights[0].clone();
        for l in 0..self.weights.len() {
            if l > 0 {
                jac = &self.weights[l] * jac;
            }
            if l < last {
                let a = &activations[l];
                for r in 0..jac.nrows() {
                    let scale = 1.0 - a[r] * a[r];
                    for c in 0..jac.ncols() {
                        jac[(r, c)] *= scale;
                    }
                }
            }
        }
        Ok(jac)
    }
}

/// Composition phi . f with phi linear; used to re-parametrize the
/// observation space.
pub struct ComposedLinearMap {
    outer: DMatrix<f64>,
    inner: Box<dyn SmoothMap>,
}

impl ComposedLinearMap {
    pub fn new(outer: DMatrix<f64>, inner: Box<dyn SmoothMap>) -> Result<Self> {
        if outer.ncols() != inner.dim_out() {
            return Err(Error::Domain(format!(
                "outer map expects {} inputs but inner map produces {}",
                outer.ncols(),
                inner.dim_out()
            )));
        }
        Ok(Self { outer, inner })
    }
}

impl fmt::Debug for ComposedLinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComposedLinearMap")
            .field("outer", &self.outer)
            .finish_non_exhaustive()
    }
}

impl SmoothMap for ComposedLinearMap {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.outer.nrows()
    }
    fn evaluate(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.outer * self.inner.evaluate(y)
    }
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(&self.outer * self.inner.jacobian(y)?)
    }
}

/// Names of the built-in maps, addressable from the CLI.
pub const BUILTIN_MAP_NAMES: [&str; 10] = [
    "identity-2d",
    "scale2-1d",
    "scale2-2d",
    "isometric-plane",
    "linear-random",
    "conformal-3x",
    "aniso-1-4",
    "polar",
    "swiss-roll",
    "mlp",
];

/// Built-in maps that are exact isometries under the Euclidean metric.
pub const ISOMETRIC_BUILTIN_NAMES: [&str; 2] = ["identity-2d", "isometric-plane"];

/// Look up a built-in map by name.
///
/// The `scale2-*` maps multiply coordinates by sqrt(2), scaling the pull-back
/// metric by exactly 2.
pub fn builtin_map(name: &str) -> Result<Box<dyn SmoothMap>> {
    let sqrt2 = std::f64::consts::SQRT_2;
    Ok(match name {
        "identity-2d" => Box::new(LinearMap::identity(2)),
        "scale2-1d" => Box::new(LinearMap::uniform_scale(sqrt2, 1)),
        "scale2-2d" => Box::new(LinearMap::uniform_scale(sqrt2, 2)),
        "isometric-plane" => Box::new(LinearMap::new(DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        ))),
        "linear-random" => Box::new(LinearMap::new(DMatrix::from_row_slice(
            3,
            2,
            &[0.83, -0.31, 0.22, 1.14, -0.47, 0.39],
        ))),
        "conformal-3x" => {
            let (s, c) = (std::f64::consts::FRAC_PI_6).sin_cos();
            Box::new(LinearMap::new(DMatrix::from_row_slice(
                2,
                2,
                &[3.0 * c, -3.0 * s, 3.0 * s, 3.0 * c],
            )))
        }
        "aniso-1-4" => Box::new(LinearMap::new(DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 0.0, 0.0, 4.0],
        ))),
        "polar" => Box::new(PolarMap),
        "swiss-roll" => Box::new(SwissRollMap),
        "mlp" => Box::new(builtin_mlp()),
        other => {
            return Err(Error::Domain(format!(
                "unknown map '{other}'; built-ins: {}",
                BUILTIN_MAP_NAMES.join(", ")
            )))
        }
    })
}

/// The whole built-in catalog.
pub fn builtin_test_maps() -> Vec<(&'static str, Box<dyn SmoothMap>)> {
    BUILTIN_MAP_NAMES
        .iter()
        .map(|name| (*name, builtin_map(name).expect("builtin")))
        .collect()
}

/// The fixed 2 -> 6 -> 3 tanh network in the catalog.
pub fn builtin_mlp() -> MlpMap {
    let w1 = DMatrix::from_row_slice(
        6,
        2,
        &[
            0.62, -0.41, 0.35, 0.58, -0.52, 0.27, 0.18, -0.63, 0.44, 0.39, -0.29, 0.51,
        ],
    );
    let b1 = DVector::from_vec(vec![0.11, -0.07, 0.23, 0.05, -0.19, 0.13]);
    let w2 = DMatrix::from_row_slice(
        3,
        6,
        &[
            0.71, -0.24, 0.33, 0.48, -0.36, 0.22, -0.18, 0.64, 0.29, -0.42, 0.37, 0.55, 0.26,
            0.31, -0.57, 0.19, 0.62, -0.28,
        ],
    );
    let b2 = DVector::from_vec(vec![0.02, -0.11, 0.08]);
    MlpMap::new(vec![(w1, b1), (w2, b2)]).expect("builtin MLP shapes are consistent")
}
