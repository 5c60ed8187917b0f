//! Neighborhood similarity matrices: perplexity-calibrated input affinities
//! and kernel affinities of embedding coordinates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::SimilarityKernel;
use crate::measures::check_symmetric;

/// Whether rows of a [`SimilarityMatrix`] are probability vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    RowNormalized,
}

/// Per-row precision found by calibration, with the entropy it achieved.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub lambdas: Vec<f64>,
    pub entropies: Vec<f64>,
}

/// Pairwise positive weights with the diagonal removed: row `i` holds the
/// weights toward every other point, in index order with `i` skipped.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
    normalization: Normalization,
    calibration: Option<Calibration>,
}

impl SimilarityMatrix {
    /// Build from explicit rows (row `i` of length `n - 1`). Entries must be
    /// positive and finite; row-normalized rows must sum to 1 within 1e-10.
    pub fn from_rows(rows: Vec<Vec<f64>>, normalization: Normalization) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() + 1 != n {
                return Err(Error::Domain(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    n - 1
                )));
            }
            if let Some(v) = row.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Domain(format!(
                    "row {i} contains non-positive weight {v}"
                )));
            }
            if normalization == Normalization::RowNormalized {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-10 {
                    return Err(Error::Domain(format!(
                        "row {i} sums to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(Self { n, rows, normalization, calibration: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    /// Point index that entry `k` of row `i` refers to.
    pub fn neighbor_index(i: usize, k: usize) -> usize {
        if k < i {
            k
        } else {
            k + 1
        }
    }

    /// Sum of every stored weight.
    pub fn total_mass(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }
}

/// Entropy of the soft neighborhood at precision `lambda`, with the
/// normalized weights written into `out`.
fn row_entropy(sq_dists: &[f64], lambda: f64, out: &mut Vec<f64>) -> f64 {
    out.clear();
    let mut max = f64::NEG_INFINITY;
    for &d2 in sq_dists {
        let a = -0.5 * lambda * d2;
        out.push(a);
        max = max.max(a);
    }
    let mut total = 0.0;
    for a in out.iter_mut() {
        *a = (*a - max).exp();
        total += *a;
    }
    let mut entropy = 0.0;
    for (a, &d2) in out.iter_mut().zip(sq_dists) {
        *a /= total;
        // -p ln p with ln p = -lambda d2/2 - ln(total) - max
        if *a > 0.0 {
            entropy += *a * (0.5 * lambda * d2 + total.ln() + max);
        }
    }
    entropy
}

/// Per-row bisection on the precision `lambda_i` so that the entropy of the
/// row-normalized weights `exp(-lambda_i d_ij^2 / 2)` hits `ln(perplexity)`.
///
/// `sq_distances` must be a symmetric matrix of squared distances with zero
/// diagonal; `perplexity` must lie in `(1, n - 1]` (the upper end is the
/// uniform-row limit, reached as `lambda -> 0`). Rows whose distances are all
/// equal have constant entropy `ln(n - 1)`: they calibrate trivially when
/// that matches the target and are rejected as degenerate otherwise.
pub fn calibrate_precisions(
    sq_distances: &DMatrix<f64>,
    perplexity: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SimilarityMatrix> {
    let n = sq_distances.nrows();
    if sq_distances.ncols() != n || n < 3 {
        return Err(Error::Domain(format!(
            "need a square distance matrix over at least 3 points, got {}x{}",
            n,
            sq_distances.ncols()
        )));
    }
    check_symmetric(sq_distances, "squared-distance matrix")?;
    for i in 0..n {
        if sq_distances[(i, i)] != 0.0 {
            return Err(Error::Domain(format!(
                "diagonal entry ({i}, {i}) is {}, expected 0",
                sq_distances[(i, i)]
            )));
        }
        for j in 0..n {
            let d2 = sq_distances[(i, j)];
            if !(d2 >= 0.0 && d2.is_finite()) {
                return Err(Error::Domain(format!(
                    "squared distance ({i}, {j}) = {d2} is not a nonnegative real"
                )));
            }
        }
    }
    let max_entropy = ((n - 1) as f64).ln();
    let target = perplexity.ln();
    if !(perplexity > 1.0 && target <= max_entropy + 1e-12) {
        return Err(Error::Domain(format!(
            "perplexity {perplexity} must lie in (1, {}]",
            n - 1
        )));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Domain(format!(
            "need a positive tolerance and iteration budget, got {tol}, {max_iter}"
        )));
    }

    let mut rows = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n);
    let mut entropies = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n - 1);
    for i in 0..n {
        let d2: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sq_distances[(i, j)]).collect();
        let spread = d2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - d2.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread <= 0.0 {
            // entropy is ln(n-1) at every lambda
            if (max_entropy - target).abs() <= tol {
                let e = row_entropy(&d2, 1.0, &mut weights);
                rows.push(weights.clone());
                lambdas.push(1.0);
                entropies.push(e);
                continue;
            }
            return Err(Error::DegenerateRow {
                row: i,
                target,
                achievable: max_entropy,
            });
        }

        // entropy decreases in lambda; expand a bracket around 1, then bisect
        let mut iterations = 0usize;
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        let mut h = row_entropy(&d2, 1.0, &mut weights);
        let mut solved = (h - target).abs() <= tol;
        let mut lambda = 1.0f64;
        // the target entropy can be a strict supremum (perplexity at the
        // n-1 boundary), so the expansion loops also stop on tolerance
        if !solved && h > target {
            while h > target && !solved {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::CalibrationFailed { row: i, iterations, lo, hi, target });
                }
                lo = hi;
                hi *= 2.0;
                h = row_entropy(&d2, hi, &mut weights);
                lambda = hi;
                solved = (h - target).abs() <= tol;
            }
        } else if !solved {
            while h < target && !solved {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::CalibrationFailed { row: i, iterations, lo, hi, target });
                }
                hi = lo;
                lo *= 0.5;
                h = row_entropy(&d2, lo, &mut weights);
                lambda = lo;
                solved = (h - target).abs() <= tol;
            }
        }
        while !solved {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::CalibrationFailed { row: i, iterations, lo, hi, target });
            }
            lambda = 0.5 * (lo + hi);
            h = row_entropy(&d2, lambda, &mut weights);
            if (h - target).abs() <= tol {
                solved = true;
            } else if h > target {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        rows.push(weights.clone());
        lambdas.push(lambda);
        entropies.push(h);
    }
    Ok(SimilarityMatrix {
        n,
        rows,
        normalization: Normalization::RowNormalized,
        calibration: Some(Calibration { lambdas, entropies }),
    })
}

/// Row-normalized input similarities of data rows `x` at the given
/// perplexity: squared Euclidean distances fed through
/// [`calibrate_precisions`].
pub fn input_similarities(x: &DMatrix<f64>, perplexity: f64) -> Result<SimilarityMatrix> {
    let n = x.nrows();
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 data points, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("data contains non-finite values".into()));
    }
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = x.row(i) - x.row(j);
            let v = diff.norm_squared();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    calibrate_precisions(&d2, perplexity, 1e-8, 200)
}

/// Unnormalized kernel similarities of embedding rows `y` (diagonal
/// excluded). Entries can underflow to zero for very distant pairs; the
/// cost functions treat that as missing mass, not as an error.
pub fn embedding_similarities(y: &DMatrix<f64>, kernel: &SimilarityKernel) -> SimilarityMatrix {
    let n = y.nrows();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n.saturating_sub(1));
        for j in 0..n {
            if j != i {
                row.push(kernel.of_sq_dist((y.row(i) - y.row(j)).norm_squared()));
            }
        }
        rows.push(row);
    }
    SimilarityMatrix {
        n,
        rows,
        normalization: Normalization::None,
        calibration: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sq_dist_matrix(points: &[f64]) -> DMatrix<f64> {
        let n = points.len();
        DMatrix::from_fn(n, n, |i, j| (points[i] - points[j]).powi(2))
    }

    #[test]
    fn equal_distances_calibrate_to_uniform_rows() {
        let d2 = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 4.0 });
        let sim = calibrate_precisions(&d2, 2.0, 1e-6, 100).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(sim.row(i)[0], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(sim.row(i)[1], 0.5, epsilon = 1e-12);
        }
        let cal = sim.calibration().unwrap();
        for &e in &cal.entropies {
            assert_abs_diff_eq!(e, 2.0f64.ln(), epsilon = 1e-6);
        }
    }

    #[test]
    fn unreachable_entropy_on_equal_distances_is_degenerate() {
        let d2 = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 4.0 });
        match calibrate_precisions(&d2, 1.5, 1e-6, 100) {
            Err(Error::DegenerateRow { row, target, achievable }) => {
                assert_eq!(row, 0);
                assert_abs_diff_eq!(target, 1.5f64.ln(), epsilon = 1e-12);
                assert_abs_diff_eq!(achievable, 2.0f64.ln(), epsilon = 1e-12);
            }
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn bisection_hits_the_entropy_target_on_a_line() {
        // perplexity n - 1 asks for the uniform limit: entropies land on
        // ln 2 and the rows come out uniform even though the distances differ
        let d2 = sq_dist_matrix(&[0.0, 1.0, 3.0]);
        let sim = calibrate_precisions(&d2, 2.0, 1e-6, 100).unwrap();
        let cal = sim.calibration().unwrap();
        let target = 2.0f64.ln();
        for (i, &e) in cal.entropies.iter().enumerate() {
            assert!((e - target).abs() <= 1e-6, "row {i}: entropy {e}");
            for &v in sim.row(i) {
                assert_abs_diff_eq!(v, 0.5, epsilon = 2e-3);
            }
        }
        // with an interior target the precision is a genuine root, so a
        // tighter tolerance must reproduce it
        let d4 = sq_dist_matrix(&[0.0, 1.0, 3.0, 7.0]);
        let loose = calibrate_precisions(&d4, 2.0, 1e-6, 200).unwrap();
        let tight = calibrate_precisions(&d4, 2.0, 1e-9, 400).unwrap();
        for i in 0..4 {
            let (ll, tl) = (
                loose.calibration().unwrap().lambdas[i],
                tight.calibration().unwrap().lambdas[i],
            );
            let rel = (ll - tl).abs() / tl;
            assert!(rel < 1e-2, "row {i}: {ll} vs {tl}");
            assert!((tight.calibration().unwrap().entropies[i] - target).abs() <= 1e-9);
        }
    }

    #[test]
    fn larger_perplexity_needs_smaller_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<f64> = (0..8).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let d2 = sq_dist_matrix(&points);
        let loose = calibrate_precisions(&d2, 6.0, 1e-8, 200).unwrap();
        let tight = calibrate_precisions(&d2, 2.0, 1e-8, 200).unwrap();
        for i in 0..8 {
            assert!(
                loose.calibration().unwrap().lambdas[i]
                    < tight.calibration().unwrap().lambdas[i],
                "row {i}"
            );
        }
    }

    #[test]
    fn calibration_rejects_malformed_inputs() {
        let d2 = sq_dist_matrix(&[0.0, 1.0, 3.0]);
        assert!(calibrate_precisions(&d2, 1.0, 1e-6, 100).is_err());
        assert!(calibrate_precisions(&d2, 2.5, 1e-6, 100).is_err());
        let mut asym = d2.clone();
        asym[(0, 1)] = 9.0;
        assert!(calibrate_precisions(&asym, 2.0, 1e-6, 100).is_err());
        let mut diag = d2.clone();
        diag[(1, 1)] = 0.1;
        assert!(calibrate_precisions(&diag, 2.0, 1e-6, 100).is_err());
        assert!(matches!(
            calibrate_precisions(&d2, 2.0, 1e-6, 3),
            Err(Error::CalibrationFailed { .. })
        ));
    }

    #[test]
    fn two_tight_clusters_keep_row_mass_inside_the_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut data = DMatrix::zeros(8, 2);
        for i in 0..8 {
            let center = if i < 4 { 0.0 } else { 40.0 };
            data[(i, 0)] = center + 0.1 * rng.sample::<f64, _>(StandardNormal);
            data[(i, 1)] = 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
        let sim = input_similarities(&data, 3.0).unwrap();
        for i in 0..8 {
            let mass: f64 = sim
                .row(i)
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let j = SimilarityMatrix::neighbor_index(i, *k);
                    (i < 4) == (j < 4)
                })
                .map(|(_, v)| v)
                .sum();
            assert!(mass > 0.9, "row {i}: within-cluster mass {mass}");
        }
    }

    #[test]
    fn simplex_data_gives_uniform_rows() {
        // regular 3-simplex: every pairwise distance equal
        let data = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0,
                0.0, 1.0, 0.0, 0.0,
                0.0, 0.0, 1.0, 0.0,
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        let sim = input_similarities(&data, 3.0).unwrap();
        for i in 0..4 {
            for &v in sim.row(i) {
                assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn input_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = DMatrix::from_fn(9, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sim = input_similarities(&data, 4.0).unwrap();
        assert_eq!(sim.normalization(), Normalization::RowNormalized);
        for i in 0..9 {
            let sum: f64 = sim.row(i).iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
            assert!(sim.row(i).iter().all(|v| *v > 0.0));
        }
        let cal = sim.calibration().unwrap();
        for &e in &cal.entropies {
            assert!((e - 4.0f64.ln()).abs() <= 1e-6);
        }
    }

    #[test]
    fn duplicate_points_are_admitted() {
        let data = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 1.0, 2.5]);
        let sim = input_similarities(&data, 2.0).unwrap();
        for i in 0..4 {
            let sum: f64 = sim.row(i).iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
        }
        // the coincident pair dominates each other's rows
        assert!(sim.row(0)[0] > 0.5);
    }

    #[test]
    fn kernel_similarities_match_scalar_evaluations() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let s = embedding_similarities(&y, &SimilarityKernel::Gaussian);
        assert_eq!(s.normalization(), Normalization::None);
        assert_abs_diff_eq!(s.row(0)[0], (-1.0f64).exp(), epsilon = 1e-15);
        let y1 = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let s1 = embedding_similarities(&y1, &SimilarityKernel::Student);
        assert_abs_diff_eq!(s1.row(0)[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.row(1)[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn coincident_points_have_unit_student_similarity() {
        let y = DMatrix::zeros(3, 2);
        let s = embedding_similarities(&y, &SimilarityKernel::Student);
        for i in 0..3 {
            for &v in s.row(i) {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn explicit_rows_are_validated() {
        let ok = SimilarityMatrix::from_rows(
            vec![vec![0.75, 0.25], vec![0.5, 0.5], vec![0.5, 0.5]],
            Normalization::RowNormalized,
        );
        assert!(ok.is_ok());
        assert_eq!(ok.unwrap().total_mass(), 3.0);
        assert!(SimilarityMatrix::from_rows(
            vec![vec![0.75, 0.3], vec![0.5, 0.5], vec![0.5, 0.5]],
            Normalization::RowNormalized,
        )
        .is_err());
        assert!(SimilarityMatrix::from_rows(
            vec![vec![1.0], vec![0.5, 0.5]],
            Normalization::None,
        )
        .is_err());
        assert!(SimilarityMatrix::from_rows(
            vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![0.5, 0.5]],
            Normalization::None,
        )
        .is_err());
    }

    #[test]
    fn neighbor_indices_skip_the_diagonal() {
        assert_eq!(SimilarityMatrix::neighbor_index(2, 0), 0);
        assert_eq!(SimilarityMatrix::neighbor_index(2, 1), 1);
        assert_eq!(SimilarityMatrix::neighbor_index(2, 2), 3);
        assert_eq!(SimilarityMatrix::neighbor_index(0, 0), 1);
    }
}
