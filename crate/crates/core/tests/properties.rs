//! Randomized checks of the algebraic structure: the deterministic unit
//! tests pin values, these sweep the input space.

use nalgebra::DMatrix;
use proptest::prelude::*;

use alpha_discrepancy::measures::{
    alpha_divergence_discrete, logdet_divergence, optimal_gamma,
    reduced_divergence_after_normalization, AlphaParam, PositiveMeasure,
};
use alpha_discrepancy::neighbor_embedding::input_similarities;

fn weights(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..10.0, len)
}

fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..10.0, len).prop_map(|v| {
        let total: f64 = v.iter().sum();
        v.into_iter().map(|w| w / total).collect()
    })
}

fn spd(dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.5f64..1.5, dim * dim).prop_map(move |v| {
        let l = DMatrix::from_vec(dim, dim, v);
        &l * l.transpose() + DMatrix::identity(dim, dim) * 0.1
    })
}

proptest! {
    #[test]
    fn divergence_is_nonnegative_across_the_alpha_range(
        pw in weights(2..12),
        sw in weights(2..12),
        alpha in -2.0f64..3.0,
    ) {
        let n = pw.len().min(sw.len());
        let p = PositiveMeasure::new(pw[..n].to_vec()).unwrap();
        let s = PositiveMeasure::new(sw[..n].to_vec()).unwrap();
        let d = alpha_divergence_discrete(&p, &s, &AlphaParam::new(alpha)).unwrap();
        prop_assert!(d >= -1e-12, "divergence {d} at alpha {alpha}");
    }

    #[test]
    fn divergence_of_a_measure_with_itself_is_zero(
        pw in weights(2..12),
        alpha in -2.0f64..3.0,
    ) {
        let p = PositiveMeasure::new(pw).unwrap();
        let d = alpha_divergence_discrete(&p, &p, &AlphaParam::new(alpha)).unwrap();
        prop_assert!(d <= 1e-10, "self-divergence {d} at alpha {alpha}");
    }

    #[test]
    fn perturbing_one_atom_makes_the_divergence_positive(
        pw in weights(2..12),
        alpha in -2.0f64..3.0,
        factor in 1.1f64..3.0,
        pick in any::<prop::sample::Index>(),
    ) {
        let p = PositiveMeasure::new(pw.clone()).unwrap();
        let mut qw = pw;
        let k = pick.index(qw.len());
        qw[k] *= factor;
        let q = PositiveMeasure::new(qw).unwrap();
        let d = alpha_divergence_discrete(&p, &q, &AlphaParam::new(alpha)).unwrap();
        prop_assert!(d > 0.0, "divergence {d} after scaling atom {k} by {factor}");
    }

    #[test]
    fn analytic_scale_beats_nearby_scales(
        pw in weights(2..10),
        sw in weights(2..10),
        alpha in prop::sample::select(vec![0.25, 0.5, 0.75, 1.0, 1.5]),
    ) {
        let n = pw.len().min(sw.len());
        let p = PositiveMeasure::new(pw[..n].to_vec()).unwrap();
        let s = PositiveMeasure::new(sw[..n].to_vec()).unwrap();
        let a = AlphaParam::new(alpha);
        let gamma = optimal_gamma(&p, &s, &a).unwrap();
        let at = |g: f64| {
            let scaled =
                PositiveMeasure::new(s.weights().iter().map(|w| g * w).collect()).unwrap();
            alpha_divergence_discrete(&p, &scaled, &a).unwrap()
        };
        let best = at(gamma);
        for f in [0.9, 0.97, 1.03, 1.1] {
            prop_assert!(best <= at(gamma * f) + 1e-12);
        }
    }

    #[test]
    fn reduced_form_equals_direct_evaluation_at_the_optimum(
        pw in simplex(8),
        sw in weights(8..9),
        alpha in prop::sample::select(vec![0.25, 0.5, 0.75, 1.0, 1.5]),
    ) {
        let p = PositiveMeasure::new(pw).unwrap();
        let s = PositiveMeasure::new(sw).unwrap();
        let a = AlphaParam::new(alpha);
        let gamma = optimal_gamma(&p, &s, &a).unwrap();
        let scaled =
            PositiveMeasure::new(s.weights().iter().map(|w| gamma * w).collect()).unwrap();
        let direct = alpha_divergence_discrete(&p, &scaled, &a).unwrap();
        let reduced = reduced_divergence_after_normalization(&p, &s, &a).unwrap();
        prop_assert!(
            (direct - reduced).abs() <= 1e-10 * (1.0 + direct.abs()),
            "direct {direct} vs reduced {reduced}"
        );
    }

    #[test]
    fn logdet_divergence_is_nonnegative_and_faithful(a in spd(3), b in spd(3)) {
        let d_ab = logdet_divergence(&a, &b).unwrap();
        prop_assert!(d_ab >= -1e-9, "logdet divergence {d_ab}");
        let d_aa = logdet_divergence(&a, &a).unwrap();
        prop_assert!(d_aa.abs() <= 1e-9, "self-divergence {d_aa}");
    }

    #[test]
    fn calibrated_similarity_rows_are_normalized_and_hit_the_entropy_target(
        coords in prop::collection::vec(-5.0f64..5.0, 12),
        rho in 1.5f64..4.0,
    ) {
        let x = DMatrix::from_vec(6, 2, coords);
        let p = input_similarities(&x, rho).unwrap();
        let target = rho.ln();
        for i in 0..p.n() {
            let row = p.row(i);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9, "row {i} sums to {sum}");
            let entropy: f64 = row
                .iter()
                .filter(|&&w| w > 0.0)
                .map(|&w| -w * w.ln())
                .sum();
            prop_assert!(
                (entropy - target).abs() <= 1e-6,
                "row {i}: entropy {entropy} vs target {target}"
            );
        }
    }
}
