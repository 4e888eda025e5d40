use std::sync::OnceLock;

use gaussframe::diagnostics::check_covariance_reconstruction;
use gaussframe::expansions::*;
use gaussframe::montecarlo::{sample_paths, SamplerConfig};
use gaussframe::specialfn::QuadratureConfig;
use gaussframe::{ExpansionFamily, Grid, Primitive};
use proptest::prelude::*;

/// Families with the Holder constants `(L, a)` of their process on `[0, 1]`.
fn families() -> &'static Vec<(ExpansionFamily, f64, f64)> {
    static CELL: OnceLock<Vec<(ExpansionFamily, f64, f64)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = QuadratureConfig::default();
        vec![
            (build_bm_kl(1.0, 300).unwrap(), 1.0, 0.5),
            (build_bm_split_frame(1.0, 150).unwrap(), 1.0, 0.5),
            (build_bm_paley_wiener(1.0, 300).unwrap(), 1.0, 0.5),
            (build_bm_wavelet(1.0, -3, 6, Primitive::Haar).unwrap(), 1.0, 0.5),
            (build_bridge_kl(1.0, 300).unwrap(), 1.0, 0.5),
            (build_fbm_dvz(0.3, 1.0, 150).unwrap(), 1.0, 0.3),
            (build_fbm_dvz(0.75, 1.0, 150).unwrap(), 1.0, 0.75),
            (build_ou_conv(1.5, None, 1.0, 300).unwrap(), 3f64.sqrt(), 0.5),
            (build_ou_lamperti(1.5, None, 1.0, 300).unwrap(), 3f64.sqrt(), 0.5),
            (build_fou_trig(1.0, 1.0, 1.0, 150, &cfg).unwrap(), 2f64.sqrt(), 0.5),
            (build_fou_trig(0.5, 1.0, 1.0, 150, &cfg).unwrap(), 2f64.sqrt(), 0.25),
        ]
    })
}

#[test]
fn sup_bounds_dominate_dense_grid_values() {
    let grid = Grid::uniform(1.0, 10001).unwrap();
    for (family, _, _) in families() {
        let bounds = family.sup_bounds();
        for (j, term) in family.terms().iter().enumerate().step_by(7) {
            let max = term.evaluate_on_grid(&grid).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max <= bounds[j] * (1.0 + 1e-12) + 1e-15, "{:?} term {j}", family.provenance());
        }
    }
}

#[test]
fn diagonal_partial_sums_stay_below_variance() {
    let grid = Grid::uniform(1.0, 33).unwrap();
    for (family, _, _) in families() {
        let m = family.term_matrix(&grid, family.len()).unwrap();
        for p in 0..grid.len() {
            let t = grid.point(p);
            let var = family.kernel().cov(&t, &t).unwrap();
            let mut acc = 0.0;
            for j in 0..family.len() {
                let next = acc + m[(j, p)] * m[(j, p)];
                assert!(next >= acc);
                acc = next;
            }
            assert!(acc <= var + 1e-9, "{:?} at t={}: {acc} > {var}", family.provenance(), t[0]);
        }
    }
}

#[test]
fn reconstruction_error_envelope_is_monotone() {
    let grid = Grid::uniform(1.0, 33).unwrap();
    for (family, _, _) in families() {
        let mut n = 8;
        let mut prev = check_covariance_reconstruction(family, &grid, n, 1.0).unwrap().measured;
        while 2 * n <= family.len() {
            n *= 2;
            let err = check_covariance_reconstruction(family, &grid, n, 1.0).unwrap().measured;
            assert!(err <= prev + 1e-12, "{:?} n={n}: {err} > {prev}", family.provenance());
            prev = err;
        }
    }
}

#[test]
fn sampling_is_deterministic() {
    let family = build_bm_kl(1.0, 200).unwrap();
    let cfg = SamplerConfig::new(42, 50, Grid::uniform(1.0, 17).unwrap()).unwrap();
    let a = sample_paths(&family, &cfg, 200).unwrap();
    let b = sample_paths(&family, &cfg, 200).unwrap();
    assert_eq!(a, b);
    let other = SamplerConfig::new(43, 50, Grid::uniform(1.0, 17).unwrap()).unwrap();
    assert_ne!(a, sample_paths(&family, &other, 200).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn terms_respect_holder_bound(k in 0usize..11, j in 0usize..300, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let (family, l, a) = &families()[k];
        let f = &family.terms()[j % family.len()];
        let lhs = (f.evaluate(s) - f.evaluate(t)).abs();
        prop_assert!(lhs <= l * (s - t).abs().powf(*a) + 1e-9);
    }

    #[test]
    fn ou_terms_scale_linearly_in_sigma(alpha in 0.1f64..5.0, sigma in 0.1f64..3.0, c in 0.1f64..4.0, t in 0.0f64..2.0) {
        let base = build_ou_conv(alpha, Some(sigma), 2.0, 20).unwrap();
        let scaled = build_ou_conv(alpha, Some(c * sigma), 2.0, 20).unwrap();
        for (f, g) in base.terms().iter().zip(scaled.terms()) {
            let (x, y) = (f.evaluate(t), g.evaluate(t));
            prop_assert!((y - c * x).abs() <= 1e-12 * (1.0 + (c * x).abs()));
        }
    }

    #[test]
    fn kl_partial_covariance_is_symmetric(s in 0.0f64..3.0, t in 0.0f64..3.0, n in 1usize..100) {
        let family = build_bm_kl(3.0, 100).unwrap();
        prop_assert_eq!(family.partial_covariance(&[s], &[t], n), family.partial_covariance(&[t], &[s], n));
    }
}
