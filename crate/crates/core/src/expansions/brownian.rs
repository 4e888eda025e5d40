//! Families for Brownian motion, the Brownian bridge and fractional Brownian motion.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::gamma::gamma;

use super::{check_count, check_positive, ExpansionFamily, FamilySpec, RateParams};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::specialfn::{bessel_j, bessel_positive_zeros, BesselOrder};
use crate::terms::{AnalyticTerm, Primitive};

/// Largest number of wavelet terms a window may produce.
const MAX_WAVELET_TERMS: usize = 1 << 24;

const UNIT_RATE: RateParams = RateParams { theta: 1.0, gamma: 0.0 };

/// `sqrt(2T)/(pi (j-1/2)) sin(pi (j-1/2) t/T)`, `j = 1..n`.
pub fn build_bm_kl(horizon: f64, n: usize) -> Result<ExpansionFamily> {
    check_positive("horizon", horizon)?;
    check_count("n", n)?;
    let terms = (1..=n)
        .map(|j| {
            let w = PI * (j as f64 - 0.5);
            AnalyticTerm::trig(0.0, (2.0 * horizon).sqrt() / w, w / horizon, horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    ExpansionFamily::new(
        terms,
        Kernel::brownian_motion(horizon)?,
        FamilySpec::KlBm { horizon, n },
        Some(UNIT_RATE),
        Vec::new(),
    )
}

/// Pairs `sqrt(T)/(pi j) (1 - cos(pi j t/T))` and `sqrt(T)/(pi (j-1/2)) sin(pi (j-1/2) t/T)`.
pub fn build_bm_split_frame(horizon: f64, n_pairs: usize) -> Result<ExpansionFamily> {
    check_positive("horizon", horizon)?;
    check_count("n_pairs", n_pairs)?;
    let root = horizon.sqrt();
    let mut terms = Vec::with_capacity(2 * n_pairs);
    for j in 1..=n_pairs {
        let w2 = PI * j as f64;
        let b = root / w2;
        terms.push(AnalyticTerm::trig_affine(b, -b, 0.0, w2 / horizon, horizon)?);
        let w1 = PI * (j as f64 - 0.5);
        terms.push(AnalyticTerm::trig(0.0, root / w1, w1 / horizon, horizon)?);
    }
    ExpansionFamily::new(
        terms,
        Kernel::brownian_motion(horizon)?,
        FamilySpec::SplitFrameBm { horizon, n_pairs },
        Some(UNIT_RATE),
        Vec::new(),
    )
}

/// `f_0 = t/sqrt(T)`, then `f_{2j-1} = c_j (1 - cos(2 pi j t/T))`, `f_{2j} = c_j sin(2 pi j t/T)`
/// with `c_j = sqrt(T)/(sqrt(2) pi j)`; `n` terms in index order.
pub fn build_bm_paley_wiener(horizon: f64, n: usize) -> Result<ExpansionFamily> {
    check_positive("horizon", horizon)?;
    check_count("n", n)?;
    let mut terms = Vec::with_capacity(n);
    terms.push(AnalyticTerm::linear(1.0 / horizon.sqrt(), horizon)?);
    for i in 1..n {
        let j = i.div_ceil(2);
        let w = 2.0 * PI * j as f64;
        let c = horizon.sqrt() / (SQRT_2 * PI * j as f64);
        let term = if i % 2 == 1 {
            AnalyticTerm::trig_affine(c, -c, 0.0, w / horizon, horizon)?
        } else {
            AnalyticTerm::trig(0.0, c, w / horizon, horizon)?
        };
        terms.push(term);
    }
    ExpansionFamily::new(
        terms,
        Kernel::brownian_motion(horizon)?,
        FamilySpec::PaleyWienerBm { horizon, n },
        Some(UNIT_RATE),
        Vec::new(),
    )
}

/// Shifts `k` at `level` whose wavelet support meets the open interval `(0, T)`.
pub fn wavelet_shift_range(level: i32, horizon: f64, primitive: Primitive) -> (i64, i64) {
    let (a, b) = primitive.support();
    let scaled = horizon * (level as f64).exp2();
    let k_min = (-b).floor() as i64 + 1;
    let k_max = (scaled - a).ceil() as i64 - 1;
    (k_min, k_max)
}

/// `2^{-j/2} (Psi(2^j t - k) - Psi(-k))` for `level_min <= j <= level_max` and
/// all shifts whose support meets `[0, T]`, ordered by level then shift.
pub fn build_bm_wavelet(
    horizon: f64,
    level_min: i32,
    level_max: i32,
    primitive: Primitive,
) -> Result<ExpansionFamily> {
    check_positive("horizon", horizon)?;
    if level_min > level_max {
        return Err(Error::invalid(format!(
            "empty wavelet window [{level_min}, {level_max}]"
        )));
    }
    if level_min < -60 || level_max > 60 {
        return Err(Error::invalid("wavelet levels must lie in [-60, 60]"));
    }
    let mut count = 0usize;
    for level in level_min..=level_max {
        let (lo, hi) = wavelet_shift_range(level, horizon, primitive);
        count = count.saturating_add((hi - lo + 1).max(0) as usize);
    }
    if count > MAX_WAVELET_TERMS {
        return Err(Error::invalid(format!("wavelet window yields {count} terms")));
    }
    let mut terms = Vec::with_capacity(count);
    for level in level_min..=level_max {
        let (lo, hi) = wavelet_shift_range(level, horizon, primitive);
        for k in lo..=hi {
            terms.push(AnalyticTerm::wavelet_primitive(level, k, 1.0, primitive, horizon)?);
        }
    }
    if terms.is_empty() {
        return Err(Error::invalid("wavelet window contains no terms"));
    }
    ExpansionFamily::new(
        terms,
        Kernel::brownian_motion(horizon)?,
        FamilySpec::WaveletBm { horizon, level_min, level_max, primitive },
        None,
        Vec::new(),
    )
}

/// `sqrt(2T)/(pi j) sin(pi j t/T)`, `j = 1..n`.
pub fn build_bridge_kl(horizon: f64, n: usize) -> Result<ExpansionFamily> {
    check_positive("horizon", horizon)?;
    check_count("n", n)?;
    let terms = (1..=n)
        .map(|j| {
            let w = PI * j as f64;
            AnalyticTerm::trig(0.0, (2.0 * horizon).sqrt() / w, w / horizon, horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    ExpansionFamily::new(
        terms,
        Kernel::brownian_bridge(horizon)?,
        FamilySpec::KlBridge { horizon, n },
        Some(UNIT_RATE),
        Vec::new(),
    )
}

/// Bessel-zero expansion of fractional Brownian motion with index `hurst`.
///
/// With `x_j` the zeros of `J_{-H}` and `y_j` those of `J_{1-H}`:
/// `f^1_j = A sin(x_j t/T)`, `A = T^H c sqrt 2 / (|J_{1-H}(x_j)| x_j^{H+1})` and
/// `f^2_j = B (1 - cos(y_j t/T))`, `B = T^H c sqrt 2 / (|J_{-H}(y_j)| y_j^{H+1})`,
/// where `c^2 = Gamma(1+2H) sin(pi H)/pi`.
pub fn build_fbm_dvz(hurst: f64, horizon: f64, n_pairs: usize) -> Result<ExpansionFamily> {
    check_positive("horizon", horizon)?;
    check_count("n_pairs", n_pairs)?;
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::invalid(format!("hurst index must lie in (0, 1), got {hurst}")));
    }
    let minus = BesselOrder::new(-hurst)?;
    let plus = BesselOrder::new(1.0 - hurst)?;
    let (x, y) = rayon::join(
        || bessel_positive_zeros(minus, n_pairs),
        || bessel_positive_zeros(plus, n_pairs),
    );
    let (x, y) = (x?, y?);
    let c = (gamma(1.0 + 2.0 * hurst) * (PI * hurst).sin() / PI).sqrt();
    let scale = horizon.powf(hurst) * c * SQRT_2;
    let mut terms = Vec::with_capacity(2 * n_pairs);
    for j in 0..n_pairs {
        let b = scale / (bessel_j(minus, y[j])?.abs() * y[j].powf(hurst + 1.0));
        terms.push(AnalyticTerm::trig_affine(b, -b, 0.0, y[j] / horizon, horizon)?);
        let a = scale / (bessel_j(plus, x[j])?.abs() * x[j].powf(hurst + 1.0));
        terms.push(AnalyticTerm::trig(0.0, a, x[j] / horizon, horizon)?);
    }
    ExpansionFamily::new(
        terms,
        Kernel::fractional_bm(hurst, horizon)?,
        FamilySpec::DvzFbm { hurst, horizon, n_pairs },
        Some(RateParams { theta: hurst + 0.5, gamma: 0.0 }),
        Vec::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::TermKind;

    fn reconstruction(f: &ExpansionFamily, s: f64, t: f64) -> f64 {
        (f.partial_covariance(&[s], &[t], f.len()) - f.kernel().cov1(s, t).unwrap()).abs()
    }

    #[test]
    fn kl_first_amplitude() {
        let f = build_bm_kl(1.0, 1).unwrap();
        assert!((f.terms()[0].evaluate(1.0) - 0.9003163).abs() < 1e-7);
        assert_eq!(f.terms()[0].evaluate(0.0), 0.0);
    }

    #[test]
    fn kl_reconstructs_min() {
        let f = build_bm_kl(1.0, 2000).unwrap();
        assert!(reconstruction(&f, 0.3, 0.7) <= 2e-4);
    }

    #[test]
    fn split_frame_terms_are_scaled_kl_terms() {
        let kl = build_bm_kl(2.0, 5).unwrap();
        let sf = build_bm_split_frame(2.0, 5).unwrap();
        for j in 0..5 {
            for &t in &[0.1, 0.77, 1.3, 2.0] {
                let a = sf.terms()[2 * j + 1].evaluate(t);
                let b = kl.terms()[j].evaluate(t) / SQRT_2;
                assert!((a - b).abs() < 1e-15);
            }
            let expected = 2.0f64.sqrt() / (PI * (j as f64 + 0.5));
            assert!((sf.terms()[2 * j + 1].sup_bound() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn split_frame_diagonal_at_horizon() {
        let f = build_bm_split_frame(1.0, 2000).unwrap();
        assert!(reconstruction(&f, 1.0, 1.0) <= 2e-4);
    }

    #[test]
    fn paley_wiener_endpoint_values() {
        let f = build_bm_paley_wiener(3.0, 9).unwrap();
        assert_eq!(f.len(), 9);
        assert!((f.terms()[0].evaluate(3.0) - 3.0f64.sqrt()).abs() < 1e-15);
        for term in &f.terms()[1..] {
            assert!(term.evaluate(3.0).abs() < 1e-14);
        }
        assert!(matches!(f.terms()[1].kind(), TermKind::TrigAffine { .. }));
        assert!(matches!(f.terms()[2].kind(), TermKind::Trig { .. }));
    }

    #[test]
    fn paley_wiener_reconstruction() {
        let f = build_bm_paley_wiener(1.0, 4001).unwrap();
        assert!(reconstruction(&f, 0.25, 0.9) <= 5e-4);
    }

    #[test]
    fn haar_wavelet_tent_value() {
        let f = build_bm_wavelet(1.0, 0, 0, Primitive::Haar).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.terms()[0].evaluate(0.5), 0.5);
    }

    #[test]
    fn wavelet_shifts_cover_the_interval_only() {
        assert_eq!(wavelet_shift_range(0, 1.0, Primitive::Haar), (0, 0));
        assert_eq!(wavelet_shift_range(3, 1.0, Primitive::Haar), (0, 7));
        assert_eq!(wavelet_shift_range(-5, 1.0, Primitive::Haar), (0, 0));
        assert_eq!(wavelet_shift_range(2, 1.1, Primitive::Haar), (0, 4));
        assert!(build_bm_wavelet(1.0, 3, 2, Primitive::Haar).is_err());
    }

    #[test]
    fn wavelet_coarse_window_misses_a_known_amount() {
        // levels below the window contribute sum_{j < jmin} 2^j s t = 2^{jmin} s t
        let (s, t) = (0.25f64, 0.75f64);
        let f = build_bm_wavelet(1.0, -4, 10, Primitive::Haar).unwrap();
        let gap = s.min(t) - f.partial_covariance(&[s], &[t], f.len());
        assert!((gap - s * t / 16.0).abs() < 1e-12, "gap={gap}");
        let wide = build_bm_wavelet(1.0, -40, 10, Primitive::Haar).unwrap();
        assert!(reconstruction(&wide, s, t) < 1e-11);
    }

    #[test]
    fn dvz_half_matches_split_frame() {
        let d = build_fbm_dvz(0.5, 1.0, 50).unwrap();
        let s = build_bm_split_frame(1.0, 50).unwrap();
        for (a, b) in d.terms().iter().zip(s.terms()) {
            match (a.kind(), b.kind()) {
                (
                    TermKind::Trig { a_sin: x, omega: wx, .. },
                    TermKind::Trig { a_sin: y, omega: wy, .. },
                ) => {
                    assert!((x - y).abs() < 1e-12 && (wx - wy).abs() < 1e-10);
                }
                (
                    TermKind::TrigAffine { a0: x, omega: wx, .. },
                    TermKind::TrigAffine { a0: y, omega: wy, .. },
                ) => {
                    assert!((x - y).abs() < 1e-12 && (wx - wy).abs() < 1e-10);
                }
                other => panic!("kind mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn dvz_vanishes_at_zero_and_reconstructs() {
        let f = build_fbm_dvz(0.75, 1.0, 4000).unwrap();
        assert!(f.terms().iter().all(|t| t.evaluate(0.0).abs() < 1e-15));
        assert!(reconstruction(&f, 0.5, 0.5) <= 1e-2);
    }

    #[test]
    fn bridge_pinned_and_reconstructs() {
        let f = build_bridge_kl(1.0, 2000).unwrap();
        for t in f.terms().iter().take(50) {
            assert!(t.evaluate(0.0).abs() < 1e-15 && t.evaluate(1.0).abs() < 1e-12);
        }
        assert!(reconstruction(&f, 0.3, 0.6) <= 2e-4);
        let b = f.sup_bounds();
        assert!(b.windows(2).all(|w| w[1] < w[0]));
        assert!((b[2] - 2.0f64.sqrt() / (3.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn builders_reject_bad_parameters() {
        assert!(build_bm_kl(0.0, 3).is_err());
        assert!(build_bm_kl(1.0, 0).is_err());
        assert!(build_fbm_dvz(1.0, 1.0, 3).is_err());
        assert!(build_bridge_kl(f64::NAN, 3).is_err());
    }
}
