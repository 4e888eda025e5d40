//! Adaptive Gauss-Kronrod quadrature and cosine Fourier coefficients.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and panel budget for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-10, max_panels: 1 << 20 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite())
            || !(self.rel_tol > 0.0 && self.rel_tol.is_finite())
        {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_panels == 0 {
            return Err(Error::invalid("max_panels must be >= 1"));
        }
        Ok(())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|K15 - G7|` on `[a, b]`.
pub fn gauss_kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Global adaptive refinement: bisects the worst panel (with the Kronrod rule
/// on `f`) until the summed error estimate is below `abs_tol + rel_tol |I|`.
fn refine<F: Fn(f64) -> f64>(f: &F, panels: Vec<Panel>, cfg: &QuadratureConfig) -> Result<f64> {
    let mut count = panels.len();
    let mut heap = BinaryHeap::from(panels);
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.err).sum();
    if !total.is_finite() || !err.is_finite() {
        return Err(Error::Convergence("integrand produced a non-finite value".into()));
    }
    while err > cfg.abs_tol + cfg.rel_tol * total.abs() {
        if count >= cfg.max_panels {
            return Err(Error::Convergence(format!(
                "error estimate {err:e} above tolerance after {count} panels"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Convergence(format!(
                "panel [{}, {}] cannot be split further",
                worst.a, worst.b
            )));
        }
        let (v1, e1) = gauss_kronrod15(f, worst.a, mid);
        let (v2, e2) = gauss_kronrod15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
        count += 1;
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Convergence("integrand produced a non-finite value".into()));
        }
        // the running sums drift; resync periodically
        if count.is_multiple_of(4096) {
            err = heap.iter().map(|p| p.err).sum();
        }
    }
    let mut done = heap.into_vec();
    done.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(neumaier_sum(done.iter().map(|p| p.value)))
}

fn neumaier_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, cfg).map(|v| -v);
    }
    let (value, err) = gauss_kronrod15(&f, a, b);
    refine(&f, vec![Panel { a, b, value, err }], cfg)
}

/// Weights of the 5-node (equispaced, endpoints included) and 3-node product
/// rules for `int_0^1 g(u) sin(pi u) du`.
struct ProductWeights {
    five: [f64; 5],
    three: [f64; 3],
}

fn product_weights() -> &'static ProductWeights {
    static WEIGHTS: OnceLock<ProductWeights> = OnceLock::new();
    WEIGHTS.get_or_init(|| {
        // moments S_m = int_0^1 u^m sin(pi u) du via
        // S_m = 1/pi + (m/pi) C_{m-1},  C_m = -(m/pi) S_{m-1},  S_0 = 2/pi, C_0 = 0
        let mut c = [0.0f64; 5];
        let mut s = [0.0f64; 5];
        s[0] = 2.0 / PI;
        for m in 1..5 {
            let mf = m as f64;
            c[m] = -mf / PI * s[m - 1];
            s[m] = 1.0 / PI + mf / PI * c[m - 1];
        }
        let nodes: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let vander = Matrix5::from_fn(|m, i| nodes[i].powi(m as i32));
        let five = vander
            .lu()
            .solve(&Vector5::from_column_slice(&s))
            .expect("Vandermonde matrix on distinct nodes is invertible");
        // nodes 0, 1/2, 1
        let w2 = 2.0 * s[2] - s[1];
        let w1 = 4.0 * (s[1] - s[2]);
        let w0 = s[0] - w1 - w2;
        ProductWeights { five: [five[0], five[1], five[2], five[3], five[4]], three: [w0, w1, w2] }
    })
}

/// `beta_0 = (1/T) int_0^T gamma`, `beta_j = (2/T) int_0^T gamma(t) cos(pi j t/T) dt`.
///
/// For `j >= 1` the interval is cut at every zero of the cosine, giving `j + 1`
/// panels on each of which the cosine keeps one sign. Interior panels start
/// from a product rule that integrates the cosine hump exactly against a
/// quartic interpolant of `gamma`; the two end panels start from Gauss-Kronrod,
/// so an endpoint singularity of `gamma` gets refined. Then the worst panels
/// are bisected until the error budget is met.
pub fn fourier_cosine_coefficient<G: Fn(f64) -> f64>(
    gamma: G,
    horizon: f64,
    j: usize,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    if j == 0 {
        let scaled = |t: f64| gamma(t) / horizon;
        return integrate(scaled, 0.0, horizon, cfg);
    }
    if j + 1 > cfg.max_panels {
        return Err(Error::Convergence(format!(
            "coefficient {j} needs more than max_panels = {} panels",
            cfg.max_panels
        )));
    }
    let scale = 2.0 / horizon;
    let freq = PI * j as f64 / horizon;
    let integrand = |t: f64| scale * gamma(t) * (freq * t).cos();
    let width = horizon / j as f64;
    let w = product_weights();
    let mut panels = Vec::with_capacity(j + 1);

    let first_end = 0.5 * width;
    let (value, err) = gauss_kronrod15(&integrand, 0.0, first_end);
    panels.push(Panel { a: 0.0, b: first_end, value, err });

    let mut left_value = gamma(first_end);
    for k in 1..j {
        let a = (k as f64 - 0.5) * width;
        let b = (k as f64 + 0.5) * width;
        let g = [
            left_value,
            gamma(a + 0.25 * (b - a)),
            gamma(a + 0.5 * (b - a)),
            gamma(a + 0.75 * (b - a)),
            gamma(b),
        ];
        left_value = g[4];
        // cos(pi j t / T) = (-1)^k sin(pi u) on this panel
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let f5: f64 = w.five.iter().zip(&g).map(|(wi, gi)| wi * gi).sum();
        let f3 = w.three[0] * g[0] + w.three[1] * g[2] + w.three[2] * g[4];
        let factor = scale * sign * (b - a);
        panels.push(Panel { a, b, value: factor * f5, err: (factor * (f5 - f3)).abs() });
    }

    let last_start = (j as f64 - 0.5) * width;
    let (value, err) = gauss_kronrod15(&integrand, last_start, horizon);
    panels.push(Panel { a: last_start, b: horizon, value, err });

    refine(&integrand, panels, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubics_are_exact() {
        let cfg = QuadratureConfig::default();
        let p = |x: f64| 3.0 * x * x * x - 2.0 * x * x + 0.5 * x - 7.0;
        let exact = |x: f64| 0.75 * x.powi(4) - 2.0 / 3.0 * x.powi(3) + 0.25 * x * x - 7.0 * x;
        let (a, b) = (-1.3, 2.1);
        let v = integrate(p, a, b, &cfg).unwrap();
        assert!((v - (exact(b) - exact(a))).abs() < 1e-13);
    }

    #[test]
    fn product_weights_integrate_quartics_against_sine() {
        let w = product_weights();
        let nodes: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let moment = |m: i32| -> f64 { w.five.iter().zip(&nodes).map(|(wi, u)| wi * u.powi(m)).sum() };
        // int_0^1 sin = 2/pi, int_0^1 u sin = 1/pi, int_0^1 u^2 sin = 1/pi - 4/pi^3
        assert!((moment(0) - 2.0 / PI).abs() < 1e-15);
        assert!((moment(1) - 1.0 / PI).abs() < 1e-15);
        assert!((moment(2) - (1.0 / PI - 4.0 / PI.powi(3))).abs() < 1e-15);
        for i in 0..5 {
            assert!((w.five[i] - w.five[4 - i]).abs() < 1e-15);
        }
        assert!((w.three[0] - w.three[2]).abs() < 1e-15);
    }

    #[test]
    fn exponential_coefficients_match_integration_by_parts() {
        let cfg = QuadratureConfig::default();
        let g = |t: f64| (-t).exp();
        let b0 = fourier_cosine_coefficient(g, 1.0, 0, &cfg).unwrap();
        assert!((b0 - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((b0 - 0.6321206).abs() < 1e-7);
        let b1 = fourier_cosine_coefficient(g, 1.0, 1, &cfg).unwrap();
        let closed = 2.0 * (1.0 + (-1.0f64).exp()) / (1.0 + PI * PI);
        assert!((b1 - closed).abs() < 1e-12);
        assert!((b1 - 0.251_688_909_862_138_6).abs() < 1e-12);
    }

    #[test]
    fn triangle_even_coefficient_vanishes() {
        let cfg = QuadratureConfig::default();
        let g = |t: f64| (1.0 - t.abs()).max(0.0);
        let b2 = fourier_cosine_coefficient(g, 1.0, 2, &cfg).unwrap();
        assert!(b2.abs() < 1e-12);
    }

    #[test]
    fn singular_endpoint_converges() {
        let cfg = QuadratureConfig::default();
        let v = integrate(|t: f64| t.powf(0.25), 0.0, 1.0, &cfg).unwrap();
        assert!((v - 0.8).abs() < 1e-10);
    }

    #[test]
    fn panel_budget_is_enforced() {
        let cfg = QuadratureConfig { max_panels: 3, ..Default::default() };
        let r = integrate(|t: f64| t.powf(0.1), 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::Convergence(_))));
        assert!(fourier_cosine_coefficient(|t| t, 1.0, 10, &cfg).is_err());
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let cfg = QuadratureConfig::default();
        assert!(integrate(|_| f64::NAN, 0.0, 1.0, &cfg).is_err());
    }
}
