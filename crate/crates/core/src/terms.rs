//! Closed-form expansion members.
//!
//! Every term is a small parameter record that evaluates exactly, carries a
//! precomputed upper bound on its sup-norm over `[0, T]`, and is immutable once
//! built. Parameters are validated at construction so evaluation never fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative slack applied to sup bounds obtained from exact candidate points.
const BOUND_SLACK: f64 = 1e-13;
/// Sample count used to tighten bounds of non-trigonometric terms.
const TIGHTEN_SAMPLES: usize = 2049;

/// Primitive `Psi(x) = int_{-inf}^x psi(u) du` of a compactly supported mother wavelet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    /// `psi = 1` on `[0, 1/2)`, `-1` on `[1/2, 1)`; `Psi` is the tent of height 1/2.
    #[default]
    Haar,
}

impl Primitive {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Primitive::Haar => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else if x <= 0.5 {
                    x
                } else {
                    1.0 - x
                }
            }
        }
    }

    /// The mother wavelet itself (right-continuous).
    pub fn wavelet(self, x: f64) -> f64 {
        match self {
            Primitive::Haar => {
                if (0.0..0.5).contains(&x) {
                    1.0
                } else if (0.5..1.0).contains(&x) {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Support of `psi` in the wavelet variable.
    pub fn support(self) -> (f64, f64) {
        match self {
            Primitive::Haar => (0.0, 1.0),
        }
    }

    /// Breakpoints of `Psi`, between which it is linear.
    fn breakpoints(self) -> &'static [f64] {
        match self {
            Primitive::Haar => &[0.0, 0.5, 1.0],
        }
    }
}

/// The analytic form of a term.
#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Const {
        a: f64,
    },
    /// `a t`
    Linear {
        a: f64,
    },
    /// `a_cos cos(wt) + a_sin sin(wt)`
    Trig {
        a_cos: f64,
        a_sin: f64,
        omega: f64,
    },
    /// `a0 + a_cos cos(wt) + a_sin sin(wt)`
    TrigAffine {
        a0: f64,
        a_cos: f64,
        a_sin: f64,
        omega: f64,
    },
    /// `a_exp e^{-alpha t} + a_cos cos(wt) + a_sin sin(wt) + a0`
    DampedMix {
        a_exp: f64,
        alpha: f64,
        a_cos: f64,
        a_sin: f64,
        omega: f64,
        a0: f64,
    },
    /// `amplitude 2^{-j/2} (Psi(2^j t - k) - Psi(-k))`
    WaveletPrimitive {
        level: i32,
        shift: i64,
        amplitude: f64,
        primitive: Primitive,
    },
    /// `a e^{alpha (T - t)} sin(b e^{-2 alpha (T - t)})`
    LampertiWarp {
        a: f64,
        alpha: f64,
        horizon: f64,
        b: f64,
    },
    /// Product of one-dimensional factors, one per axis.
    TensorProduct(Vec<AnalyticTerm>),
}

/// One expansion member `f_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticTerm {
    kind: TermKind,
    horizon: f64,
    sup_bound: f64,
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {v}")))
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("horizon must be positive and finite, got {horizon}")))
    }
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega.is_finite() && omega >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("frequency must be finite and >= 0, got {omega}")))
    }
}

fn check_rate(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("rate alpha must be finite and > 0, got {alpha}")))
    }
}

impl AnalyticTerm {
    pub fn constant(a: f64, horizon: f64) -> Result<Self> {
        check_finite("a", a)?;
        Self::finish(TermKind::Const { a }, horizon)
    }

    pub fn linear(a: f64, horizon: f64) -> Result<Self> {
        check_finite("a", a)?;
        Self::finish(TermKind::Linear { a }, horizon)
    }

    pub fn trig(a_cos: f64, a_sin: f64, omega: f64, horizon: f64) -> Result<Self> {
        check_finite("a_cos", a_cos)?;
        check_finite("a_sin", a_sin)?;
        check_frequency(omega)?;
        Self::finish(TermKind::Trig { a_cos, a_sin, omega }, horizon)
    }

    pub fn trig_affine(a0: f64, a_cos: f64, a_sin: f64, omega: f64, horizon: f64) -> Result<Self> {
        check_finite("a0", a0)?;
        check_finite("a_cos", a_cos)?;
        check_finite("a_sin", a_sin)?;
        check_frequency(omega)?;
        Self::finish(TermKind::TrigAffine { a0, a_cos, a_sin, omega }, horizon)
    }

    pub fn damped_mix(
        a_exp: f64,
        alpha: f64,
        a_cos: f64,
        a_sin: f64,
        omega: f64,
        a0: f64,
        horizon: f64,
    ) -> Result<Self> {
        check_finite("a_exp", a_exp)?;
        check_rate(alpha)?;
        check_finite("a_cos", a_cos)?;
        check_finite("a_sin", a_sin)?;
        check_frequency(omega)?;
        check_finite("a0", a0)?;
        Self::finish(TermKind::DampedMix { a_exp, alpha, a_cos, a_sin, omega, a0 }, horizon)
    }

    pub fn wavelet_primitive(
        level: i32,
        shift: i64,
        amplitude: f64,
        primitive: Primitive,
        horizon: f64,
    ) -> Result<Self> {
        check_finite("amplitude", amplitude)?;
        if !(-60..=60).contains(&level) {
            return Err(Error::invalid(format!("wavelet level {level} outside [-60, 60]")));
        }
        Self::finish(TermKind::WaveletPrimitive { level, shift, amplitude, primitive }, horizon)
    }

    pub fn lamperti_warp(a: f64, alpha: f64, horizon: f64, b: f64) -> Result<Self> {
        check_finite("a", a)?;
        check_rate(alpha)?;
        check_finite("b", b)?;
        check_horizon(horizon)?;
        if !(alpha * horizon).exp().is_finite() {
            return Err(Error::invalid("e^{alpha T} overflows"));
        }
        Self::finish(TermKind::LampertiWarp { a, alpha, horizon, b }, horizon)
    }

    pub fn tensor(axes: Vec<AnalyticTerm>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("tensor product needs at least one axis"));
        }
        if axes.iter().any(|t| matches!(t.kind, TermKind::TensorProduct(_))) {
            return Err(Error::invalid("tensor product axes must be one-dimensional"));
        }
        let horizon = axes.iter().map(|t| t.horizon).fold(0.0, f64::max);
        let sup_bound = axes.iter().fold(1.0, |acc, t| acc * t.sup_bound);
        Ok(AnalyticTerm { kind: TermKind::TensorProduct(axes), horizon, sup_bound })
    }

    fn finish(kind: TermKind, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let mut term = AnalyticTerm { kind, horizon, sup_bound: f64::INFINITY };
        term.sup_bound = term.compute_sup_bound();
        if !term.sup_bound.is_finite() {
            return Err(Error::invalid("term has no finite sup bound on [0, T]"));
        }
        Ok(term)
    }

    pub fn kind(&self) -> &TermKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Upper bound on `sup_{t in [0,T]^d} |f(t)|`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            TermKind::TensorProduct(axes) => axes.len(),
            _ => 1,
        }
    }

    /// Value at a one-dimensional time `t`. For tensor products every axis
    /// is evaluated at the same `t`; use [`AnalyticTerm::evaluate_at`] for general points.
    pub fn evaluate(&self, t: f64) -> f64 {
        match &self.kind {
            TermKind::Const { a } => *a,
            TermKind::Linear { a } => a * t,
            TermKind::Trig { a_cos, a_sin, omega } => {
                let x = omega * t;
                a_cos * x.cos() + a_sin * x.sin()
            }
            TermKind::TrigAffine { a0, a_cos, a_sin, omega } => {
                let x = omega * t;
                a0 + a_cos * x.cos() + a_sin * x.sin()
            }
            TermKind::DampedMix { a_exp, alpha, a_cos, a_sin, omega, a0 } => {
                let x = omega * t;
                a_exp * (-alpha * t).exp() + a_cos * x.cos() + a_sin * x.sin() + a0
            }
            TermKind::WaveletPrimitive { level, shift, amplitude, primitive } => {
                let scale = (*level as f64).exp2();
                let k = *shift as f64;
                amplitude
                    * (-0.5 * *level as f64).exp2()
                    * (primitive.value(scale * t - k) - primitive.value(-k))
            }
            TermKind::LampertiWarp { a, alpha, horizon, b } => {
                let lag = horizon - t;
                a * (alpha * lag).exp() * (b * (-2.0 * alpha * lag).exp()).sin()
            }
            TermKind::TensorProduct(axes) => axes.iter().map(|f| f.evaluate(t)).product(),
        }
    }

    /// Value at a point of `[0,T]^dim`; `point.len()` must equal [`AnalyticTerm::dim`].
    pub fn evaluate_at(&self, point: &[f64]) -> f64 {
        match &self.kind {
            TermKind::TensorProduct(axes) => {
                debug_assert_eq!(point.len(), axes.len());
                axes.iter().zip(point).map(|(f, &x)| f.evaluate(x)).product()
            }
            _ => {
                debug_assert_eq!(point.len(), 1);
                self.evaluate(point[0])
            }
        }
    }

    /// Values at every grid point, in the grid's flat order.
    pub fn evaluate_on_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        if grid.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: grid.dim() });
        }
        if grid.dim() == 1 {
            return Ok(grid.axis().iter().map(|&t| self.evaluate(t)).collect());
        }
        let mut p = vec![0.0; grid.dim()];
        Ok((0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut p);
                self.evaluate_at(&p)
            })
            .collect())
    }

    /// Time derivative of a one-dimensional term (one-sided at wavelet kinks).
    /// Returns `None` for tensor products.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        let d = match &self.kind {
            TermKind::Const { .. } => 0.0,
            TermKind::Linear { a } => *a,
            TermKind::Trig { a_cos, a_sin, omega }
            | TermKind::TrigAffine { a_cos, a_sin, omega, .. } => {
                let x = omega * t;
                omega * (a_sin * x.cos() - a_cos * x.sin())
            }
            TermKind::DampedMix { a_exp, alpha, a_cos, a_sin, omega, .. } => {
                let x = omega * t;
                -alpha * a_exp * (-alpha * t).exp() + omega * (a_sin * x.cos() - a_cos * x.sin())
            }
            TermKind::WaveletPrimitive { level, shift, amplitude, primitive } => {
                let scale = (*level as f64).exp2();
                amplitude * (0.5 * *level as f64).exp2() * primitive.wavelet(scale * t - *shift as f64)
            }
            TermKind::LampertiWarp { a, alpha, horizon, b } => {
                let lag = horizon - t;
                let growth = (alpha * lag).exp();
                let phase = b * (-2.0 * alpha * lag).exp();
                a * growth * (-alpha * phase.sin() + 2.0 * alpha * phase * phase.cos())
            }
            TermKind::TensorProduct(_) => return None,
        };
        Some(d)
    }

    fn compute_sup_bound(&self) -> f64 {
        let horizon = self.horizon;
        match &self.kind {
            TermKind::Const { a } => a.abs(),
            TermKind::Linear { a } => a.abs() * horizon,
            TermKind::Trig { a_cos, a_sin, omega } => {
                trig_sup(0.0, *a_cos, *a_sin, *omega, horizon) * (1.0 + BOUND_SLACK)
            }
            TermKind::TrigAffine { a0, a_cos, a_sin, omega } => {
                trig_sup(*a0, *a_cos, *a_sin, *omega, horizon) * (1.0 + BOUND_SLACK)
            }
            TermKind::DampedMix { a_exp, alpha, a_cos, a_sin, omega, a0 } => {
                let amp = a_cos.hypot(*a_sin);
                let crude = a_exp.abs() + amp + a0.abs();
                let lipschitz = a_exp.abs() * alpha + amp * omega;
                crude.min(self.sampled_bound(lipschitz))
            }
            TermKind::WaveletPrimitive { level, shift, primitive, .. } => {
                let scale = (*level as f64).exp2();
                let k = *shift as f64;
                let mut best = self.evaluate(0.0).abs().max(self.evaluate(horizon).abs());
                for &x in primitive.breakpoints() {
                    let t = (x + k) / scale;
                    if t > 0.0 && t < horizon {
                        best = best.max(self.evaluate(t).abs());
                    }
                }
                best * (1.0 + BOUND_SLACK)
            }
            TermKind::LampertiWarp { a, alpha, horizon, b } => {
                let growth = (alpha * horizon).exp();
                let crude = a.abs() * growth;
                let lipschitz = a.abs() * alpha * growth * (1.0 + 2.0 * b.abs());
                crude.min(self.sampled_bound(lipschitz))
            }
            TermKind::TensorProduct(axes) => axes.iter().map(|f| f.sup_bound).product(),
        }
    }

    /// `max |f(t_i)| + L h / 2` over a uniform sample with spacing `h`.
    fn sampled_bound(&self, lipschitz: f64) -> f64 {
        let n = TIGHTEN_SAMPLES;
        let h = self.horizon / (n - 1) as f64;
        let max = (0..n)
            .map(|i| self.evaluate(if i + 1 == n { self.horizon } else { i as f64 * h }).abs())
            .fold(0.0, f64::max);
        (max + 0.5 * lipschitz * h) * (1.0 + BOUND_SLACK)
    }
}

/// Exact `sup_{t in [0,T]} |a0 + a_cos cos(wt) + a_sin sin(wt)|`.
fn trig_sup(a0: f64, a_cos: f64, a_sin: f64, omega: f64, horizon: f64) -> f64 {
    let amp = a_cos.hypot(a_sin);
    let value = |t: f64| {
        let x = omega * t;
        (a0 + a_cos * x.cos() + a_sin * x.sin()).abs()
    };
    if omega == 0.0 || amp == 0.0 {
        return (a0 + a_cos).abs();
    }
    if omega * horizon >= 2.0 * std::f64::consts::PI {
        return a0.abs() + amp;
    }
    // critical points: omega t - phase = m pi
    let phase = a_sin.atan2(a_cos);
    let pi = std::f64::consts::PI;
    let mut best = value(0.0).max(value(horizon));
    let m_lo = (-phase / pi).ceil() as i64;
    let m_hi = ((omega * horizon - phase) / pi).floor() as i64;
    for m in m_lo..=m_hi {
        let t = (phase + m as f64 * pi) / omega;
        if t > 0.0 && t < horizon {
            best = best.max(value(t));
        }
    }
    best.min(a0.abs() + amp)
}
