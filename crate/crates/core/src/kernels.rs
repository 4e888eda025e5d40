//! Closed-form covariance functions used as ground truth.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative slack on the domain check `0 <= s <= T`.
const DOMAIN_SLACK: f64 = 1e-12;

/// Even profile `gamma` of a stationary covariance `C(s,t) = gamma(s - t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `e^{-alpha |t|^rho}`
    PowerExponential { alpha: f64, rho: f64 },
    /// `(1 - |t|/s0)^+`
    Triangle { s0: f64 },
    /// `gamma(k step) = values[k]`, linear in between.
    Tabulated { step: f64, max_step: f64, values: Vec<f64> },
}

impl Profile {
    pub fn value(&self, lag: f64) -> f64 {
        let x = lag.abs();
        match self {
            Profile::PowerExponential { alpha, rho } => {
                if *rho == 1.0 {
                    (-alpha * x).exp()
                } else {
                    (-alpha * x.powf(*rho)).exp()
                }
            }
            Profile::Triangle { s0 } => (1.0 - x / s0).max(0.0),
            Profile::Tabulated { step, values, .. } => {
                let pos = x / step;
                let i = pos.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().expect("validated non-empty");
                }
                let w = pos - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            Profile::PowerExponential { alpha, rho } => {
                positive("alpha", *alpha)?;
                if !(*rho > 0.0 && *rho < 2.0) {
                    return Err(Error::invalid(format!("rho must lie in (0, 2), got {rho}")));
                }
            }
            Profile::Triangle { s0 } => positive("s0", *s0)?,
            Profile::Tabulated { step, max_step, values } => {
                positive("step", *step)?;
                positive("max_step", *max_step)?;
                if step > max_step {
                    return Err(Error::invalid(format!(
                        "tabulation step {step} exceeds resolution bound {max_step}"
                    )));
                }
                if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("tabulation needs >= 2 finite values"));
                }
                if (values.len() - 1) as f64 * step < horizon * (1.0 - DOMAIN_SLACK) {
                    return Err(Error::invalid("tabulation does not cover [0, T]"));
                }
            }
        }
        Ok(())
    }

    /// Indices `k` (of a 257-point sample on `[0, T]`, or of the table) where the
    /// second difference is negative beyond rounding, i.e. discrete convexity fails.
    pub fn convexity_violations(&self, horizon: f64) -> Vec<usize> {
        let samples: Vec<f64> = match self {
            Profile::Tabulated { values, step, .. } => {
                let n = ((horizon / step).ceil() as usize + 1).min(values.len());
                values[..n].to_vec()
            }
            _ => {
                let n = 257;
                (0..n).map(|i| self.value(horizon * i as f64 / (n - 1) as f64)).collect()
            }
        };
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        samples
            .windows(3)
            .enumerate()
            .filter(|(_, w)| w[0] - 2.0 * w[1] + w[2] < -1e-12 * scale)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Covariance function of a centered Gaussian process on `[0, T]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// `s ∧ t`
    BrownianMotion { horizon: f64 },
    /// `s ∧ t - st/T`
    BrownianBridge { horizon: f64 },
    /// `(s^{2H} + t^{2H} - |s-t|^{2H}) / 2`
    FractionalBm { hurst: f64, horizon: f64 },
    /// `sigma^2/(2 alpha) e^{-alpha |s-t|}`; `sigma` defaults to `sqrt(2 alpha)`.
    OrnsteinUhlenbeck {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        horizon: f64,
    },
    /// `e^{-alpha |s-t|^rho}`, `rho in (0, 2)`
    FractionalOu { rho: f64, alpha: f64, horizon: f64 },
    /// `gamma(s - t)` for a user-supplied even profile.
    StationaryConvex { profile: Profile, horizon: f64 },
    /// `(1 - |s-t|/s0)^+`
    Triangle { s0: f64, horizon: f64 },
    /// Product of one-dimensional kernels, one per axis.
    Tensor { axes: Vec<Kernel> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Kernel {
    pub fn brownian_motion(horizon: f64) -> Result<Self> {
        Kernel::BrownianMotion { horizon }.validated()
    }

    pub fn brownian_bridge(horizon: f64) -> Result<Self> {
        Kernel::BrownianBridge { horizon }.validated()
    }

    pub fn fractional_bm(hurst: f64, horizon: f64) -> Result<Self> {
        Kernel::FractionalBm { hurst, horizon }.validated()
    }

    pub fn ornstein_uhlenbeck(alpha: f64, sigma: Option<f64>, horizon: f64) -> Result<Self> {
        Kernel::OrnsteinUhlenbeck { alpha, sigma, horizon }.validated()
    }

    pub fn fractional_ou(rho: f64, alpha: f64, horizon: f64) -> Result<Self> {
        Kernel::FractionalOu { rho, alpha, horizon }.validated()
    }

    pub fn stationary_convex(profile: Profile, horizon: f64) -> Result<Self> {
        Kernel::StationaryConvex { profile, horizon }.validated()
    }

    pub fn triangle(s0: f64, horizon: f64) -> Result<Self> {
        Kernel::Triangle { s0, horizon }.validated()
    }

    pub fn tensor(axes: Vec<Kernel>) -> Result<Self> {
        Kernel::Tensor { axes }.validated()
    }

    /// Checks parameters and materializes defaults.
    pub fn validated(self) -> Result<Self> {
        match &self {
            Kernel::BrownianMotion { horizon } | Kernel::BrownianBridge { horizon } => {
                positive("horizon", *horizon)?
            }
            Kernel::FractionalBm { hurst, horizon } => {
                positive("horizon", *horizon)?;
                if !(*hurst > 0.0 && *hurst < 1.0) {
                    return Err(Error::invalid(format!("hurst index must lie in (0, 1), got {hurst}")));
                }
            }
            Kernel::OrnsteinUhlenbeck { alpha, sigma, horizon } => {
                positive("alpha", *alpha)?;
                positive("horizon", *horizon)?;
                if let Some(s) = sigma {
                    positive("sigma", *s)?;
                }
            }
            Kernel::FractionalOu { rho, alpha, horizon } => {
                positive("alpha", *alpha)?;
                positive("horizon", *horizon)?;
                if !(*rho > 0.0 && *rho < 2.0) {
                    return Err(Error::invalid(format!("rho must lie in (0, 2), got {rho}")));
                }
            }
            Kernel::StationaryConvex { profile, horizon } => {
                positive("horizon", *horizon)?;
                profile.validate(*horizon)?;
            }
            Kernel::Triangle { s0, horizon } => {
                positive("s0", *s0)?;
                positive("horizon", *horizon)?;
            }
            Kernel::Tensor { axes } => {
                if axes.is_empty() {
                    return Err(Error::invalid("tensor kernel needs at least one axis"));
                }
                for k in axes {
                    if matches!(k, Kernel::Tensor { .. }) {
                        return Err(Error::invalid("tensor kernel axes must be one-dimensional"));
                    }
                    k.clone().validated()?;
                }
            }
        }
        Ok(match self {
            Kernel::OrnsteinUhlenbeck { alpha, sigma: None, horizon } => Kernel::OrnsteinUhlenbeck {
                alpha,
                sigma: Some((2.0 * alpha).sqrt()),
                horizon,
            },
            Kernel::Tensor { axes } => Kernel::Tensor {
                axes: axes.into_iter().map(Kernel::validated).collect::<Result<_>>()?,
            },
            other => other,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Tensor { axes } => axes.len(),
            _ => 1,
        }
    }

    /// Horizon of a one-dimensional kernel; the largest axis horizon for tensors.
    pub fn horizon(&self) -> f64 {
        match self {
            Kernel::BrownianMotion { horizon }
            | Kernel::BrownianBridge { horizon }
            | Kernel::FractionalBm { horizon, .. }
            | Kernel::OrnsteinUhlenbeck { horizon, .. }
            | Kernel::FractionalOu { horizon, .. }
            | Kernel::StationaryConvex { horizon, .. }
            | Kernel::Triangle { horizon, .. } => *horizon,
            Kernel::Tensor { axes } => axes.iter().map(Kernel::horizon).fold(0.0, f64::max),
        }
    }

    pub fn is_stationary(&self) -> bool {
        match self {
            Kernel::OrnsteinUhlenbeck { .. }
            | Kernel::FractionalOu { .. }
            | Kernel::StationaryConvex { .. }
            | Kernel::Triangle { .. } => true,
            Kernel::Tensor { axes } => axes.iter().all(Kernel::is_stationary),
            _ => false,
        }
    }

    /// Profile `gamma` with `C(s,t) = gamma(s-t)`, for one-dimensional stationary kernels.
    pub fn stationary_profile(&self) -> Option<Profile> {
        match self {
            Kernel::FractionalOu { rho, alpha, .. } => {
                Some(Profile::PowerExponential { alpha: *alpha, rho: *rho })
            }
            Kernel::StationaryConvex { profile, .. } => Some(profile.clone()),
            Kernel::Triangle { s0, .. } => Some(Profile::Triangle { s0: *s0 }),
            _ => None,
        }
    }

    /// Whether the profile is convex on `(0, inf)` by construction.
    pub fn is_convex(&self) -> bool {
        match self {
            Kernel::OrnsteinUhlenbeck { .. } | Kernel::Triangle { .. } => true,
            Kernel::FractionalOu { rho, .. } => *rho <= 1.0,
            Kernel::StationaryConvex { profile, horizon } => {
                profile.convexity_violations(*horizon).is_empty()
            }
            _ => false,
        }
    }

    /// `sup_t C(t,t)` over the domain.
    pub fn max_variance(&self) -> f64 {
        match self {
            Kernel::BrownianMotion { horizon } => *horizon,
            Kernel::BrownianBridge { horizon } => 0.25 * horizon,
            Kernel::FractionalBm { hurst, horizon } => horizon.powf(2.0 * hurst),
            Kernel::OrnsteinUhlenbeck { alpha, sigma, .. } => {
                let s = sigma.unwrap_or((2.0 * alpha).sqrt());
                s * s / (2.0 * alpha)
            }
            Kernel::FractionalOu { .. } | Kernel::Triangle { .. } => 1.0,
            Kernel::StationaryConvex { profile, .. } => profile.value(0.0),
            Kernel::Tensor { axes } => axes.iter().map(Kernel::max_variance).product(),
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let horizon = self.horizon();
        if x >= -DOMAIN_SLACK * horizon && x <= horizon * (1.0 + DOMAIN_SLACK) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { value: x, horizon })
        }
    }

    /// Covariance of two scalar times (one-dimensional kernels).
    pub fn cov1(&self, s: f64, t: f64) -> Result<f64> {
        if let Kernel::Tensor { axes } = self {
            return Err(Error::DimensionMismatch { expected: axes.len(), found: 1 });
        }
        self.check_domain(s)?;
        self.check_domain(t)?;
        Ok(self.cov_unchecked(s, t))
    }

    /// Covariance of two points of `[0,T]^dim`.
    pub fn cov(&self, s: &[f64], t: &[f64]) -> Result<f64> {
        let dim = self.dim();
        if s.len() != dim || t.len() != dim {
            let found = if s.len() != dim { s.len() } else { t.len() };
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
        match self {
            Kernel::Tensor { axes } => {
                let mut prod = 1.0;
                for ((k, &a), &b) in axes.iter().zip(s).zip(t) {
                    prod *= k.cov1(a, b)?;
                }
                Ok(prod)
            }
            _ => self.cov1(s[0], t[0]),
        }
    }

    fn cov_unchecked(&self, s: f64, t: f64) -> f64 {
        let lag = (s - t).abs();
        match self {
            Kernel::BrownianMotion { .. } => s.min(t),
            Kernel::BrownianBridge { horizon } => s.min(t) - s * t / horizon,
            Kernel::FractionalBm { hurst, .. } => {
                let p = 2.0 * hurst;
                0.5 * (s.powf(p) + t.powf(p) - lag.powf(p))
            }
            Kernel::OrnsteinUhlenbeck { alpha, sigma, .. } => {
                let sg = sigma.unwrap_or((2.0 * alpha).sqrt());
                sg * sg / (2.0 * alpha) * (-alpha * lag).exp()
            }
            Kernel::FractionalOu { rho, alpha, .. } => {
                if *rho == 1.0 {
                    (-alpha * lag).exp()
                } else {
                    (-alpha * lag.powf(*rho)).exp()
                }
            }
            Kernel::StationaryConvex { profile, .. } => profile.value(lag),
            Kernel::Triangle { s0, .. } => (1.0 - lag / s0).max(0.0),
            Kernel::Tensor { .. } => unreachable!("tensor kernels go through cov"),
        }
    }
}

/// Matrix of `C(p_i, p_j)` over all grid points (flat grid order).
pub fn gram_matrix(kernel: &Kernel, grid: &Grid) -> Result<DMatrix<f64>> {
    if grid.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: grid.dim() });
    }
    let n = grid.len();
    let points: Vec<Vec<f64>> = (0..n).map(|i| grid.point(i)).collect();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = kernel.cov(&points[i], &points[j])?;
            g[(i, j)] = c;
            g[(j, i)] = c;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_minimum() {
        let k = Kernel::brownian_motion(1.0).unwrap();
        assert_eq!(k.cov1(0.3, 0.7).unwrap(), 0.3);
    }

    #[test]
    fn fractional_ou_unit_lag() {
        let k = Kernel::fractional_ou(1.0, 1.0, 1.0).unwrap();
        let v = k.cov1(0.0, 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-16);
        assert!((v - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn bridge_pinned_at_horizon() {
        let k = Kernel::brownian_bridge(1.0).unwrap();
        assert_eq!(k.cov1(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_domain_rejected() {
        let k = Kernel::brownian_motion(1.0).unwrap();
        assert!(matches!(k.cov1(1.5, 0.2), Err(Error::OutOfDomain { .. })));
        assert!(k.cov1(-0.1, 0.2).is_err());
    }

    #[test]
    fn single_point_gram() {
        let grid = Grid::from_points(vec![0.0], 1).unwrap();
        let k = Kernel::fractional_ou(0.5, 2.0, 1.0).unwrap();
        let g = gram_matrix(&k, &grid).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert_eq!(g[(0, 0)], 1.0);
    }

    #[test]
    fn brownian_gram_three_points() {
        let grid = Grid::from_points(vec![0.0, 0.5, 1.0], 1).unwrap();
        let g = gram_matrix(&Kernel::brownian_motion(1.0).unwrap(), &grid).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g, expected);
    }

    #[test]
    fn tensor_gram_is_product_of_minima() {
        let bm = Kernel::brownian_motion(1.0).unwrap();
        let k = Kernel::tensor(vec![bm.clone(), bm]).unwrap();
        let grid = Grid::from_points(vec![0.5, 1.0], 2).unwrap();
        let g = gram_matrix(&k, &grid).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let (p, q) = (grid.point(i), grid.point(j));
                assert_eq!(g[(i, j)], p[0].min(q[0]) * p[1].min(q[1]));
            }
        }
    }

    #[test]
    fn ou_default_sigma_gives_unit_variance() {
        let k = Kernel::ornstein_uhlenbeck(1.7, None, 1.0).unwrap();
        match &k {
            Kernel::OrnsteinUhlenbeck { sigma, .. } => assert_eq!(*sigma, Some((3.4f64).sqrt())),
            _ => unreachable!(),
        }
        assert!((k.cov1(0.4, 0.4).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fou_rho_one_matches_ou() {
        let alpha = 1.3;
        let a = Kernel::fractional_ou(1.0, alpha, 2.0).unwrap();
        let b = Kernel::ornstein_uhlenbeck(alpha, Some((2.0 * alpha).sqrt()), 2.0).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let (s, t) = (0.1 * i as f64, 0.1 * j as f64);
                assert!((a.cov1(s, t).unwrap() - b.cov1(s, t).unwrap()).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn tabulation_checks() {
        let values: Vec<f64> = (0..=100).map(|i| (-(i as f64) * 0.01).exp()).collect();
        let p = Profile::Tabulated { step: 0.01, max_step: 0.02, values: values.clone() };
        let k = Kernel::stationary_convex(p.clone(), 1.0).unwrap();
        assert!(k.is_convex());
        assert!((k.cov1(0.0, 0.005).unwrap() - 0.5 * (1.0 + (-0.01f64).exp())).abs() < 1e-15);
        let coarse = Profile::Tabulated { step: 0.01, max_step: 0.005, values };
        assert!(Kernel::stationary_convex(coarse, 1.0).is_err());
        let short = Profile::Tabulated { step: 0.01, max_step: 0.02, values: vec![1.0, 0.5] };
        assert!(Kernel::stationary_convex(short, 1.0).is_err());
        let bumpy: Vec<f64> = (0..=100).map(|i| 1.0 - 0.5 * (i as f64 * 0.01).powi(2)).collect();
        let p = Profile::Tabulated { step: 0.01, max_step: 0.01, values: bumpy };
        assert!(!p.convexity_violations(1.0).is_empty());
    }

    #[test]
    fn json_round_trip_materializes_sigma() {
        let k: Kernel =
            serde_json::from_str(r#"{"kind":"ornstein_uhlenbeck","alpha":2.0,"horizon":1.0}"#).unwrap();
        let k = k.validated().unwrap();
        let text = serde_json::to_string(&k).unwrap();
        assert!(text.contains("\"sigma\":2.0"));
        let back: Kernel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, k);
    }
}
