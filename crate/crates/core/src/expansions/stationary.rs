//! Families for stationary processes: Ornstein-Uhlenbeck (two constructions)
//! and the cosine frame of a stationary covariance with convex profile.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{check_count, check_positive, ExpansionFamily, FamilySpec, RateParams};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, Profile};
use crate::specialfn::{fourier_cosine_coefficient, QuadratureConfig};
use crate::terms::AnalyticTerm;

fn resolve_sigma(alpha: f64, sigma: Option<f64>) -> Result<f64> {
    let s = sigma.unwrap_or((2.0 * alpha).sqrt());
    check_positive("sigma", s)?;
    Ok(s)
}

/// `f_0 = sigma/sqrt(2 alpha) e^{-alpha t}` followed by the convolutions of
/// `sigma e^{-alpha (t - s)}` with `sqrt(2/T) cos(w_j s)`, `w_j = pi (j - 1/2)/T`;
/// `n` terms in total.
pub fn build_ou_conv(alpha: f64, sigma: Option<f64>, horizon: f64, n: usize) -> Result<ExpansionFamily> {
    check_positive("alpha", alpha)?;
    check_positive("horizon", horizon)?;
    check_count("n", n)?;
    let sigma = resolve_sigma(alpha, sigma)?;
    let mut terms = Vec::with_capacity(n);
    terms.push(AnalyticTerm::damped_mix(
        sigma / (2.0 * alpha).sqrt(),
        alpha,
        0.0,
        0.0,
        0.0,
        0.0,
        horizon,
    )?);
    let root = (2.0 / horizon).sqrt();
    for j in 1..n {
        let w = PI * (j as f64 - 0.5) / horizon;
        let c = sigma * root / (alpha * alpha + w * w);
        terms.push(AnalyticTerm::damped_mix(-alpha * c, alpha, alpha * c, w * c, w, 0.0, horizon)?);
    }
    ExpansionFamily::new(
        terms,
        Kernel::ornstein_uhlenbeck(alpha, Some(sigma), horizon)?,
        FamilySpec::OuConv { alpha, sigma: Some(sigma), horizon, n },
        Some(RateParams { theta: 1.0, gamma: 0.0 }),
        Vec::new(),
    )
}

/// `sigma/(sqrt(alpha) pi (j-1/2)) e^{alpha (T-t)} sin(pi (j-1/2) e^{-2 alpha (T-t)})`, `j = 1..n`.
pub fn build_ou_lamperti(
    alpha: f64,
    sigma: Option<f64>,
    horizon: f64,
    n: usize,
) -> Result<ExpansionFamily> {
    check_positive("alpha", alpha)?;
    check_positive("horizon", horizon)?;
    check_count("n", n)?;
    let sigma = resolve_sigma(alpha, sigma)?;
    let terms = (1..=n)
        .map(|j| {
            let b = PI * (j as f64 - 0.5);
            AnalyticTerm::lamperti_warp(sigma / (alpha.sqrt() * b), alpha, horizon, b)
        })
        .collect::<Result<Vec<_>>>()?;
    ExpansionFamily::new(
        terms,
        Kernel::ornstein_uhlenbeck(alpha, Some(sigma), horizon)?,
        FamilySpec::OuLamperti { alpha, sigma: Some(sigma), horizon, n },
        Some(RateParams { theta: 1.0, gamma: 0.0 }),
        Vec::new(),
    )
}

/// Raw cosine coefficients `beta_0..=beta_{n_coeffs}` of `profile` on `[0, T]`,
/// computed in parallel and returned in index order.
pub fn cosine_coefficients(
    profile: &Profile,
    horizon: f64,
    n_coeffs: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_positive("horizon", horizon)?;
    cfg.validate()?;
    (0..=n_coeffs)
        .into_par_iter()
        .map(|j| fourier_cosine_coefficient(|t| profile.value(t), horizon, j, cfg))
        .collect()
}

/// Clamps coefficients in `[-abs_tol, 0)` to zero; anything lower is an error.
fn admissible_coefficients(betas: Vec<f64>, abs_tol: f64, notes: &mut Vec<String>) -> Result<Vec<f64>> {
    let mut clamped = Vec::new();
    let mut out = Vec::with_capacity(betas.len());
    for (j, b) in betas.into_iter().enumerate() {
        if b >= 0.0 {
            out.push(b);
        } else if b >= -abs_tol {
            clamped.push(j);
            out.push(0.0);
        } else {
            return Err(Error::NegativeCoefficient { index: j, value: b });
        }
    }
    if !clamped.is_empty() {
        notes.push(format!(
            "{} coefficient(s) in [-{abs_tol:e}, 0) clamped to zero, first at j = {}",
            clamped.len(),
            clamped[0]
        ));
    }
    Ok(out)
}

/// `[sqrt(beta_0), sqrt(beta_1) sin(pi t/T), sqrt(beta_1) cos(pi t/T), ...]`.
fn cosine_frame_terms(betas: &[f64], horizon: f64) -> Result<Vec<AnalyticTerm>> {
    let mut terms = Vec::with_capacity(2 * betas.len() - 1);
    terms.push(AnalyticTerm::constant(betas[0].sqrt(), horizon)?);
    for (j, b) in betas.iter().enumerate().skip(1) {
        let w = PI * j as f64 / horizon;
        let a = b.sqrt();
        terms.push(AnalyticTerm::trig(0.0, a, w, horizon)?);
        terms.push(AnalyticTerm::trig(a, 0.0, w, horizon)?);
    }
    Ok(terms)
}

/// Cosine frame of the covariance `e^{-alpha |s-t|^rho}`: `2 n_coeffs + 1` terms.
///
/// Fails with [`Error::NegativeCoefficient`] when some `beta_j < -abs_tol`,
/// which happens for `rho > 1`.
pub fn build_fou_trig(
    rho: f64,
    alpha: f64,
    horizon: f64,
    n_coeffs: usize,
    cfg: &QuadratureConfig,
) -> Result<ExpansionFamily> {
    let kernel = Kernel::fractional_ou(rho, alpha, horizon)?;
    let profile = Profile::PowerExponential { alpha, rho };
    let mut notes = Vec::new();
    let betas = cosine_coefficients(&profile, horizon, n_coeffs, cfg)?;
    let betas = admissible_coefficients(betas, cfg.abs_tol, &mut notes)?;
    ExpansionFamily::new(
        cosine_frame_terms(&betas, horizon)?,
        kernel,
        FamilySpec::TrigFrameFou { rho, alpha, horizon, n_coeffs },
        Some(RateParams { theta: 0.5 * (1.0 + rho), gamma: 0.0 }),
        notes,
    )
}

/// Cosine frame of a stationary kernel whose profile is convex on `(0, T]`.
///
/// Convexity is only spot-checked; a violation is recorded in the notes.
pub fn build_convex_stationary_trig(
    kernel: &Kernel,
    n_coeffs: usize,
    cfg: &QuadratureConfig,
) -> Result<ExpansionFamily> {
    let kernel = kernel.clone().validated()?;
    let profile = kernel.stationary_profile().ok_or_else(|| {
        Error::invalid("cosine frame needs a one-dimensional stationary kernel with a profile")
    })?;
    let horizon = kernel.horizon();
    let mut notes = Vec::new();
    let violations = profile.convexity_violations(horizon);
    if !violations.is_empty() {
        notes.push(format!(
            "profile fails the discrete convexity check at {} sample(s), first at index {}",
            violations.len(),
            violations[0]
        ));
    }
    if profile.value(horizon) < 0.0 {
        notes.push("profile is negative at the horizon".to_string());
    }
    let betas = cosine_coefficients(&profile, horizon, n_coeffs, cfg)?;
    let betas = admissible_coefficients(betas, cfg.abs_tol, &mut notes)?;
    ExpansionFamily::new(
        cosine_frame_terms(&betas, horizon)?,
        kernel.clone(),
        FamilySpec::TrigFrameConvex { kernel, n_coeffs },
        None,
        notes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::integrate;
    use crate::terms::TermKind;

    fn amplitude(t: &AnalyticTerm) -> f64 {
        match t.kind() {
            TermKind::Const { a } => *a,
            TermKind::Trig { a_cos, a_sin, .. } => a_cos.hypot(*a_sin),
            k => panic!("unexpected kind {k:?}"),
        }
    }

    #[test]
    fn ou_conv_initial_values() {
        let f = build_ou_conv(0.7, Some(1.3), 2.0, 10).unwrap();
        assert!((f.terms()[0].evaluate(0.0) - 1.3 / 1.4f64.sqrt()).abs() < 1e-15);
        for t in &f.terms()[1..] {
            assert!(t.evaluate(0.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ou_conv_matches_numerical_convolution() {
        let (alpha, sigma, horizon) = (0.8, 1.1, 1.0);
        let f = build_ou_conv(alpha, Some(sigma), horizon, 5).unwrap();
        let j = 3usize;
        let w = PI * (j as f64 - 0.5) / horizon;
        let cfg = QuadratureConfig { abs_tol: 1e-14, rel_tol: 1e-13, ..Default::default() };
        for &t in &[0.2, 0.7] {
            let direct = integrate(
                |s| sigma * (-alpha * (t - s)).exp() * (2.0 / horizon).sqrt() * (w * s).cos(),
                0.0,
                t,
                &cfg,
            )
            .unwrap();
            assert!((f.terms()[j].evaluate(t) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn lamperti_is_time_changed_kl() {
        let (alpha, sigma, horizon) = (0.6, 1.4, 1.5);
        let f = build_ou_lamperti(alpha, Some(sigma), horizon, 8).unwrap();
        let stretched = (2.0 * alpha * horizon).exp();
        for (idx, term) in f.terms().iter().enumerate() {
            let w = PI * (idx as f64 + 0.5);
            let kl = |u: f64| (2.0 * stretched).sqrt() / w * (w * u / stretched).sin();
            for &t in &[0.0, 0.4, 1.1, 1.5] {
                let v = sigma / (2.0 * alpha).sqrt() * (-alpha * t).exp() * kl((2.0 * alpha * t).exp());
                assert!((term.evaluate(t) - v).abs() < 1e-12);
            }
            let end = sigma / (alpha.sqrt() * w);
            assert!((term.evaluate(horizon).abs() - end).abs() < 1e-12);
        }
    }

    #[test]
    fn lamperti_diagonal_reaches_stationary_variance() {
        let f = build_ou_lamperti(1.0, None, 1.0, 5000).unwrap();
        let d = f.partial_covariance(&[0.5], &[0.5], f.len());
        assert!((d - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn fou_unit_rho_matches_closed_form() {
        let cfg = QuadratureConfig::default();
        let f = build_fou_trig(1.0, 1.0, 1.0, 40, &cfg).unwrap();
        assert_eq!(f.len(), 81);
        let e = (-1.0f64).exp();
        assert!((amplitude(&f.terms()[0]).powi(2) - (1.0 - e)).abs() < 1e-10);
        for j in 1..=40usize {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let pj = PI * j as f64;
            let beta = 2.0 * (1.0 - e * sign) / (1.0 + pj * pj);
            assert!((amplitude(&f.terms()[2 * j]) - beta.sqrt()).abs() < 1e-9);
            assert!((amplitude(&f.terms()[2 * j - 1]) - beta.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn triangle_coefficients() {
        let cfg = QuadratureConfig::default();
        let k = Kernel::triangle(1.0, 1.0).unwrap();
        let f = build_convex_stationary_trig(&k, 6, &cfg).unwrap();
        assert!((amplitude(&f.terms()[0]).powi(2) - 0.5).abs() < 1e-12);
        for j in 1..=6usize {
            let odd = if j % 2 == 1 { 2.0 } else { 0.0 };
            let beta = 2.0 * odd / (PI * j as f64).powi(2);
            assert!((amplitude(&f.terms()[2 * j]).powi(2) - beta).abs() < 1e-12);
        }
        let half = Kernel::triangle(0.5, 1.0).unwrap();
        let g = build_convex_stationary_trig(&half, 2, &cfg).unwrap();
        assert!((amplitude(&g.terms()[0]).powi(2) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn convex_builder_agrees_with_fou_builder() {
        let cfg = QuadratureConfig::default();
        let k = Kernel::stationary_convex(Profile::PowerExponential { alpha: 1.0, rho: 1.0 }, 1.0).unwrap();
        let a = build_convex_stationary_trig(&k, 30, &cfg).unwrap();
        let b = build_fou_trig(1.0, 1.0, 1.0, 30, &cfg).unwrap();
        for (x, y) in a.terms().iter().zip(b.terms()) {
            assert!((amplitude(x) - amplitude(y)).abs() < 1e-10);
        }
    }

    #[test]
    fn nonconvex_rho_fails_loudly() {
        let cfg = QuadratureConfig::default();
        let r = build_fou_trig(1.5, 1.0, 1.0, 200, &cfg);
        assert!(matches!(r, Err(Error::NegativeCoefficient { .. })), "{r:?}");
    }

    #[test]
    fn small_negative_coefficients_are_clamped_with_a_note() {
        let mut notes = Vec::new();
        let out = admissible_coefficients(vec![1.0, -1e-14, 0.5], 1e-12, &mut notes).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.5]);
        assert_eq!(notes.len(), 1);
        assert!(admissible_coefficients(vec![1.0, -1e-9], 1e-12, &mut notes).is_err());
    }

    #[test]
    fn nonconvex_profile_is_noted_not_rejected() {
        let cfg = QuadratureConfig::default();
        let values = vec![1.0, 0.9, 0.5, 0.45, 0.4];
        let k = Kernel::stationary_convex(
            Profile::Tabulated { step: 0.25, max_step: 0.25, values },
            1.0,
        )
        .unwrap();
        match build_convex_stationary_trig(&k, 4, &cfg) {
            Ok(f) => assert!(!f.notes().is_empty()),
            Err(e) => assert!(matches!(e, Error::NegativeCoefficient { .. })),
        }
    }
}
