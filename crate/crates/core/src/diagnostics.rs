//! Numerical checks of the identities an admissible sequence must satisfy,
//! of spectral asymptotics, and of the sign pattern of cosine coefficients.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::expansions::{cosine_coefficients, ExpansionFamily, FamilySpec};
use crate::grid::Grid;
use crate::kernels::{gram_matrix, Kernel, Profile};
use crate::montecarlo::NormalStream;
use crate::specialfn::{integrate, QuadratureConfig};
use crate::terms::AnalyticTerm;

/// Every tolerance and size used by the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub reconstruction_tol: f64,
    pub parseval_tol: f64,
    pub parseval_vectors: usize,
    pub nystrom_points: usize,
    pub eigen_j_min: usize,
    pub eigen_j_max: usize,
    pub eigen_tol: f64,
    /// Eigenvalues below `-eigen_floor * lambda_1` count as negative.
    pub eigen_floor: f64,
    pub nonconvex_j_max: usize,
    pub negative_threshold: f64,
    pub decay_slack: f64,
    pub decay_min_terms: usize,
    pub hnorm_j_max: usize,
    pub hnorm_tol: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            reconstruction_tol: 2e-3,
            parseval_tol: 1e-3,
            parseval_vectors: 20,
            nystrom_points: 1024,
            eigen_j_min: 10,
            eigen_j_max: 40,
            eigen_tol: 0.10,
            eigen_floor: 1e-10,
            nonconvex_j_max: 400,
            negative_threshold: 1e-12,
            decay_slack: 0.1,
            decay_min_terms: 16,
            hnorm_j_max: 20,
            hnorm_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
    /// The identity or bound being tested.
    pub anchor: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, measured: f64, tolerance: f64, anchor: &str) -> Self {
        CheckResult {
            name: name.to_string(),
            status: if pass && measured.is_finite() { Status::Pass } else { Status::Fail },
            measured,
            tolerance,
            anchor: anchor.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Ordered list of checks; passes iff every check passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<CheckResult>,
    pub overall: Status,
}

impl DiagnosticsReport {
    pub fn new(checks: Vec<CheckResult>) -> Self {
        let overall = if checks.iter().all(CheckResult::passed) { Status::Pass } else { Status::Fail };
        DiagnosticsReport { checks, overall }
    }

    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }
}

/// `sum_{j<n} f_j(p_a) f_j(p_b)` over all pairs of grid points.
fn partial_gram(family: &ExpansionFamily, grid: &Grid, n_terms: usize) -> Result<DMatrix<f64>> {
    let f = family.term_matrix(grid, n_terms)?;
    Ok(f.transpose() * f)
}

/// Max over grid x grid of `|sum_{j<n} f_j(s) f_j(t) - C(s,t)|`.
pub fn check_covariance_reconstruction(
    family: &ExpansionFamily,
    grid: &Grid,
    n_terms: usize,
    tol: f64,
) -> Result<CheckResult> {
    let partial = partial_gram(family, grid, n_terms)?;
    let exact = gram_matrix(family.kernel(), grid)?;
    let measured = (partial - exact).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(CheckResult::new(
        "covariance_reconstruction",
        measured <= tol,
        measured,
        tol,
        "sum_j f_j(s) f_j(t) = C(s,t)",
    ))
}

/// Compares `sum_j (sum_i a_i f_j(t_i))^2` with `a' C a` for `count` random
/// vectors `a` drawn from the streams of `seed`; measured is the largest relative gap.
pub fn check_discrete_parseval(
    family: &ExpansionFamily,
    grid: &Grid,
    n_terms: usize,
    tol: f64,
    seed: u64,
    count: usize,
) -> Result<CheckResult> {
    if count == 0 {
        return Err(Error::invalid("parseval check needs at least one vector"));
    }
    let f = family.term_matrix(grid, n_terms)?;
    let gram = gram_matrix(family.kernel(), grid)?;
    let mut worst = 0.0f64;
    let mut a = vec![0.0; grid.len()];
    for v in 0..count {
        NormalStream::new(seed, v as u64).fill(&mut a);
        let av = DVector::from_column_slice(&a);
        let coeffs = &f * &av;
        let lhs = coeffs.norm_squared();
        let rhs = av.dot(&(&gram * &av));
        let gap = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { (lhs - rhs).abs() };
        worst = worst.max(gap);
    }
    Ok(CheckResult::new(
        "discrete_parseval",
        worst <= tol,
        worst,
        tol,
        "sum_j <u, f_j>^2 = <u, C u> for u in the span of point evaluations",
    ))
}

/// Midpoints `(i + 1/2) T/N`, `i < N`.
pub fn nystrom_grid(horizon: f64, n_points: usize) -> Result<Grid> {
    if n_points == 0 {
        return Err(Error::invalid("Nystrom grid needs at least one point"));
    }
    let h = horizon / n_points as f64;
    Grid::from_points((0..n_points).map(|i| (i as f64 + 0.5) * h).collect(), 1)
}

/// Eigenvalues of `(T/N) [C(t_a, t_b)]` on the midpoint grid, in decreasing order.
pub fn nystrom_eigenvalues(kernel: &Kernel, n_points: usize) -> Result<Vec<f64>> {
    if kernel.dim() != 1 {
        return Err(Error::invalid("Nystrom eigenvalues need a one-dimensional kernel"));
    }
    let horizon = kernel.horizon();
    let grid = nystrom_grid(horizon, n_points)?;
    let m = gram_matrix(kernel, &grid)? * (horizon / n_points as f64);
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence("symmetric eigensolver produced non-finite values".into()));
    }
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// `lambda_j ~ 2 T^{1+rho} alpha Gamma(1+rho) sin(pi rho/2) / (pi j)^{1+rho}`.
pub fn eigenvalue_asymptote(rho: f64, alpha: f64, horizon: f64, j: usize) -> f64 {
    2.0 * horizon.powf(1.0 + rho) * alpha * gamma(1.0 + rho) * (0.5 * PI * rho).sin()
        / (PI * j as f64).powf(1.0 + rho)
}

/// One row of the eigenvalue table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub j: usize,
    pub lambda: f64,
    pub asymptote: f64,
    pub ratio: f64,
}

fn fou_parameters(kernel: &Kernel) -> Result<(f64, f64, f64)> {
    match kernel {
        Kernel::FractionalOu { rho, alpha, horizon } => Ok((*rho, *alpha, *horizon)),
        _ => Err(Error::invalid("eigenvalue asymptotics need a fractional_ou kernel")),
    }
}

/// Nystrom eigenvalues `1..=count` next to their asymptote.
pub fn eigen_table(kernel: &Kernel, n_points: usize, count: usize) -> Result<Vec<EigenRow>> {
    let (rho, alpha, horizon) = fou_parameters(kernel)?;
    if count > n_points {
        return Err(Error::invalid("cannot tabulate more eigenvalues than grid points"));
    }
    let eig = nystrom_eigenvalues(kernel, n_points)?;
    Ok((1..=count)
        .map(|j| {
            let asymptote = eigenvalue_asymptote(rho, alpha, horizon, j);
            EigenRow { j, lambda: eig[j - 1], asymptote, ratio: eig[j - 1] / asymptote }
        })
        .collect())
}

/// Max over `j_min..=j_max` of `|lambda_j / asymptote_j - 1|`.
pub fn check_eigenvalue_asymptotics(
    kernel: &Kernel,
    n_points: usize,
    j_min: usize,
    j_max: usize,
    tol: f64,
) -> Result<CheckResult> {
    if j_min == 0 || j_min > j_max {
        return Err(Error::invalid("eigenvalue window must satisfy 1 <= j_min <= j_max"));
    }
    if n_points < 4 * j_max {
        return Err(Error::invalid(format!("Nystrom grid needs >= {} points", 4 * j_max)));
    }
    let table = eigen_table(kernel, n_points, j_max)?;
    let measured = table[j_min - 1..]
        .iter()
        .fold(0.0f64, |m, r| m.max((r.ratio - 1.0).abs()));
    Ok(CheckResult::new(
        "eigenvalue_asymptotics",
        measured <= tol,
        measured,
        tol,
        "lambda_j (pi j)^{1+rho} / (2 T^{1+rho} alpha Gamma(1+rho) sin(pi rho/2)) -> 1",
    ))
}

/// `min_j lambda_j / lambda_1` must stay above `-floor`.
pub fn check_nystrom_nonnegative(kernel: &Kernel, n_points: usize, floor: f64) -> Result<CheckResult> {
    let eig = nystrom_eigenvalues(kernel, n_points)?;
    let top = eig[0];
    let lowest = *eig.last().expect("non-empty") / top;
    Ok(CheckResult::new(
        "nystrom_nonnegative",
        top > 0.0 && lowest >= -floor,
        lowest,
        -floor,
        "covariance operator is positive semidefinite",
    ))
}

/// Two entries for a power exponent `rho in (1, 2)`: some `beta_j` with
/// `j <= j_max` is below `-threshold`, and on `[j_max/10, j_max]` the sign of
/// `beta_j` equals `(-1)^{j+1}` for a strict majority of `j`.
pub fn check_nonconvex_failure(
    rho: f64,
    alpha: f64,
    horizon: f64,
    j_max: usize,
    threshold: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<CheckResult>> {
    if j_max < 10 {
        return Err(Error::invalid("nonconvex check needs j_max >= 10"));
    }
    let profile = Profile::PowerExponential { alpha, rho };
    Kernel::fractional_ou(rho, alpha, horizon)?;
    let betas = cosine_coefficients(&profile, horizon, j_max, cfg)?;
    let min = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let lo = j_max.div_ceil(10);
    let window = &betas[lo..=j_max];
    let agree = window
        .iter()
        .enumerate()
        .filter(|(i, b)| {
            let j = lo + i;
            let expected = if j % 2 == 1 { 1.0 } else { -1.0 };
            **b != 0.0 && b.signum() == expected
        })
        .count();
    let fraction = agree as f64 / window.len() as f64;
    Ok(vec![
        CheckResult::new(
            "nonconvex_negative_coefficient",
            min < -threshold,
            min,
            -threshold,
            "some beta_j < 0 when rho > 1",
        ),
        CheckResult::new(
            "nonconvex_sign_alternation",
            fraction > 0.5,
            fraction,
            0.5,
            "sign(beta_j) = (-1)^{j+1} for large j",
        ),
    ])
}

/// Slope and intercept of `log b_j` against `log j` over the second half of the
/// positive entries of `bounds` (`j` is the 1-based position).
pub fn sup_decay_exponent(bounds: &[f64]) -> Result<f64> {
    let points: Vec<(f64, f64)> = bounds
        .iter()
        .enumerate()
        .skip(bounds.len() / 2)
        .filter(|(_, b)| **b > 0.0)
        .map(|(i, b)| (((i + 1) as f64).ln(), b.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::invalid("too few positive sup bounds to fit a decay exponent"));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Fitted decay exponent of `bounds` against the claimed `-theta`.
pub fn check_sup_decay_bounds(bounds: &[f64], theta: f64, slack: f64, min_terms: usize) -> Result<CheckResult> {
    if bounds.len() < min_terms.max(4) {
        return Err(Error::invalid(format!(
            "sup-norm decay needs >= {} terms, got {}",
            min_terms.max(4),
            bounds.len()
        )));
    }
    let slope = sup_decay_exponent(bounds)?;
    let limit = -theta + slack;
    Ok(CheckResult::new(
        "sup_norm_decay",
        slope <= limit,
        slope,
        limit,
        "sup |f_j| <= c j^{-theta} log(1+j)^gamma",
    ))
}

pub fn check_sup_norm_decay(family: &ExpansionFamily, slack: f64, min_terms: usize) -> Result<CheckResult> {
    let rate = family
        .rate_params()
        .ok_or_else(|| Error::invalid("family has no claimed decay rate"))?;
    check_sup_decay_bounds(&family.sup_bounds(), rate.theta, slack, min_terms)
}

/// `||h||^2 = (h(0)^2 + h(T)^2)/2 + (1/(2 alpha)) int_0^T (h'^2 + alpha^2 h^2)`,
/// the norm of the reproducing kernel space of `e^{-alpha |s-t|}` on `[0, T]`.
pub fn ou_h_norm_squared(term: &AnalyticTerm, alpha: f64, horizon: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if term.dim() != 1 {
        return Err(Error::invalid("H-norm needs a one-dimensional term"));
    }
    let h0 = term.evaluate(0.0);
    let ht = term.evaluate(horizon);
    let energy = integrate(
        |t| {
            let d = term.derivative(t).unwrap_or(f64::NAN);
            let v = term.evaluate(t);
            d * d + alpha * alpha * v * v
        },
        0.0,
        horizon,
        cfg,
    )?;
    Ok(0.5 * (h0 * h0 + ht * ht) + energy / (2.0 * alpha))
}

/// For the cosine frame at `rho = 1`: `||f_{2j-1}||^2 = (1 - e^{-alpha T} (-1)^j)/2`
/// for `j <= j_max`, each strictly below 1.
pub fn check_ou_h_norm(
    family: &ExpansionFamily,
    j_max: usize,
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<CheckResult> {
    let (alpha, horizon) = match family.spec() {
        FamilySpec::TrigFrameFou { rho, alpha, horizon, .. } if *rho == 1.0 => (*alpha, *horizon),
        _ => return Err(Error::invalid("H-norm check needs a cosine frame with rho = 1")),
    };
    if j_max == 0 || 2 * j_max > family.len() {
        return Err(Error::invalid(format!("H-norm check needs 1 <= j_max <= {}", family.len() / 2)));
    }
    let decay = (-alpha * horizon).exp();
    let mut worst = 0.0f64;
    let mut below_one = true;
    for j in 1..=j_max {
        let value = ou_h_norm_squared(&family.terms()[2 * j - 1], alpha, horizon, cfg)?;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        worst = worst.max((value - 0.5 * (1.0 - decay * sign)).abs());
        below_one &= value < 1.0;
    }
    Ok(CheckResult::new(
        "ou_h_norm",
        worst <= tol && below_one,
        worst,
        tol,
        "||f_{2j-1}||_H^2 = (1 - e^{-alpha T} (-1)^j)/2 < 1",
    ))
}
