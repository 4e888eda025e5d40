//! Bessel functions of the first kind for real order in `(-1, 1)` and their
//! positive zeros.
//!
//! Below [`SERIES_CROSSOVER`] the ascending power series is summed in
//! double-double arithmetic, so the cancellation between terms of size
//! `~e^x / x` does not reach the f64 result. Above it the Hankel asymptotic
//! expansion is summed until its terms stop decreasing; at `x = 25` the
//! smallest term is below `1e-20`.

use std::f64::consts::{FRAC_PI_2, PI};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Switch point between the power series and the Hankel expansion.
pub const SERIES_CROSSOVER: f64 = 25.0;
const MIN_SERIES_TERMS: usize = 60;
const MAX_SERIES_TERMS: usize = 400;
const MAX_NEWTON_ITERATIONS: usize = 50;

/// Order `nu` of `J_nu`, restricted to `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > -1.0 && nu < 1.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::invalid(format!("Bessel order must lie in (-1, 1), got {nu}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `J_nu(x)` for `x >= 0`. For negative orders `J_nu(0)` is `+inf`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(j_any(order.0, x))
}

/// `J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x)`, `x > 0`.
pub fn bessel_j_derivative(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("derivative needs finite x > 0, got {x}")));
    }
    let nu = order.0;
    Ok(nu / x * j_any(nu, x) - j_any(nu + 1.0, x))
}

/// Evaluation for `nu in (-1, 2)`; the upper range serves the derivative.
pub(crate) fn j_any(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if nu == 0.5 {
        return (2.0 / (PI * x)).sqrt() * x.sin();
    }
    if nu == -0.5 {
        return (2.0 / (PI * x)).sqrt() * x.cos();
    }
    if x < SERIES_CROSSOVER {
        power_series(nu, x)
    } else {
        hankel(nu, x)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::renorm(s.hi, s.lo + t.hi);
        Dd::renorm(r.hi, r.lo + t.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, o.hi);
        Dd::renorm(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(q2)).neg());
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2).add(Dd::new(q3))
    }
}

/// `(x/2)^nu / Gamma(nu+1) * sum_k (-x^2/4)^k / (k! (nu+1)_k)`.
pub(crate) fn power_series(nu: f64, x: f64) -> f64 {
    let q = Dd::two_prod(x, x).mul(Dd::new(0.25));
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    let peak = (0.5 * x) as usize + 1;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        let denom = Dd::two_sum(nu, kf).mul(Dd::new(kf));
        term = term.mul(q).div(denom).neg();
        sum = sum.add(term);
        if k >= MIN_SERIES_TERMS.max(peak) && term.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) {
            break;
        }
    }
    let prefactor = (0.5 * x).powf(nu) / gamma(nu + 1.0);
    prefactor * sum.hi + prefactor * sum.lo
}

/// Hankel asymptotic expansion `sqrt(2/(pi x)) (P cos chi - Q sin chi)`,
/// `chi = x - (nu/2 + 1/4) pi`, summed to its smallest term.
pub(crate) fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let eight_x = 8.0 * x;
    let (mut p, mut q) = (1.0, 0.0);
    let mut a = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (k as f64 * eight_x);
        if next.abs() >= prev || next == 0.0 {
            break;
        }
        prev = next.abs();
        a = next;
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-18 * p.abs() {
            break;
        }
    }
    // rotate by the constant phase instead of forming chi, so x stays exact
    let phase = (0.5 * nu + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// McMahon's large-zero expansion for the `k`-th positive zero of `J_nu`.
pub fn mcmahon_guess(nu: f64, k: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let e = 8.0 * beta;
    beta - (mu - 1.0) / e
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * e.powi(5))
}

/// First `count` positive zeros of `J_nu`, strictly increasing, each with
/// `|J_nu(z)| <= 1e-10`.
pub fn bessel_positive_zeros(order: BesselOrder, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("zero count must be >= 1"));
    }
    let nu = order.0;
    let mut zeros: Vec<f64> = Vec::with_capacity(count);
    for k in 1..=count {
        let prev = zeros.last().copied().unwrap_or(0.0);
        let guess = mcmahon_guess(nu, k).max(prev + 0.5);
        let z = match newton(nu, guess, prev) {
            Some(z) => z,
            None => bisect_next(nu, prev, guess)?,
        };
        let residual = j_any(nu, z).abs();
        if residual > 1e-10 {
            return Err(Error::Convergence(format!(
                "zero {k} of J_{nu}: residual {residual:e} at {z}"
            )));
        }
        zeros.push(z);
    }
    Ok(zeros)
}

fn derivative(nu: f64, x: f64) -> f64 {
    nu / x * j_any(nu, x) - j_any(nu + 1.0, x)
}

/// Newton from `guess`; accepted only if it stays within one unit of the
/// guess and lands past the previous zero.
fn newton(nu: f64, guess: f64, prev: f64) -> Option<f64> {
    let mut x = guess;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let f = j_any(nu, x);
        let df = derivative(nu, x);
        if df == 0.0 || !df.is_finite() {
            return None;
        }
        let step = f / df;
        x -= step;
        if !(x > prev + 0.5) || (x - guess).abs() > 1.0 {
            return None;
        }
        if step.abs() <= 4.0 * f64::EPSILON * x {
            return Some(x);
        }
    }
    None
}

/// Scans forward from `prev` for the next sign change, then bisects and polishes.
fn bisect_next(nu: f64, prev: f64, guess: f64) -> Result<f64> {
    let h = 0.05;
    let mut a = if prev == 0.0 { 1e-6 } else { prev + 0.5 };
    let mut fa = j_any(nu, a);
    let limit = guess.max(a) + FRAC_PI_2 + 2.0;
    while a < limit {
        let b = a + h;
        let fb = j_any(nu, b);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = j_any(nu, mid);
                if fm == 0.0 {
                    return Ok(mid);
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Err(Error::Convergence(format!(
        "no sign change of J_{nu} found in ({prev}, {limit})"
    )))
}
