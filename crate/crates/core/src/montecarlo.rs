//! Seeded sampling of truncated series and sup-norm remainder estimation.
//!
//! Replicate `r` draws its coefficients from ChaCha20 stream `r` keyed by the
//! seed, so every replicate is reproducible on its own. Paths are assembled in
//! fixed chunks of replicates with a dense matrix product, and reductions run
//! in replicate order, so results do not depend on the thread count.

use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;
use rand_core::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::expansions::ExpansionFamily;
use crate::grid::Grid;

/// Replicates per matrix product.
const CHUNK: usize = 32;

/// Seed, replicate count and evaluation grid of a sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    seed: u64,
    n_replicates: usize,
    grid: Grid,
}

impl SamplerConfig {
    pub fn new(seed: u64, n_replicates: usize, grid: Grid) -> Result<Self> {
        if n_replicates == 0 {
            return Err(Error::invalid("n_replicates must be >= 1"));
        }
        Ok(SamplerConfig { seed, n_replicates, grid })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_replicates(&self) -> usize {
        self.n_replicates
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Standard normal variates of one replicate, by inversion of the CDF.
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64, replicate: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(replicate);
        NormalStream { rng }
    }

    /// Uniform on the open interval `(0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (-53.0f64).exp2()
    }

    pub fn next_normal(&mut self) -> f64 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * self.next_uniform())
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.next_normal();
        }
    }
}

fn coefficient_block(seed: u64, first: usize, count: usize, n_terms: usize) -> DMatrix<f64> {
    let mut xi = DMatrix::zeros(count, n_terms);
    let mut row = vec![0.0; n_terms];
    for r in 0..count {
        NormalStream::new(seed, (first + r) as u64).fill(&mut row);
        for (j, v) in row.iter().enumerate() {
            xi[(r, j)] = *v;
        }
    }
    xi
}

fn chunk_bounds(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK)).map(|c| (c * CHUNK, CHUNK.min(n - c * CHUNK))).collect()
}

/// Paths `sum_{j < n_terms} xi_j f_j` on the grid: one row per replicate.
pub fn sample_paths(family: &ExpansionFamily, cfg: &SamplerConfig, n_terms: usize) -> Result<DMatrix<f64>> {
    if n_terms > family.len() {
        return Err(Error::invalid(format!(
            "n_terms = {n_terms} exceeds the family size {}",
            family.len()
        )));
    }
    let width = cfg.grid.len();
    let mut out = DMatrix::zeros(cfg.n_replicates, width);
    if n_terms == 0 {
        return Ok(out);
    }
    let f = family.term_matrix(&cfg.grid, n_terms)?;
    let blocks: Vec<DMatrix<f64>> = chunk_bounds(cfg.n_replicates)
        .into_par_iter()
        .map(|(first, count)| coefficient_block(cfg.seed, first, count, n_terms) * &f)
        .collect();
    for ((first, count), block) in chunk_bounds(cfg.n_replicates).into_iter().zip(blocks) {
        out.rows_mut(first, count).copy_from(&block);
    }
    Ok(out)
}

/// Least-squares fit of `log e_k - p log log n_k = c + slope log n_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub halfwidth: f64,
    pub intercept: f64,
    /// Power `p` of `log n` divided out before the fit.
    pub log_power: f64,
}

/// Monte Carlo estimates of `E sup_t |sum_{n_k <= j < size} xi_j f_j(t)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderCurve {
    pub truncations: Vec<usize>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub family_size: usize,
    pub n_replicates: usize,
    /// Set when `family_size < 4 max(n_k)`, where the finite tail may
    /// understate the infinite one.
    pub proxy_warning: bool,
    pub fit: Option<RateFit>,
}

/// Estimates the remainder curve with the same streams as [`sample_paths`].
pub fn estimate_remainder(
    family: &ExpansionFamily,
    cfg: &SamplerConfig,
    truncations: &[usize],
) -> Result<RemainderCurve> {
    let size = family.len();
    if truncations.is_empty() {
        return Err(Error::invalid("at least one truncation point is required"));
    }
    if truncations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("truncation points must be strictly increasing"));
    }
    let last = *truncations.last().expect("non-empty");
    if last > size {
        return Err(Error::invalid(format!("truncation {last} exceeds the family size {size}")));
    }
    let f = family.term_matrix(&cfg.grid, size)?;
    let width = cfg.grid.len();
    let k = truncations.len();

    // per chunk: sup norms of the tails, k values per replicate
    let sups: Vec<Vec<f64>> = chunk_bounds(cfg.n_replicates)
        .into_par_iter()
        .map(|(start, count)| {
            let xi = coefficient_block(cfg.seed, start, count, size);
            let mut acc = DMatrix::<f64>::zeros(count, width);
            let mut out = vec![0.0; count * k];
            let mut upper = size;
            for idx in (0..k).rev() {
                let lower = truncations[idx];
                if upper > lower {
                    let len = upper - lower;
                    acc.gemm(1.0, &xi.columns(lower, len), &f.rows(lower, len), 1.0);
                }
                upper = lower;
                for r in 0..count {
                    let m = acc.row(r).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    out[r * k + idx] = m;
                }
            }
            out
        })
        .collect();

    let n = cfg.n_replicates as f64;
    let mut sum = vec![0.0; k];
    for chunk in &sups {
        for (i, v) in chunk.iter().enumerate() {
            sum[i % k] += v;
        }
    }
    let estimates: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut sq = vec![0.0; k];
    for chunk in &sups {
        for (i, v) in chunk.iter().enumerate() {
            let d = v - estimates[i % k];
            sq[i % k] += d * d;
        }
    }
    let stderrs = sq
        .iter()
        .map(|s| if cfg.n_replicates > 1 { (s / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 })
        .collect();
    Ok(RemainderCurve {
        truncations: truncations.to_vec(),
        estimates,
        stderrs,
        family_size: size,
        n_replicates: cfg.n_replicates,
        proxy_warning: size < 4 * last,
        fit: None,
    })
}

/// Fits the decay exponent of a remainder curve after dividing out `(log n)^log_power`.
pub fn fit_rate(curve: &RemainderCurve, log_power: f64) -> Result<RateFit> {
    let n = &curve.truncations;
    if n.len() < 4 {
        return Err(Error::invalid("rate fit needs at least 4 truncation points"));
    }
    if n[0] < 2 {
        return Err(Error::invalid("rate fit needs truncation points >= 2"));
    }
    if (*n.last().expect("non-empty") as f64) < 4.0 * n[0] as f64 {
        return Err(Error::invalid("rate fit needs truncation points spanning >= 2 octaves"));
    }
    if curve.estimates.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("rate fit needs positive finite estimates"));
    }
    let xs: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let ys: Vec<f64> = curve
        .estimates
        .iter()
        .zip(&xs)
        .map(|(e, x)| e.ln() - log_power * x.ln())
        .collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let df = m - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::invalid(format!("t distribution: {e}")))?
        .inverse_cdf(0.975);
    Ok(RateFit { slope, halfwidth: t * se, intercept, log_power })
}

/// Sample mean and variance of pooled draws, with the acceptance bands
/// `|mean| <= 4/sqrt(N)` and `|var - 1| <= 6/sqrt(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub pass: bool,
}

/// Moment check of the first `per_replicate` draws of replicates `0..replicates`.
pub fn normal_moment_check(seed: u64, replicates: usize, per_replicate: usize) -> MomentCheck {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut buf = vec![0.0; per_replicate];
    for r in 0..replicates {
        NormalStream::new(seed, r as u64).fill(&mut buf);
        for x in &buf {
            sum += x;
            sumsq += x * x;
        }
    }
    let count = replicates * per_replicate;
    let n = count as f64;
    let mean = sum / n;
    let variance = (sumsq - n * mean * mean) / (n - 1.0);
    let pass = mean.abs() <= 4.0 / n.sqrt() && (variance - 1.0).abs() <= 6.0 / n.sqrt();
    MomentCheck { count, mean, variance, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansions::build_bm_kl;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = NormalStream::new(7, 3);
        let mut b = NormalStream::new(7, 3);
        let mut c = NormalStream::new(7, 4);
        let xa: Vec<f64> = (0..10).map(|_| a.next_normal()).collect();
        let xb: Vec<f64> = (0..10).map(|_| b.next_normal()).collect();
        let xc: Vec<f64> = (0..10).map(|_| c.next_normal()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn uniforms_stay_inside_the_open_interval() {
        let mut s = NormalStream::new(1, 0);
        for _ in 0..10_000 {
            let u = s.next_uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn zero_terms_give_zero_paths() {
        let f = build_bm_kl(1.0, 5).unwrap();
        let cfg = SamplerConfig::new(1, 3, Grid::uniform(1.0, 9).unwrap()).unwrap();
        let p = sample_paths(&f, &cfg, 0).unwrap();
        assert!(p.iter().all(|v| *v == 0.0));
        assert!(sample_paths(&f, &cfg, 6).is_err());
    }

    #[test]
    fn paths_match_direct_summation() {
        let f = build_bm_kl(1.0, 20).unwrap();
        let grid = Grid::uniform(1.0, 5).unwrap();
        let cfg = SamplerConfig::new(11, 40, grid.clone()).unwrap();
        let p = sample_paths(&f, &cfg, 20).unwrap();
        for r in [0usize, 31, 32, 39] {
            let mut s = NormalStream::new(11, r as u64);
            let xi: Vec<f64> = (0..20).map(|_| s.next_normal()).collect();
            for (i, &t) in grid.axis().iter().enumerate() {
                let direct: f64 = f.terms().iter().zip(&xi).map(|(term, x)| x * term.evaluate(t)).sum();
                assert!((p[(r, i)] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn full_truncation_has_zero_remainder() {
        let f = build_bm_kl(1.0, 16).unwrap();
        let cfg = SamplerConfig::new(5, 10, Grid::uniform(1.0, 17).unwrap()).unwrap();
        let c = estimate_remainder(&f, &cfg, &[4, 8, 16]).unwrap();
        assert_eq!(c.estimates[2], 0.0);
        assert!(c.proxy_warning);
        assert!(c.estimates[0] >= c.estimates[1]);
        assert!(estimate_remainder(&f, &cfg, &[8, 4]).is_err());
        assert!(estimate_remainder(&f, &cfg, &[17]).is_err());
    }

    #[test]
    fn remainder_matches_explicit_tail() {
        let f = build_bm_kl(1.0, 12).unwrap();
        let grid = Grid::uniform(1.0, 9).unwrap();
        let cfg = SamplerConfig::new(3, 5, grid.clone()).unwrap();
        let c = estimate_remainder(&f, &cfg, &[3, 7]).unwrap();
        for (k, &n0) in [3usize, 7].iter().enumerate() {
            let mut mean = 0.0;
            for r in 0..5u64 {
                let mut s = NormalStream::new(3, r);
                let xi: Vec<f64> = (0..12).map(|_| s.next_normal()).collect();
                let sup = grid
                    .axis()
                    .iter()
                    .map(|&t| (n0..12).map(|j| xi[j] * f.terms()[j].evaluate(t)).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                mean += sup / 5.0;
            }
            assert!((c.estimates[k] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_curve_fits_exactly() {
        let truncations: Vec<usize> = (5..=10).map(|p| 1usize << p).collect();
        let estimates = truncations
            .iter()
            .map(|&n| (n as f64).powf(-0.5) * (n as f64).ln().sqrt())
            .collect();
        let curve = RemainderCurve {
            truncations,
            estimates,
            stderrs: vec![0.0; 6],
            family_size: 4096,
            n_replicates: 1,
            proxy_warning: false,
            fit: None,
        };
        let fit = fit_rate(&curve, 0.5).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.halfwidth < 1e-10);
    }

    #[test]
    fn fit_needs_enough_points() {
        let curve = RemainderCurve {
            truncations: vec![8, 16, 32],
            estimates: vec![1.0, 0.5, 0.25],
            stderrs: vec![0.0; 3],
            family_size: 128,
            n_replicates: 1,
            proxy_warning: false,
            fit: None,
        };
        assert!(fit_rate(&curve, 0.0).is_err());
        let narrow = RemainderCurve {
            truncations: vec![8, 9, 10, 11],
            estimates: vec![1.0, 0.9, 0.8, 0.7],
            ..curve
        };
        assert!(fit_rate(&narrow, 0.0).is_err());
    }

    #[test]
    fn pooled_draws_pass_moment_check() {
        let m = normal_moment_check(2024, 100, 10_000);
        assert_eq!(m.count, 1_000_000);
        assert!(m.pass, "{m:?}");
    }
}
