//! Builders for the closed-form expansion families.
//!
//! A family is an ordered list of terms `f_j` together with the kernel of the
//! process it expands. Paired families are interleaved so that position
//! `2j - 1` holds the second-kind term of pair `j` and position `2j` the
//! first-kind term; families with a leading term `f_0` put it first.

mod brownian;
mod serial;
mod stationary;
mod tensor;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::Kernel;
use crate::specialfn::QuadratureConfig;
use crate::terms::{AnalyticTerm, Primitive};

pub use brownian::{
    build_bm_kl, build_bm_paley_wiener, build_bm_split_frame, build_bm_wavelet, build_bridge_kl,
    build_fbm_dvz, wavelet_shift_range,
};
pub use serial::TermRecord;
pub use stationary::{
    build_convex_stationary_trig, build_fou_trig, build_ou_conv, build_ou_lamperti,
    cosine_coefficients,
};
pub use tensor::build_tensor_sheet;

/// Default coarsest wavelet level.
pub const DEFAULT_LEVEL_MIN: i32 = -12;
/// Default finest wavelet level.
pub const DEFAULT_LEVEL_MAX: i32 = 12;

/// Which closed-form family a term list came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    KlBm,
    SplitFrameBm,
    PaleyWienerBm,
    WaveletBm,
    DvzFbm,
    KlBridge,
    OuConv,
    OuLamperti,
    TrigFrameFou,
    TrigFrameConvex,
    TensorSheet,
}

/// Decay exponents: `sup |f_j| <= c j^{-theta} log(1+j)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    pub theta: f64,
    pub gamma: f64,
}

fn default_level_min() -> i32 {
    DEFAULT_LEVEL_MIN
}

fn default_level_max() -> i32 {
    DEFAULT_LEVEL_MAX
}

/// Parameters of a family, as accepted from run specs and echoed into outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provenance", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    KlBm {
        horizon: f64,
        n: usize,
    },
    SplitFrameBm {
        horizon: f64,
        n_pairs: usize,
    },
    /// `n` counts all terms including `f_0`.
    PaleyWienerBm {
        horizon: f64,
        n: usize,
    },
    WaveletBm {
        horizon: f64,
        #[serde(default = "default_level_min")]
        level_min: i32,
        #[serde(default = "default_level_max")]
        level_max: i32,
        #[serde(default)]
        primitive: Primitive,
    },
    DvzFbm {
        hurst: f64,
        horizon: f64,
        n_pairs: usize,
    },
    KlBridge {
        horizon: f64,
        n: usize,
    },
    /// `n` counts all terms including `f_0`.
    OuConv {
        alpha: f64,
        #[serde(default)]
        sigma: Option<f64>,
        horizon: f64,
        n: usize,
    },
    OuLamperti {
        alpha: f64,
        #[serde(default)]
        sigma: Option<f64>,
        horizon: f64,
        n: usize,
    },
    TrigFrameFou {
        rho: f64,
        alpha: f64,
        horizon: f64,
        n_coeffs: usize,
    },
    TrigFrameConvex {
        kernel: Kernel,
        n_coeffs: usize,
    },
    TensorSheet {
        axes: Vec<FamilySpec>,
        max_terms: usize,
    },
}

impl FamilySpec {
    pub fn provenance(&self) -> Provenance {
        match self {
            FamilySpec::KlBm { .. } => Provenance::KlBm,
            FamilySpec::SplitFrameBm { .. } => Provenance::SplitFrameBm,
            FamilySpec::PaleyWienerBm { .. } => Provenance::PaleyWienerBm,
            FamilySpec::WaveletBm { .. } => Provenance::WaveletBm,
            FamilySpec::DvzFbm { .. } => Provenance::DvzFbm,
            FamilySpec::KlBridge { .. } => Provenance::KlBridge,
            FamilySpec::OuConv { .. } => Provenance::OuConv,
            FamilySpec::OuLamperti { .. } => Provenance::OuLamperti,
            FamilySpec::TrigFrameFou { .. } => Provenance::TrigFrameFou,
            FamilySpec::TrigFrameConvex { .. } => Provenance::TrigFrameConvex,
            FamilySpec::TensorSheet { .. } => Provenance::TensorSheet,
        }
    }

    /// Copy with every optional parameter made explicit.
    pub fn resolved(&self) -> FamilySpec {
        let sigma_of = |alpha: f64, sigma: Option<f64>| Some(sigma.unwrap_or((2.0 * alpha).sqrt()));
        match self.clone() {
            FamilySpec::OuConv { alpha, sigma, horizon, n } => {
                FamilySpec::OuConv { alpha, sigma: sigma_of(alpha, sigma), horizon, n }
            }
            FamilySpec::OuLamperti { alpha, sigma, horizon, n } => {
                FamilySpec::OuLamperti { alpha, sigma: sigma_of(alpha, sigma), horizon, n }
            }
            FamilySpec::TrigFrameConvex { kernel, n_coeffs } => FamilySpec::TrigFrameConvex {
                kernel: kernel.clone().validated().unwrap_or(kernel),
                n_coeffs,
            },
            FamilySpec::TensorSheet { axes, max_terms } => FamilySpec::TensorSheet {
                axes: axes.iter().map(FamilySpec::resolved).collect(),
                max_terms,
            },
            other => other,
        }
    }

    /// Builds the family; `quadrature` is used only by the cosine-frame families.
    pub fn build(&self, quadrature: &QuadratureConfig) -> Result<ExpansionFamily> {
        match self {
            FamilySpec::KlBm { horizon, n } => build_bm_kl(*horizon, *n),
            FamilySpec::SplitFrameBm { horizon, n_pairs } => build_bm_split_frame(*horizon, *n_pairs),
            FamilySpec::PaleyWienerBm { horizon, n } => build_bm_paley_wiener(*horizon, *n),
            FamilySpec::WaveletBm { horizon, level_min, level_max, primitive } => {
                build_bm_wavelet(*horizon, *level_min, *level_max, *primitive)
            }
            FamilySpec::DvzFbm { hurst, horizon, n_pairs } => build_fbm_dvz(*hurst, *horizon, *n_pairs),
            FamilySpec::KlBridge { horizon, n } => build_bridge_kl(*horizon, *n),
            FamilySpec::OuConv { alpha, sigma, horizon, n } => build_ou_conv(*alpha, *sigma, *horizon, *n),
            FamilySpec::OuLamperti { alpha, sigma, horizon, n } => {
                build_ou_lamperti(*alpha, *sigma, *horizon, *n)
            }
            FamilySpec::TrigFrameFou { rho, alpha, horizon, n_coeffs } => {
                build_fou_trig(*rho, *alpha, *horizon, *n_coeffs, quadrature)
            }
            FamilySpec::TrigFrameConvex { kernel, n_coeffs } => {
                build_convex_stationary_trig(kernel, *n_coeffs, quadrature)
            }
            FamilySpec::TensorSheet { axes, max_terms } => {
                let families = axes.iter().map(|a| a.build(quadrature)).collect::<Result<Vec<_>>>()?;
                build_tensor_sheet(&families, *max_terms)
            }
        }
    }
}

/// An ordered admissible sequence for the process with covariance `kernel`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionFamily {
    terms: Vec<AnalyticTerm>,
    kernel: Kernel,
    spec: FamilySpec,
    rate_params: Option<RateParams>,
    notes: Vec<String>,
}

impl ExpansionFamily {
    pub(crate) fn new(
        terms: Vec<AnalyticTerm>,
        kernel: Kernel,
        spec: FamilySpec,
        rate_params: Option<RateParams>,
        notes: Vec<String>,
    ) -> Result<Self> {
        let kernel = kernel.validated()?;
        let dim = kernel.dim();
        if let Some(bad) = terms.iter().find(|t| t.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(ExpansionFamily { terms, kernel, spec: spec.resolved(), rate_params, notes })
    }

    pub fn terms(&self) -> &[AnalyticTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn provenance(&self) -> Provenance {
        self.spec.provenance()
    }

    pub fn rate_params(&self) -> Option<RateParams> {
        self.rate_params
    }

    /// Warnings recorded during construction.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.kernel.horizon()
    }

    /// `sum_{j < n} f_j(s) f_j(t)`.
    pub fn partial_covariance(&self, s: &[f64], t: &[f64], n: usize) -> f64 {
        self.terms[..n.min(self.terms.len())]
            .iter()
            .map(|f| f.evaluate_at(s) * f.evaluate_at(t))
            .sum()
    }

    pub fn sup_bounds(&self) -> Vec<f64> {
        self.terms.iter().map(AnalyticTerm::sup_bound).collect()
    }

    /// Values of the first `n_terms` terms: row `j` holds `f_j` over the grid
    /// in flat grid order.
    pub fn term_matrix(&self, grid: &Grid, n_terms: usize) -> Result<DMatrix<f64>> {
        if grid.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: grid.dim() });
        }
        if n_terms > self.len() {
            return Err(Error::invalid(format!(
                "n_terms = {n_terms} exceeds the family size {}",
                self.len()
            )));
        }
        let rows = self.terms[..n_terms]
            .par_iter()
            .map(|t| t.evaluate_on_grid(grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(n_terms, grid.len(), |j, i| rows[j][i]))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_count(name: &str, n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be >= 1")))
    }
}
