//! JSON form of a family. Real parameters are written as hexadecimal floats so
//! that reading a document back reproduces every term bit for bit.

use serde::{Deserialize, Serialize};

use super::{ExpansionFamily, FamilySpec, Provenance, RateParams};
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::kernels::Kernel;
use crate::terms::{AnalyticTerm, Primitive, TermKind};

/// Identifies family documents.
const FORMAT: &str = "gaussframe-family";

/// Serialized form of one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermRecord {
    Const { a: String },
    Linear { a: String },
    Trig { a_cos: String, a_sin: String, omega: String },
    TrigAffine { a0: String, a_cos: String, a_sin: String, omega: String },
    DampedMix { a_exp: String, alpha: String, a_cos: String, a_sin: String, omega: String, a0: String },
    WaveletPrimitive { level: i32, shift: i64, amplitude: String, primitive: Primitive },
    LampertiWarp { a: String, alpha: String, horizon: String, b: String },
    TensorProduct { axes: Vec<TermRecord> },
}

fn h(x: f64) -> String {
    hexfloat::format(x)
}

fn p(s: &str) -> Result<f64> {
    hexfloat::parse(s)
}

impl TermRecord {
    pub fn from_term(term: &AnalyticTerm) -> TermRecord {
        match term.kind() {
            TermKind::Const { a } => TermRecord::Const { a: h(*a) },
            TermKind::Linear { a } => TermRecord::Linear { a: h(*a) },
            TermKind::Trig { a_cos, a_sin, omega } => {
                TermRecord::Trig { a_cos: h(*a_cos), a_sin: h(*a_sin), omega: h(*omega) }
            }
            TermKind::TrigAffine { a0, a_cos, a_sin, omega } => TermRecord::TrigAffine {
                a0: h(*a0),
                a_cos: h(*a_cos),
                a_sin: h(*a_sin),
                omega: h(*omega),
            },
            TermKind::DampedMix { a_exp, alpha, a_cos, a_sin, omega, a0 } => TermRecord::DampedMix {
                a_exp: h(*a_exp),
                alpha: h(*alpha),
                a_cos: h(*a_cos),
                a_sin: h(*a_sin),
                omega: h(*omega),
                a0: h(*a0),
            },
            TermKind::WaveletPrimitive { level, shift, amplitude, primitive } => {
                TermRecord::WaveletPrimitive {
                    level: *level,
                    shift: *shift,
                    amplitude: h(*amplitude),
                    primitive: *primitive,
                }
            }
            TermKind::LampertiWarp { a, alpha, horizon, b } => TermRecord::LampertiWarp {
                a: h(*a),
                alpha: h(*alpha),
                horizon: h(*horizon),
                b: h(*b),
            },
            TermKind::TensorProduct(axes) => {
                TermRecord::TensorProduct { axes: axes.iter().map(TermRecord::from_term).collect() }
            }
        }
    }

    /// Rebuilds the term through the validating constructors.
    pub fn to_term(&self, horizon: f64) -> Result<AnalyticTerm> {
        match self {
            TermRecord::Const { a } => AnalyticTerm::constant(p(a)?, horizon),
            TermRecord::Linear { a } => AnalyticTerm::linear(p(a)?, horizon),
            TermRecord::Trig { a_cos, a_sin, omega } => {
                AnalyticTerm::trig(p(a_cos)?, p(a_sin)?, p(omega)?, horizon)
            }
            TermRecord::TrigAffine { a0, a_cos, a_sin, omega } => {
                AnalyticTerm::trig_affine(p(a0)?, p(a_cos)?, p(a_sin)?, p(omega)?, horizon)
            }
            TermRecord::DampedMix { a_exp, alpha, a_cos, a_sin, omega, a0 } => AnalyticTerm::damped_mix(
                p(a_exp)?,
                p(alpha)?,
                p(a_cos)?,
                p(a_sin)?,
                p(omega)?,
                p(a0)?,
                horizon,
            ),
            TermRecord::WaveletPrimitive { level, shift, amplitude, primitive } => {
                AnalyticTerm::wavelet_primitive(*level, *shift, p(amplitude)?, *primitive, horizon)
            }
            TermRecord::LampertiWarp { a, alpha, horizon: own, b } => {
                AnalyticTerm::lamperti_warp(p(a)?, p(alpha)?, p(own)?, p(b)?)
            }
            TermRecord::TensorProduct { .. } => {
                Err(Error::Parse("tensor product needs per-axis horizons".into()))
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDocument {
    format: String,
    version: String,
    provenance: Provenance,
    spec: FamilySpec,
    kernel: Kernel,
    rate_params: Option<RateParams>,
    notes: Vec<String>,
    terms: Vec<TermRecord>,
}

impl ExpansionFamily {
    /// JSON document with the resolved spec, kernel and every term.
    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = FamilyDocument {
            format: FORMAT.to_string(),
            version: crate::VERSION.to_string(),
            provenance: self.provenance(),
            spec: self.spec().clone(),
            kernel: self.kernel().clone(),
            rate_params: self.rate_params(),
            notes: self.notes().to_vec(),
            terms: self.terms().iter().map(TermRecord::from_term).collect(),
        };
        serde_json::to_value(doc).expect("family document serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("family document serializes")
    }

    pub fn from_json(text: &str) -> Result<ExpansionFamily> {
        let doc: FamilyDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("family document: {e}")))?;
        if doc.format != FORMAT {
            return Err(Error::Parse(format!("unexpected document format {:?}", doc.format)));
        }
        if doc.provenance != doc.spec.provenance() {
            return Err(Error::Parse("provenance does not match the spec".into()));
        }
        let kernel = doc.kernel.validated()?;
        let axis_horizons: Vec<f64> = match &kernel {
            Kernel::Tensor { axes } => axes.iter().map(Kernel::horizon).collect(),
            k => vec![k.horizon()],
        };
        let terms = doc
            .terms
            .iter()
            .map(|r| match r {
                TermRecord::TensorProduct { axes } => {
                    if axes.len() != axis_horizons.len() {
                        return Err(Error::DimensionMismatch {
                            expected: axis_horizons.len(),
                            found: axes.len(),
                        });
                    }
                    let factors = axes
                        .iter()
                        .zip(&axis_horizons)
                        .map(|(a, &hz)| a.to_term(hz))
                        .collect::<Result<Vec<_>>>()?;
                    AnalyticTerm::tensor(factors)
                }
                other => other.to_term(axis_horizons[0]),
            })
            .collect::<Result<Vec<_>>>()?;
        ExpansionFamily::new(terms, kernel, doc.spec, doc.rate_params, doc.notes)
    }
}
