//! Explicit series expansions of Gaussian processes.
//!
//! Builders produce families of closed-form terms `f_j` such that
//! `sum_j xi_j f_j` with i.i.d. standard normal `xi_j` has the law of a target
//! process (Brownian motion, bridge, fractional Brownian motion, stationary
//! and fractional Ornstein-Uhlenbeck processes, convex stationary processes and
//! their tensor-product sheets). The sampler draws truncated paths, and the
//! diagnostics check covariance reconstruction, frame identities, coefficient
//! signs, spectral asymptotics and truncation rates numerically.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod expansions;
pub mod grid;
pub mod hexfloat;
pub mod kernels;
pub mod montecarlo;
pub mod specialfn;
pub mod terms;

pub use error::{Error, Result};
pub use expansions::{ExpansionFamily, FamilySpec, Provenance};
pub use grid::{Grid, GridSpec};
pub use kernels::{gram_matrix, Kernel, Profile};
pub use terms::{AnalyticTerm, Primitive, TermKind};

/// Version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
