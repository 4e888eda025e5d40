//! Bessel functions, their zeros, and oscillation-aware quadrature.

mod bessel;
mod quadrature;

pub use bessel::{
    bessel_j, bessel_j_derivative, bessel_positive_zeros, mcmahon_guess, BesselOrder,
    SERIES_CROSSOVER,
};
pub use quadrature::{fourier_cosine_coefficient, gauss_kronrod15, integrate, QuadratureConfig};
