//! Special functions used throughout the solver.
//!
//! Spherical Bessel functions and their power-rescaled forms, fully
//! normalized associated Legendre functions, Chebyshev polynomials on an
//! interval and Gauss-Legendre rules. Everything here is a pure function.

mod bessel;
mod legendre;
mod quadrature;

pub use bessel::{
    ln_double_factorial, modified_bessel_j, modified_bessel_y, scaled_hankel, spherical_bessel_j,
    spherical_bessel_j_deriv, spherical_bessel_y, spherical_bessel_y_deriv, spherical_hankel,
};
pub use legendre::{legendre_s, legendre_s_into, spherical_harmonic, LegendreRecurrence};
pub use quadrature::{chebyshev_eval, chebyshev_nodes, gauss_legendre, gauss_legendre_on};
