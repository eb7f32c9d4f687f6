//! Spectral, matrix-free solver for time-harmonic scattering by penetrable
//! three-dimensional media.
//!
//! The Lippmann-Schwinger equation `u = u_inc - k^2 ∫ Φ(x,y) m(y) u(y) dy`
//! is discretized with spherical harmonics in angle and piecewise Chebyshev
//! interpolation in radius. The outgoing Green's function separates into
//! products of spherical Bessel and Hankel functions, so each application of
//! the integral operator is an angular product (spherical harmonic
//! transforms) followed by cumulative radial integrals per mode. GMRES solves
//! the resulting system without ever forming a matrix.
//!
//! Module map:
//! - [`specfun`]: Bessel, Legendre, Chebyshev and Gauss-Legendre primitives.
//! - [`sht`]: spherical harmonic transforms and [`ModeField`] storage.
//! - [`radial`]: radial grid, moment tables and kernel assembly.
//! - [`operator`]: the integral operator and the GMRES driver.
//! - [`scenarios`]: benchmark incident fields, contrasts and exact solutions.
//! - [`oracle`]: slow brute-force evaluators used to cross-check everything else.
//! - [`checks`]: the oracle cross-checks behind `lsscatter selftest`.

pub mod checks;
pub mod error;
pub mod field;
pub mod operator;
pub mod oracle;
pub mod radial;
pub mod scenarios;
pub mod sht;
pub mod specfun;

pub use error::{Error, Result};
pub use field::ModeField;
pub use num_complex::Complex64;
