//! Spherical harmonic transforms on a Gauss-Legendre x uniform-longitude grid.
//!
//! The longitude direction is a DFT; the colatitude direction is a direct
//! Legendre sum against a precomputed table of `S_n^m(t_q)`. Equatorial
//! symmetry of the Gauss-Legendre nodes (`S_n^m(-t) = (-1)^(n+m) S_n^m(t)`)
//! halves both the table and the work.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{mode_index, modes_per_node};
use crate::specfun::{gauss_legendre, LegendreRecurrence};

/// Tensor grid exact for products `Y_n^m conj(Y_n'^m')` with `n, n' <= band`:
/// `band + 1` Gauss-Legendre colatitudes and `2 band + 1` longitudes.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    band: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    weights: Vec<f64>,
    n_lon: usize,
}

impl AngularGrid {
    pub fn new(band: usize) -> Self {
        let (cos_theta, weights) = gauss_legendre(band + 1);
        let sin_theta = cos_theta.iter().map(|t| (1.0 - t * t).sqrt()).collect();
        Self { band, cos_theta, sin_theta, weights, n_lon: 2 * band + 1 }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn n_lat(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n_lat() * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i]
    }

    pub fn sin_theta(&self, i: usize) -> f64 {
        self.sin_theta[i]
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.cos_theta[i].acos()
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_lon as f64
    }

    /// Gauss-Legendre weight of colatitude row `i`.
    pub fn lat_weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Surface quadrature weight of any point in row `i`.
    pub fn cell_weight(&self, i: usize) -> f64 {
        self.weights[i] * 2.0 * PI / self.n_lon as f64
    }
}

/// Angular transform interface consumed by the operator.
pub trait AngularTransform: Send + Sync {
    fn grid(&self) -> &AngularGrid;

    /// Largest coefficient band the transform can handle.
    fn max_band(&self) -> usize;

    /// Coefficients of band `band` to grid values, row-major `[lat][lon]`.
    fn synthesize(&self, coeffs: &[Complex64], band: usize) -> Result<Vec<Complex64>>;

    /// Grid values to coefficients up to `band`.
    fn analyze(&self, values: &[Complex64], band: usize) -> Result<Vec<Complex64>>;

    /// Coefficients of the pointwise product `u * m`, projected to `out_band`.
    fn product_project(
        &self,
        u: &[Complex64],
        u_band: usize,
        m: &[Complex64],
        m_band: usize,
        out_band: usize,
    ) -> Result<Vec<Complex64>> {
        let grid_band = self.grid().band();
        // quadrature exactness: the integrand has degree u + m + out
        let need = u_band + m_band + out_band;
        if need > 2 * grid_band + 1 || u_band + m_band + out_band >= self.grid().n_lon() {
            return Err(Error::BandMismatch { requested: need.div_ceil(2), available: grid_band });
        }
        let mut fu = self.synthesize(u, u_band)?;
        let fm = self.synthesize(m, m_band)?;
        fu.iter_mut().zip(&fm).for_each(|(a, b)| *a *= b);
        self.analyze(&fu, out_band)
    }
}

/// Exact direct Legendre transform with FFT separation in longitude.
pub struct DirectTransform {
    grid: AngularGrid,
    table_band: usize,
    half_lat: usize,
    // S_n^m(t_q) for q < half_lat, laid out [m][q][n - m]
    table: Vec<f64>,
    offsets: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DirectTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectTransform")
            .field("grid_band", &self.grid.band)
            .field("table_band", &self.table_band)
            .finish()
    }
}

impl DirectTransform {
    /// Transform on the band-`grid_band` grid for coefficients up to `table_band`.
    pub fn new(grid_band: usize, table_band: usize) -> Result<Self> {
        if table_band > grid_band {
            return Err(Error::BandMismatch { requested: table_band, available: grid_band });
        }
        let grid = AngularGrid::new(grid_band);
        let half_lat = grid.n_lat().div_ceil(2);
        let rec = LegendreRecurrence::new(table_band);
        let mut offsets = Vec::with_capacity(table_band + 2);
        let mut total = 0;
        for m in 0..=table_band {
            offsets.push(total);
            total += half_lat * (table_band - m + 1);
        }
        offsets.push(total);
        let mut table = vec![0.0; total];
        for m in 0..=table_band {
            let len = table_band - m + 1;
            for q in 0..half_lat {
                let start = offsets[m] + q * len;
                rec.eval_into(m, grid.cos_theta(q), grid.sin_theta(q), &mut table[start..start + len]);
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_lon());
        let inverse = planner.plan_fft_inverse(grid.n_lon());
        Ok(Self { grid, table_band, half_lat, table, offsets, forward, inverse })
    }

    fn row(&self, m: usize, q: usize, len: usize) -> &[f64] {
        let stride = self.table_band - m + 1;
        let start = self.offsets[m] + q * stride;
        &self.table[start..start + len]
    }

    fn check_band(&self, band: usize) -> Result<()> {
        if band > self.table_band {
            return Err(Error::BandMismatch { requested: band, available: self.table_band });
        }
        Ok(())
    }

    #[inline]
    fn lon_slot(&self, m: i64) -> usize {
        m.rem_euclid(self.grid.n_lon() as i64) as usize
    }
}

#[inline]
fn order_sign(m: i64) -> f64 {
    if m < 0 && m % 2 != 0 {
        -1.0
    } else {
        1.0
    }
}

impl AngularTransform for DirectTransform {
    fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    fn max_band(&self) -> usize {
        self.table_band
    }

    fn synthesize(&self, coeffs: &[Complex64], band: usize) -> Result<Vec<Complex64>> {
        self.check_band(band)?;
        assert_eq!(coeffs.len(), modes_per_node(band));
        let n_lat = self.grid.n_lat();
        let n_lon = self.grid.n_lon();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; n_lat * n_lon];
        let mut cm = vec![zero; band + 1];
        for m in -(band as i64)..=band as i64 {
            let am = m.unsigned_abs() as usize;
            let len = band - am + 1;
            let sign = order_sign(m);
            let mut any = false;
            for (i, c) in cm[..len].iter_mut().enumerate() {
                *c = coeffs[mode_index(am + i, m)] * sign;
                any |= *c != zero;
            }
            if !any {
                continue;
            }
            let slot = self.lon_slot(m);
            for q in 0..self.half_lat {
                let row = self.row(am, q, len);
                let (mut even, mut odd) = (zero, zero);
                for (i, (c, s)) in cm[..len].iter().zip(row).enumerate() {
                    if i % 2 == 0 {
                        even += c * s;
                    } else {
                        odd += c * s;
                    }
                }
                out[q * n_lon + slot] = even + odd;
                let mirror = n_lat - 1 - q;
                if mirror != q {
                    out[mirror * n_lon + slot] = even - odd;
                }
            }
        }
        self.inverse.process(&mut out);
        Ok(out)
    }

    fn analyze(&self, values: &[Complex64], band: usize) -> Result<Vec<Complex64>> {
        self.check_band(band)?;
        let n_lat = self.grid.n_lat();
        let n_lon = self.grid.n_lon();
        assert_eq!(values.len(), n_lat * n_lon);
        let zero = Complex64::new(0.0, 0.0);
        let mut spec = values.to_vec();
        self.forward.process(&mut spec);
        let mut out = vec![zero; modes_per_node(band)];
        let mut acc = vec![zero; band + 1];
        for m in -(band as i64)..=band as i64 {
            let am = m.unsigned_abs() as usize;
            let len = band - am + 1;
            let slot = self.lon_slot(m);
            acc[..len].iter_mut().for_each(|a| *a = zero);
            for q in 0..self.half_lat {
                let mirror = n_lat - 1 - q;
                let w = self.grid.cell_weight(q);
                let a = spec[q * n_lon + slot];
                let (even, odd) = if mirror != q {
                    let b = spec[mirror * n_lon + slot];
                    ((a + b) * w, (a - b) * w)
                } else {
                    (a * w, a * w)
                };
                if even == zero && odd == zero {
                    continue;
                }
                let row = self.row(am, q, len);
                for (i, (c, s)) in acc[..len].iter_mut().zip(row).enumerate() {
                    *c += if i % 2 == 0 { even } else { odd } * *s;
                }
            }
            let sign = order_sign(m);
            for (i, c) in acc[..len].iter().enumerate() {
                out[mode_index(am + i, m)] = c * sign;
            }
        }
        Ok(out)
    }
}

/// Coefficients of `u * m` for band-`f` `u` and band-`2f` `m`, projected onto
/// all degrees up to `3f` on the band-`3f` grid.
pub fn pointwise_product_project(u: &[Complex64], f: usize, m: &[Complex64]) -> Result<Vec<Complex64>> {
    let t = DirectTransform::new(3 * f, 3 * f)?;
    let mut fu = t.synthesize(u, f)?;
    let fm = t.synthesize(m, 2 * f)?;
    fu.iter_mut().zip(&fm).for_each(|(a, b)| *a *= b);
    t.analyze(&fu, 3 * f)
}

/// Direct double-sum evaluation of a coefficient block at one direction.
pub fn evaluate_at(coeffs: &[Complex64], band: usize, theta: f64, phi: f64) -> Complex64 {
    let t = theta.cos();
    let mut buf = vec![0.0; band + 1];
    let mut sum = Complex64::new(0.0, 0.0);
    for am in 0..=band {
        crate::specfun::legendre_s_into(band, am, t, &mut buf);
        for (i, s) in buf[..band - am + 1].iter().enumerate() {
            let n = am + i;
            let c = coeffs[mode_index(n, am as i64)];
            sum += c * *s * Complex64::from_polar(1.0, am as f64 * phi);
            if am > 0 {
                let m = -(am as i64);
                let c = coeffs[mode_index(n, m)];
                sum += c * (*s * order_sign(m)) * Complex64::from_polar(1.0, m as f64 * phi);
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::spherical_harmonic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coeffs(band: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..modes_per_node(band))
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn grid_shape() {
        let g = AngularGrid::new(7);
        assert_eq!(g.n_lat(), 8);
        assert_eq!(g.n_lon(), 15);
        assert_eq!(g.len(), 120);
    }

    #[test]
    fn monopole_and_dipole_synthesis() {
        let t = DirectTransform::new(4, 4).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); modes_per_node(2)];
        c[0] = Complex64::new((4.0 * PI).sqrt(), 0.0);
        let f = t.synthesize(&c, 2).unwrap();
        assert!(f.iter().all(|v| (v - 1.0).norm() < 1e-14));
        let mut c = vec![Complex64::new(0.0, 0.0); modes_per_node(2)];
        c[mode_index(1, 0)] = Complex64::new(1.0, 0.0);
        let f = t.synthesize(&c, 2).unwrap();
        let g = t.grid();
        for i in 0..g.n_lat() {
            for j in 0..g.n_lon() {
                let expect = (3.0 / (4.0 * PI)).sqrt() * g.cos_theta(i);
                assert!((f[i * g.n_lon() + j] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn synthesis_matches_naive_double_sum() {
        let band = 8;
        let t = DirectTransform::new(band, band).unwrap();
        let c = random_coeffs(band, 3);
        let f = t.synthesize(&c, band).unwrap();
        let g = t.grid();
        for i in 0..g.n_lat() {
            for j in 0..g.n_lon() {
                let mut direct = Complex64::new(0.0, 0.0);
                for n in 0..=band {
                    for m in -(n as i64)..=n as i64 {
                        direct += c[mode_index(n, m)] * spherical_harmonic(n, m, g.theta(i), g.phi(j));
                    }
                }
                assert!((f[i * g.n_lon() + j] - direct).norm() < 1e-12);
                assert!((evaluate_at(&c, band, g.theta(i), g.phi(j)) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn analysis_of_constant_and_single_harmonic() {
        let t = DirectTransform::new(6, 6).unwrap();
        let g = t.grid().clone();
        let ones = vec![Complex64::new(1.0, 0.0); g.len()];
        let c = t.analyze(&ones, 6).unwrap();
        assert!((c[0] - (4.0 * PI).sqrt()).norm() < 1e-13);
        assert!(c[1..].iter().all(|v| v.norm() < 1e-13));
        let mut vals = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..g.n_lat() {
            for j in 0..g.n_lon() {
                vals[i * g.n_lon() + j] = spherical_harmonic(5, -3, g.theta(i), g.phi(j));
            }
        }
        let c = t.analyze(&vals, 6).unwrap();
        for (k, v) in c.iter().enumerate() {
            let expect = if k == mode_index(5, -3) { 1.0 } else { 0.0 };
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn band_mismatch_is_reported() {
        let t = DirectTransform::new(4, 4).unwrap();
        let c = vec![Complex64::new(0.0, 0.0); modes_per_node(5)];
        assert!(matches!(t.synthesize(&c, 5), Err(Error::BandMismatch { .. })));
        assert!(DirectTransform::new(3, 4).is_err());
    }

    #[test]
    fn product_with_zero_and_constant() {
        let f = 3;
        let u = random_coeffs(f, 9);
        let zero = vec![Complex64::new(0.0, 0.0); modes_per_node(2 * f)];
        let p = pointwise_product_project(&u, f, &zero).unwrap();
        assert!(p.iter().all(|v| v.norm() == 0.0));
        let mut cst = zero.clone();
        let c = Complex64::new(0.7, -0.2);
        cst[0] = c * (4.0 * PI).sqrt();
        let p = pointwise_product_project(&u, f, &cst).unwrap();
        for k in 0..modes_per_node(3 * f) {
            let expect = if k < u.len() { u[k] * c } else { Complex64::new(0.0, 0.0) };
            assert!((p[k] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn product_matches_oversampled_quadrature() {
        let (f, fm) = (4, 8);
        let u = random_coeffs(f, 1);
        let m = random_coeffs(fm, 2);
        // oracle: naive sums on a 4x oversampled grid
        let big = AngularGrid::new(4 * (f + fm));
        let t = DirectTransform::new(f + fm, f + fm).unwrap();
        let fast = t.product_project(&u, f, &m, fm, f + fm).unwrap();
        let mut vals = Vec::with_capacity(big.len());
        for i in 0..big.n_lat() {
            for j in 0..big.n_lon() {
                let (th, ph) = (big.theta(i), big.phi(j));
                vals.push(evaluate_at(&u, f, th, ph) * evaluate_at(&m, fm, th, ph));
            }
        }
        for n in 0..=(f + fm) {
            for mm in -(n as i64)..=n as i64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..big.n_lat() {
                    for j in 0..big.n_lon() {
                        acc += vals[i * big.n_lon() + j]
                            * spherical_harmonic(n, mm, big.theta(i), big.phi(j)).conj()
                            * big.cell_weight(i);
                    }
                }
                assert!((acc - fast[mode_index(n, mm)]).norm() < 1e-11, "n={n} m={mm}");
            }
        }
    }

    #[test]
    fn minimal_product_grid_matches_full_grid() {
        let f = 6;
        let u = random_coeffs(f, 5);
        let m = random_coeffs(2 * f, 6);
        let full = pointwise_product_project(&u, f, &m).unwrap();
        let t = DirectTransform::new(2 * f, 2 * f).unwrap();
        let small = t.product_project(&u, f, &m, 2 * f, f).unwrap();
        for k in 0..small.len() {
            assert!((small[k] - full[k]).norm() < 1e-12);
        }
    }
}
