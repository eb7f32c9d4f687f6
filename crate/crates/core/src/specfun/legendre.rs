//! Fully normalized associated Legendre functions.
//!
//! `S_n^m(t)` is normalized so that `Y_n^m(theta, phi) = S_n^m(cos theta) e^{i m phi}`
//! is orthonormal on the unit sphere for `m >= 0`, Condon-Shortley phase
//! included. Negative orders follow `Y_n^{-m} = (-1)^m conj(Y_n^m)`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Precomputed three-term recurrence coefficients up to a band limit.
///
/// `S_n^m = a_n^m (t S_{n-1}^m - S_{n-2}^m / a_{n-1}^m)` with
/// `a_n^m = sqrt((4n^2 - 1)/(n^2 - m^2))`.
#[derive(Debug, Clone)]
pub struct LegendreRecurrence {
    band: usize,
    // a[m][n - m], n in m+1..=band
    a: Vec<Vec<f64>>,
    // S_m^m = diag[m] * sin^m, computed as a running product
    diag_factor: Vec<f64>,
}

impl LegendreRecurrence {
    pub fn new(band: usize) -> Self {
        let mut a = Vec::with_capacity(band + 1);
        for m in 0..=band {
            let mf = m as f64;
            let row = (m..=band)
                .map(|n| {
                    if n == m {
                        0.0
                    } else {
                        let nf = n as f64;
                        ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt()
                    }
                })
                .collect();
            a.push(row);
        }
        let diag_factor = (0..=band)
            .map(|m| if m == 0 { 0.0 } else { -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() })
            .collect();
        Self { band, a, diag_factor }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Writes `S_n^m(t)` for `n = m..=band` into `out[0..=band-m]`.
    ///
    /// `sin_theta` must equal `sqrt(1 - t^2)`; passing it avoids cancellation
    /// near the poles.
    pub fn eval_into(&self, m: usize, t: f64, sin_theta: f64, out: &mut [f64]) {
        debug_assert!(m <= self.band);
        let mut smm = 1.0 / (4.0 * PI).sqrt();
        for k in 1..=m {
            smm *= self.diag_factor[k] * sin_theta;
        }
        out[0] = smm;
        if m == self.band {
            return;
        }
        let a = &self.a[m];
        out[1] = a[1] * t * smm;
        for i in 2..=(self.band - m) {
            out[i] = a[i] * (t * out[i - 1] - out[i - 2] / a[i - 1]);
        }
    }
}

/// `S_n^m(t)` for `n = m..=band`.
pub fn legendre_s(band: usize, m: usize, t: f64) -> Vec<f64> {
    assert!(m <= band, "order {m} exceeds band {band}");
    let mut out = vec![0.0; band - m + 1];
    legendre_s_into(band, m, t, &mut out);
    out
}

/// Allocation-free variant of [`legendre_s`].
pub fn legendre_s_into(band: usize, m: usize, t: f64, out: &mut [f64]) {
    let sin_theta = (1.0 - t * t).max(0.0).sqrt();
    let mut smm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        smm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * sin_theta;
    }
    out[0] = smm;
    if m == band {
        return;
    }
    let mf = m as f64;
    let coef = |n: usize| {
        let nf = n as f64;
        ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt()
    };
    let mut a_prev = coef(m + 1);
    out[1] = a_prev * t * smm;
    for i in 2..=(band - m) {
        let a = coef(m + i);
        out[i] = a * (t * out[i - 1] - out[i - 2] / a_prev);
        a_prev = a;
    }
}

/// `Y_n^m(theta, phi)` for any `-n <= m <= n`.
pub fn spherical_harmonic(n: usize, m: i64, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= n);
    let s = legendre_s(n, am, theta.cos())[n - am];
    let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
    Complex64::from_polar(sign * s, m as f64 * phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gauss_legendre;

    #[test]
    fn monopole_and_pole_values() {
        let v = legendre_s(0, 0, 0.3);
        assert!((v[0] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-16);
        let v = legendre_s(2, 0, 1.0);
        for (n, x) in v.iter().enumerate() {
            let expect = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
            assert!((x - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_rodrigues_reference() {
        // S_n^3(0.37), n = 3..=10, Rodrigues formula in 40-digit arithmetic
        let expected = [
            -0.33454979935660632,
            -0.37135027728583302,
            -0.064383156576917504,
            0.28874500210631527,
            0.29765613788585748,
            -0.044448875254893435,
            -0.32762681544366731,
            -0.20988913495113075,
        ];
        let v = legendre_s(10, 3, 0.37);
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn recurrence_table_agrees_with_direct() {
        let rec = LegendreRecurrence::new(40);
        let mut buf = vec![0.0; 41];
        for m in [0usize, 1, 7, 40] {
            let t = -0.42;
            rec.eval_into(m, t, (1.0 - t * t).sqrt(), &mut buf);
            let d = legendre_s(40, m, t);
            for i in 0..d.len() {
                assert!((buf[i] - d[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn orthonormal_under_gauss_legendre() {
        let band = 64;
        let (t, w) = gauss_legendre(band + 1);
        for m in 0..=band {
            let table: Vec<Vec<f64>> = t.iter().map(|&x| legendre_s(band, m, x)).collect();
            for n1 in m..=band {
                for n2 in n1..=band {
                    let s: f64 = (0..t.len())
                        .map(|q| w[q] * table[q][n1 - m] * table[q][n2 - m])
                        .sum::<f64>()
                        * 2.0
                        * PI;
                    let expect = if n1 == n2 { 1.0 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-12, "m={m} n={n1},{n2}: {s}");
                }
            }
        }
    }

    #[test]
    fn finite_at_high_band() {
        for &t in &[-1.0, -0.999999, 0.0, 0.5, 1.0] {
            for m in [0usize, 100, 511, 512] {
                assert!(legendre_s(512, m, t).iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn negative_order_conjugation() {
        let (th, ph) = (0.7, 1.9);
        for n in 0..6usize {
            for m in 1..=n as i64 {
                let a = spherical_harmonic(n, -m, th, ph);
                let b = spherical_harmonic(n, m, th, ph).conj() * if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
