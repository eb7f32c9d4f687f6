//! Slow, independent reference evaluators.
//!
//! Nothing here uses the addition theorem, spherical harmonic transforms or
//! moment tables, except [`addition_theorem_check`] whose job is to test the
//! series itself. The volume integral is evaluated with quadrature centred on
//! each target point, which turns the `1/|x-y|` singularity into the smooth
//! Jacobian factor `r`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{
    gauss_legendre, modified_bessel_j, scaled_hankel, spherical_bessel_j, spherical_hankel,
    spherical_harmonic,
};

/// Field values at a set of points.
#[derive(Debug, Clone)]
pub struct DenseField {
    pub points: Vec<[f64; 3]>,
    pub values: Vec<Complex64>,
}

impl DenseField {
    pub fn sample(points: Vec<[f64; 3]>, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = points.iter().map(|&p| f(p)).collect();
        Self { points, values }
    }
}

/// Quadrature sizes for [`ls_apply_dense`]: Gauss points along each ray,
/// Gauss points in the polar cosine and uniform azimuths.
#[derive(Debug, Clone, Copy)]
pub struct DenseRule {
    pub radial: usize,
    pub polar: usize,
    pub azimuthal: usize,
}

impl DenseRule {
    pub fn doubled(self) -> Self {
        Self { radial: 2 * self.radial, polar: 2 * self.polar, azimuthal: 2 * self.azimuthal }
    }
}

impl Default for DenseRule {
    fn default() -> Self {
        Self { radial: 48, polar: 48, azimuthal: 48 }
    }
}

/// `u(x) + k^2 int_{|y| <= support} Phi(x, y) m(y) u(y) dy` at every target.
///
/// `m` and `u` must be smooth inside the support ball; the ball boundary is
/// resolved exactly along each ray.
pub fn ls_apply_dense(
    targets: &[[f64; 3]],
    u: &(dyn Fn([f64; 3]) -> Complex64 + Sync),
    m: &(dyn Fn([f64; 3]) -> Complex64 + Sync),
    support: f64,
    k: f64,
    rule: DenseRule,
) -> DenseField {
    use rayon::prelude::*;

    let (rx_nodes, rw) = gauss_legendre(rule.radial);
    let (tx, tw) = gauss_legendre(rule.polar);
    let dphi = 2.0 * PI / rule.azimuthal as f64;
    let values = targets
        .par_iter()
        .map(|&x| {
            let rx = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            // polar axis: z for interior targets; for exterior ones the
            // direction toward the origin, with only the cone that hits the
            // ball sampled and the edge singularity removed by t = t0 + (1 - t0) s^2
            let (axis, e1, e2, t0) = if rx <= support {
                ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], None)
            } else {
                let a = [-x[0] / rx, -x[1] / rx, -x[2] / rx];
                let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let dot = helper[0] * a[0] + helper[1] * a[1] + helper[2] * a[2];
                let mut e1 = [helper[0] - dot * a[0], helper[1] - dot * a[1], helper[2] - dot * a[2]];
                let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
                e1.iter_mut().for_each(|v| *v /= n1);
                let e2 = [a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2], a[0] * e1[1] - a[1] * e1[0]];
                (a, e1, e2, Some((1.0 - (support / rx).powi(2)).sqrt()))
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for (&tn, &twn) in tx.iter().zip(&tw) {
                let (t, wt) = match t0 {
                    None => (tn, twn),
                    Some(t0) => {
                        let s = 0.5 * (tn + 1.0);
                        (t0 + (1.0 - t0) * s * s, twn * 0.5 * 2.0 * (1.0 - t0) * s)
                    }
                };
                let st = (1.0 - t * t).max(0.0).sqrt();
                for p in 0..rule.azimuthal {
                    let (sp, cp) = (p as f64 * dphi).sin_cos();
                    let w: [f64; 3] = std::array::from_fn(|i| st * cp * e1[i] + st * sp * e2[i] + t * axis[i]);
                    // |x + r w|^2 = support^2
                    let b = x[0] * w[0] + x[1] * w[1] + x[2] * w[2];
                    let c = rx * rx - support * support;
                    let disc = b * b - c;
                    if disc <= 0.0 {
                        continue;
                    }
                    let r_hi = -b + disc.sqrt();
                    let r_lo = (-b - disc.sqrt()).max(0.0);
                    if r_hi <= r_lo {
                        continue;
                    }
                    let half = 0.5 * (r_hi - r_lo);
                    let mid = 0.5 * (r_hi + r_lo);
                    let mut ray = Complex64::new(0.0, 0.0);
                    for (&s, &ws) in rx_nodes.iter().zip(&rw) {
                        let r = mid + half * s;
                        let y = [x[0] + r * w[0], x[1] + r * w[1], x[2] + r * w[2]];
                        ray += Complex64::from_polar(r * ws, k * r) * m(y) * u(y);
                    }
                    acc += ray * (half * wt * dphi);
                }
            }
            u(x) + acc * (k * k / (4.0 * PI))
        })
        .collect();
    DenseField { points: targets.to_vec(), values }
}

/// Closed-form Green's function and its `N`-term addition-theorem series.
pub fn addition_theorem_check(x: [f64; 3], y: [f64; 3], k: f64, terms: usize) -> Result<(Complex64, Complex64)> {
    let norm = |p: [f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let (rx, ry) = (norm(x), norm(y));
    if (rx - ry).abs() < 1e-6 {
        return Err(Error::NonSeparated(rx, ry));
    }
    let d = norm([x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
    let direct = Complex64::from_polar(1.0, k * d) / (4.0 * PI * d);
    let (big, small, rb, rs) = if rx > ry { (x, y, rx, ry) } else { (y, x, ry, rx) };
    let angles = |p: [f64; 3], r: f64| {
        if r == 0.0 {
            (0.0, 0.0)
        } else {
            ((p[2] / r).clamp(-1.0, 1.0).acos(), p[1].atan2(p[0]))
        }
    };
    let (tb, pb) = angles(big, rb);
    let (ts, ps) = angles(small, rs);
    let mut series = Complex64::new(0.0, 0.0);
    for n in 0..=terms {
        // h_n(k rb) j_n(k rs) = hs_n(k rb) jt_n(k rs) (rs/rb)^n / ((2n+1) k rb)
        let radial = if rs == 0.0 {
            if n == 0 {
                spherical_hankel(0, k * rb)
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else {
            scaled_hankel(n, k * rb) * modified_bessel_j(n, k * rs) * (n as f64 * (rs / rb).ln()).exp()
                / ((2 * n + 1) as f64 * k * rb)
        };
        let mut angular = Complex64::new(0.0, 0.0);
        for m in -(n as i64)..=n as i64 {
            angular += spherical_harmonic(n, m, tb, pb) * spherical_harmonic(n, m, ts, ps).conj();
        }
        series += radial * angular;
    }
    Ok((direct, series * Complex64::new(0.0, k)))
}

fn gauss_sum(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, x: &[f64], w: &[f64]) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(t, wt)| f(mid + half * t) * *wt).sum::<Complex64>() * half
}

/// Globally adaptive Gauss-Legendre integration to relative tolerance `tol`.
///
/// The interval with the largest error estimate is bisected until the
/// summed estimate meets `tol` or the subdivision budget runs out.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    const MAX_PIECES: usize = 4000;
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let (x1, w1) = gauss_legendre(12);
    let (x2, w2) = gauss_legendre(24);
    let piece = |a: f64, b: f64| {
        let hi = gauss_sum(f, a, b, &x2, &w2);
        let err = (hi - gauss_sum(f, a, b, &x1, &w1)).norm();
        (a, b, hi, err)
    };
    let mut pieces = vec![piece(a, b)];
    loop {
        let total: Complex64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol * total.norm() || pieces.len() >= MAX_PIECES {
            return total;
        }
        let worst = (0..pieces.len()).max_by(|&i, &j| pieces[i].3.total_cmp(&pieces[j].3)).unwrap();
        let (pa, pb, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return total;
        }
        pieces.push(piece(pa, mid));
        pieces.push(piece(mid, pb));
    }
}

/// Radial kernel of one mode evaluated with raw Bessel and Hankel functions:
/// `-k^3 [ h_n(ka) int_0^a j_n(k rho) I rho^2 + j_n(ka) int_a^R h_n(k rho) I rho^2 ]`.
pub fn kernel_direct(n: usize, k: f64, radius: f64, a: f64, i_of_rho: &dyn Fn(f64) -> Complex64) -> Complex64 {
    let inner = |r: f64| i_of_rho(r) * spherical_bessel_j(n, k * r) * r * r;
    let outer = |r: f64| i_of_rho(r) * spherical_hankel(n, k * r) * r * r;
    let first = adaptive_integrate(&inner, 0.0, a, 1e-13);
    let second = adaptive_integrate(&outer, a, radius, 1e-13);
    -(k * k * k) * (spherical_hankel(n, k * a) * first + spherical_bessel_j(n, k * a) * second)
}
