//! Benchmark incident fields, contrast models and exact reference solutions.
//!
//! The incident fields are `(x^2 + y^2)^{|m|/2} e^{ik(z-d)} e^{i m phi}`,
//! plane waves along `z` lifted to azimuthal order `m`. Contrasts:
//!
//! - centered sphere of radius `r` and index `n0`;
//! - the same sphere centered at `(0, 0, d)`;
//! - the axisymmetric bicone `|s| + |z| <= a` (`s` the distance to the `z`
//!   axis), i.e. a square rotated by 45 degrees in every meridian plane;
//! - the Hoelder shell `-|t|^beta (1 - t^2)^{|m|/2} e^{i m phi}` on `1 <= rho <= 2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::field::{mode_index, ModeField};
use crate::radial::RadialGrid;
use crate::sht::{AngularTransform, DirectTransform};
use crate::specfun::{
    gauss_legendre_on, legendre_s, ln_double_factorial, modified_bessel_j, scaled_hankel,
};

/// Incident field `(x^2 + y^2)^{|m|/2} e^{ik(z - d)} e^{i m phi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentSpec {
    pub m_inc: i64,
    pub k: f64,
    pub offset: f64,
}

impl IncidentSpec {
    /// Closed-form value at a Cartesian point.
    pub fn value_at(&self, x: [f64; 3]) -> Complex64 {
        let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let phi = x[1].atan2(x[0]);
        let am = self.m_inc.unsigned_abs() as i32;
        Complex64::from_polar(s.powi(am), self.k * (x[2] - self.offset) + self.m_inc as f64 * phi)
    }
}

fn i_pow(p: usize) -> Complex64 {
    match p % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
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

/// `ln|q_n|` and the unit phase of the series factor of degree `n` in
///
/// `u_inc = sum_n q_n j_n(k rho) Y_n^m`, `d = 0`.
fn incident_factor(m: i64, k: f64, n: usize) -> (f64, Complex64) {
    let am = m.unsigned_abs() as usize;
    debug_assert!(n >= am);
    let nf = n as f64;
    let ln = (2.0 * nf + 1.0).ln() - am as f64 * k.ln()
        + 0.5
            * ((4.0 * PI).ln() + ln_gamma(nf + am as f64 + 1.0)
                - (2.0 * nf + 1.0).ln()
                - ln_gamma(nf - am as f64 + 1.0));
    let sign = if m > 0 && m % 2 != 0 { -1.0 } else { 1.0 };
    (ln, i_pow(n - am) * sign)
}

/// Coefficient of `Y_n^m` of the unshifted incident field at radius `rho`.
pub fn incident_coefficient(m: i64, k: f64, n: usize, rho: f64) -> Complex64 {
    if n < m.unsigned_abs() as usize {
        return Complex64::new(0.0, 0.0);
    }
    let (ln_q, phase) = incident_factor(m, k, n);
    if rho == 0.0 {
        return if n == 0 { phase * ln_q.exp() } else { Complex64::new(0.0, 0.0) };
    }
    // j_n(x) = x^n / (2n+1)!! jt_n(x)
    let x = k * rho;
    let ln = ln_q + n as f64 * x.ln() - ln_double_factorial(2 * n + 1);
    phase * (ln.exp() * modified_bessel_j(n, x))
}

/// Incident coefficients at band `F` on every radial node.
pub fn incident_coefficients(spec: &IncidentSpec, grid: &RadialGrid, band: usize) -> Result<ModeField> {
    let am = spec.m_inc.unsigned_abs() as usize;
    if band < am {
        return Err(Error::BandTooSmall { band, order: spec.m_inc });
    }
    let shift = Complex64::from_polar(1.0, -spec.k * spec.offset);
    let mut out = ModeField::zeros(band, grid.len());
    for (node, &rho) in grid.nodes().iter().enumerate() {
        for n in am..=band {
            out.set(node, n, spec.m_inc, shift * incident_coefficient(spec.m_inc, spec.k, n, rho));
        }
    }
    Ok(out)
}

/// Refractive-index perturbation `m = 1 - n^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContrastSpec {
    Vacuum,
    CenteredSphere { n0: f64, radius: f64 },
    ShiftedSphere { n0: f64, radius: f64, offset: f64 },
    /// Bicone `|s| + |z| <= half_diagonal`.
    RotatedSquare { n0: f64, half_diagonal: f64 },
    Hoelder { beta: f64, m_ref: i64 },
}

/// Radial support of the Hoelder shell.
pub const HOELDER_SHELL: (f64, f64) = (1.0, 2.0);

impl ContrastSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        match *self {
            ContrastSpec::Vacuum => Ok(()),
            ContrastSpec::CenteredSphere { radius, .. } if !(radius > 0.0) => {
                bad(format!("sphere radius must be positive, got {radius}"))
            }
            ContrastSpec::ShiftedSphere { radius, offset, .. } if !(radius > 0.0) || radius > offset => {
                bad(format!("shifted sphere needs 0 < r <= d, got r = {radius}, d = {offset}"))
            }
            ContrastSpec::RotatedSquare { half_diagonal, .. } if !(half_diagonal > 0.0) => {
                bad(format!("half diagonal must be positive, got {half_diagonal}"))
            }
            ContrastSpec::Hoelder { beta, .. } if !(beta >= 0.0) => {
                bad(format!("Hoelder exponent must be non-negative, got {beta}"))
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value `m(x)`.
    pub fn value_at(&self, x: [f64; 3]) -> Complex64 {
        let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let real = |v: f64| Complex64::new(v, 0.0);
        match *self {
            ContrastSpec::Vacuum => real(0.0),
            ContrastSpec::CenteredSphere { n0, radius } => real(if rho <= radius { 1.0 - n0 * n0 } else { 0.0 }),
            ContrastSpec::ShiftedSphere { n0, radius, offset } => {
                let d2 = s * s + (x[2] - offset).powi(2);
                real(if d2 <= radius * radius { 1.0 - n0 * n0 } else { 0.0 })
            }
            ContrastSpec::RotatedSquare { n0, half_diagonal } => {
                real(if s + x[2].abs() <= half_diagonal { 1.0 - n0 * n0 } else { 0.0 })
            }
            ContrastSpec::Hoelder { beta, m_ref } => {
                if rho < HOELDER_SHELL.0 || rho > HOELDER_SHELL.1 {
                    return real(0.0);
                }
                let t = x[2] / rho;
                let st = s / rho;
                let phi = x[1].atan2(x[0]);
                -Complex64::from_polar(
                    t.abs().powf(beta) * st.powi(m_ref.unsigned_abs() as i32),
                    m_ref as f64 * phi,
                )
            }
        }
    }

    /// Coefficients up to `band2` of the contrast on the sphere of radius `rho`.
    pub fn coefficients_at(&self, rho: f64, band2: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); (band2 + 1) * (band2 + 1)];
        match *self {
            ContrastSpec::Vacuum => {}
            ContrastSpec::CenteredSphere { n0, radius } => {
                if rho <= radius {
                    out[0] = Complex64::new((1.0 - n0 * n0) * (4.0 * PI).sqrt(), 0.0);
                }
            }
            ContrastSpec::ShiftedSphere { n0, radius, offset } => {
                if rho > offset - radius && rho < offset + radius {
                    // cap t >= t0 seen from the origin
                    let t0 = ((rho * rho + offset * offset - radius * radius) / (2.0 * rho * offset)).clamp(-1.0, 1.0);
                    zonal_indicator(&[(t0, 1.0)], 1.0 - n0 * n0, band2, &mut out);
                }
            }
            ContrastSpec::RotatedSquare { n0, half_diagonal } => {
                let c = half_diagonal / rho;
                if c >= 2f64.sqrt() {
                    out[0] = Complex64::new((1.0 - n0 * n0) * (4.0 * PI).sqrt(), 0.0);
                } else if c > 1.0 {
                    let root = (2.0 - c * c).sqrt();
                    let (t1, t2) = (0.5 * (c - root), 0.5 * (c + root));
                    zonal_indicator(&[(-1.0, -t2), (-t1, t1), (t2, 1.0)], 1.0 - n0 * n0, band2, &mut out);
                }
            }
            ContrastSpec::Hoelder { beta, m_ref } => {
                if (HOELDER_SHELL.0..=HOELDER_SHELL.1).contains(&rho) {
                    let am = m_ref.unsigned_abs() as usize;
                    let mut l = 0;
                    while am + 2 * l <= band2 {
                        out[mode_index(am + 2 * l, m_ref)] = Complex64::new(hoelder_coefficient(beta, m_ref, l), 0.0);
                        l += 1;
                    }
                }
            }
        }
        out
    }
}

/// Legendre polynomials `P_0..=P_nmax` at `x`.
fn legendre_p_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; nmax + 2];
    p[0] = 1.0;
    if nmax + 1 >= 1 {
        p[1] = x;
    }
    for n in 1..=nmax {
        p[n + 1] = ((2 * n + 1) as f64 * x * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
    }
    p
}

/// Zonal coefficients of `value` times the indicator of the union of
/// `t`-intervals, from exact Legendre antiderivatives.
fn zonal_indicator(pieces: &[(f64, f64)], value: f64, band2: usize, out: &mut [Complex64]) {
    // int_a^b P_n = [(P_{n+1} - P_{n-1}) / (2n+1)]_a^b, n >= 1
    let mut integrals = vec![0.0; band2 + 1];
    for &(a, b) in pieces {
        let pa = legendre_p_all(band2 + 1, a);
        let pb = legendre_p_all(band2 + 1, b);
        integrals[0] += b - a;
        for n in 1..=band2 {
            integrals[n] += ((pb[n + 1] - pb[n - 1]) - (pa[n + 1] - pa[n - 1])) / (2 * n + 1) as f64;
        }
    }
    for (n, int) in integrals.iter().enumerate() {
        let norm = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
        out[mode_index(n, 0)] = Complex64::new(value * 2.0 * PI * norm * int, 0.0);
    }
}

/// Coefficient of `Y_{|m|+2l}^m` of `-|t|^beta (1-t^2)^{|m|/2} e^{i m phi}`.
pub fn hoelder_coefficient(beta: f64, m_ref: i64, l: usize) -> f64 {
    let am = m_ref.unsigned_abs() as usize;
    let n = am + 2 * l;
    let (nf, amf) = (n as f64, am as f64);
    let half = 0.5 * beta;
    // ln of sqrt((2n+1)(n-M)!/(n+M)!) * (n+M)!/(n-M)!
    let ln_fact = 0.5 * ((2.0 * nf + 1.0).ln() + ln_gamma(nf + amf + 1.0) - ln_gamma(nf - amf + 1.0));
    let mut ln = ln_fact + PI.ln() - (beta + amf) * std::f64::consts::LN_2 + ln_gamma(1.0 + beta)
        - ln_gamma(1.0 + half)
        - ln_gamma(1.5 + half);
    let mut sign = -1.0;
    for s in 0..l {
        let f = half - s as f64;
        if f == 0.0 {
            return 0.0;
        }
        ln += f.abs().ln();
        sign *= f.signum();
    }
    for s in 0..am + l {
        ln -= (half + 1.5 + s as f64).ln();
    }
    if m_ref > 0 && am % 2 == 1 {
        sign = -sign;
    }
    sign * ln.exp()
}

/// Contrast coefficients at band `2F` on every node.
pub fn contrast_coefficients(spec: &ContrastSpec, grid: &RadialGrid, band: usize) -> Result<ModeField> {
    spec.validate()?;
    if let ContrastSpec::Hoelder { m_ref, .. } = spec {
        if (m_ref.unsigned_abs() as usize) > 2 * band {
            return Err(Error::BandTooSmall { band: 2 * band, order: *m_ref });
        }
    }
    let band2 = 2 * band;
    let mut out = ModeField::zeros(band2, grid.len());
    for (node, &rho) in grid.nodes().iter().enumerate() {
        out.node_mut(node).copy_from_slice(&spec.coefficients_at(rho, band2));
    }
    Ok(out)
}

/// Coefficients of an arbitrary smooth function sampled on every node.
///
/// Uses an oversampled angular grid so that functions of angular degree up
/// to `3 band` project without aliasing.
pub fn project_function(f: impl Fn([f64; 3]) -> Complex64 + Sync, grid: &RadialGrid, band: usize) -> Result<ModeField> {
    let t = DirectTransform::new(2 * band, band)?;
    let g = t.grid();
    let mut out = ModeField::zeros(band, grid.len());
    for (node, &rho) in grid.nodes().iter().enumerate() {
        let mut vals = Vec::with_capacity(g.len());
        for i in 0..g.n_lat() {
            let (ct, st) = (g.cos_theta(i), g.sin_theta(i));
            for j in 0..g.n_lon() {
                let (sp, cp) = g.phi(j).sin_cos();
                vals.push(f([rho * st * cp, rho * st * sp, rho * ct]));
            }
        }
        out.node_mut(node).copy_from_slice(&t.analyze(&vals, band)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct SphereMode {
    n: usize,
    // interior: alpha (rho/r)^n jt_n(n0 k rho)
    alpha: Complex64,
    // scattered: beta (r/rho)^(n+1) hs_n(k rho) / hs_n(k r)
    beta: Complex64,
    hs_r: Complex64,
}

/// Exact field for a homogeneous sphere centered at the origin, excited by
/// the order-`m` incident field.
#[derive(Debug, Clone)]
pub struct SphereSolution {
    k: f64,
    n0: f64,
    radius: f64,
    m: i64,
    modes: Vec<SphereMode>,
}

fn log_derivative_jt(n: usize, x: f64) -> f64 {
    // x^n/(2n+1)!! times this is d/dx j_n(x)
    if n == 0 {
        -x / 3.0 * modified_bessel_j(1, x)
    } else {
        ((2 * n + 1) as f64 * modified_bessel_j(n - 1, x) - (n + 1) as f64 * modified_bessel_j(n, x)) / x
    }
}

impl SphereSolution {
    /// Solves the interface matching for degrees `|m|..=terms`.
    pub fn new(k: f64, m: i64, n0: f64, radius: f64, terms: usize) -> Result<Self> {
        if !(k > 0.0 && n0 > 0.0 && radius > 0.0) {
            return Err(Error::InvalidGeometry(format!("need k, n0, r > 0; got {k}, {n0}, {radius}")));
        }
        let am = m.unsigned_abs() as usize;
        let (xa, xb) = (n0 * k * radius, k * radius);
        let mut modes = Vec::new();
        for n in am..=terms.max(am) {
            let at = modified_bessel_j(n, xa);
            let adt = n0 * k * log_derivative_jt(n, xa);
            let bt = modified_bessel_j(n, xb);
            let bdt = k * log_derivative_jt(n, xb);
            let hs = scaled_hankel(n, xb);
            let ratio = if n == 0 {
                -scaled_hankel(1, xb) / (xb * hs)
            } else {
                scaled_hankel(n - 1, xb) / hs * (xb / (2 * n - 1) as f64) - (n + 1) as f64 / xb
            };
            let hprime = ratio * k;
            let det = hprime * at - adt;
            let size = (hprime * at).norm() + adt.abs();
            if det.norm() < 1e-14 * size {
                return Err(Error::SingularMatching { degree: n, det: det.norm() / size });
            }
            let (ln_q, phase) = incident_factor(m, k, n);
            let q_sigma = phase * (ln_q + n as f64 * xb.ln() - ln_double_factorial(2 * n + 1)).exp();
            let alpha = q_sigma * (hprime * bt - bdt) / det;
            let beta = q_sigma * (bt * adt - bdt * at) / det;
            modes.push(SphereMode { n, alpha, beta, hs_r: hs });
        }
        Ok(Self { k, n0, radius, m, modes })
    }

    /// Default truncation: enough terms for the interior series to converge.
    pub fn with_default_terms(k: f64, m: i64, n0: f64, radius: f64, band: usize) -> Result<Self> {
        let terms = band.max((n0 * k * radius).ceil() as usize + 40).max(m.unsigned_abs() as usize + 40);
        Self::new(k, m, n0, radius, terms)
    }

    pub fn order(&self) -> i64 {
        self.m
    }

    /// Total-field coefficient of `Y_n^m` at radius `rho`.
    pub fn coefficient(&self, n: usize, rho: f64) -> Complex64 {
        let am = self.m.unsigned_abs() as usize;
        if n < am || n - am >= self.modes.len() {
            return Complex64::new(0.0, 0.0);
        }
        let mode = &self.modes[n - am];
        debug_assert_eq!(mode.n, n);
        if rho < self.radius {
            mode.alpha * (n as f64 * (rho / self.radius).ln()).exp() * modified_bessel_j(n, self.n0 * self.k * rho)
        } else {
            incident_coefficient(self.m, self.k, n, rho) + self.scattered(mode, rho)
        }
    }

    fn scattered(&self, mode: &SphereMode, rho: f64) -> Complex64 {
        mode.beta * ((mode.n + 1) as f64 * (self.radius / rho).ln()).exp() * scaled_hankel(mode.n, self.k * rho)
            / mode.hs_r
    }

    /// Field at a Cartesian point relative to the sphere center; the incident
    /// part is evaluated in closed form.
    pub fn value_at(&self, x: [f64; 3]) -> Complex64 {
        let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let phi = x[1].atan2(x[0]);
        let am = self.m.unsigned_abs() as usize;
        let nmax = am + self.modes.len() - 1;
        let t = if rho == 0.0 { 1.0 } else { x[2] / rho };
        let s = legendre_s(nmax, am, t);
        let sign = order_sign(self.m);
        let mut sum = Complex64::new(0.0, 0.0);
        let inside = rho < self.radius;
        for (i, mode) in self.modes.iter().enumerate() {
            let radial = if inside {
                self.coefficient(mode.n, rho)
            } else {
                self.scattered(mode, rho)
            };
            sum += radial * (s[i] * sign);
        }
        let mut v = sum * Complex64::from_polar(1.0, self.m as f64 * phi);
        if !inside {
            v += IncidentSpec { m_inc: self.m, k: self.k, offset: 0.0 }.value_at(x);
        }
        v
    }
}

/// Exact total field for the unit sphere of index `n0` at the origin.
pub fn exact_solution_sphere(k: f64, m_inc: i64, n0: f64, band: usize, grid: &RadialGrid) -> Result<ModeField> {
    exact_solution_sphere_radius(k, m_inc, n0, 1.0, band, grid)
}

/// As [`exact_solution_sphere`] for a sphere of any radius.
pub fn exact_solution_sphere_radius(
    k: f64,
    m_inc: i64,
    n0: f64,
    radius: f64,
    band: usize,
    grid: &RadialGrid,
) -> Result<ModeField> {
    let am = m_inc.unsigned_abs() as usize;
    if band < am {
        return Err(Error::BandTooSmall { band, order: m_inc });
    }
    let sol = SphereSolution::new(k, m_inc, n0, radius, band)?;
    let mut out = ModeField::zeros(band, grid.len());
    for (node, &rho) in grid.nodes().iter().enumerate() {
        for n in am..=band {
            out.set(node, n, m_inc, sol.coefficient(n, rho));
        }
    }
    Ok(out)
}

/// Exact total field for the unit sphere of index `n0` centered at
/// `(0, 0, d)`, re-expanded about the origin on every node.
pub fn exact_solution_shifted(
    k: f64,
    m_inc: i64,
    n0: f64,
    offset: f64,
    band: usize,
    grid: &RadialGrid,
) -> Result<ModeField> {
    exact_solution_shifted_radius(k, m_inc, n0, 1.0, offset, band, grid)
}

/// As [`exact_solution_shifted`] for a sphere of any radius.
pub fn exact_solution_shifted_radius(
    k: f64,
    m_inc: i64,
    n0: f64,
    radius: f64,
    offset: f64,
    band: usize,
    grid: &RadialGrid,
) -> Result<ModeField> {
    use rayon::prelude::*;

    let am = m_inc.unsigned_abs() as usize;
    if band < am {
        return Err(Error::BandTooSmall { band, order: m_inc });
    }
    let sol = SphereSolution::with_default_terms(k, m_inc, n0, radius, band)?;
    let sign = order_sign(m_inc);
    let q = band + (k * (grid.radius() + offset)).ceil() as usize + 40;
    let rows: Vec<Vec<Complex64>> = grid
        .nodes()
        .par_iter()
        .map(|&rho| {
            // the field is smooth in t except across the sphere surface
            let mut pieces = vec![(-1.0, 1.0)];
            if offset > 0.0 {
                let t0 = (rho * rho + offset * offset - radius * radius) / (2.0 * rho * offset);
                if t0 > -1.0 && t0 < 1.0 {
                    pieces = vec![(-1.0, t0), (t0, 1.0)];
                }
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); band - am + 1];
            for (a, b) in pieces {
                let (ts, ws) = gauss_legendre_on(q, a, b);
                for (t, w) in ts.iter().zip(&ws) {
                    let st = (1.0 - t * t).max(0.0).sqrt();
                    let x = [rho * st, 0.0, rho * t - offset];
                    let v = sol.value_at(x) * (2.0 * PI * w * sign);
                    let s = legendre_s(band, am, *t);
                    acc.iter_mut().zip(&s).for_each(|(c, sv)| *c += v * *sv);
                }
            }
            acc
        })
        .collect();
    let mut out = ModeField::zeros(band, grid.len());
    for (node, row) in rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            out.set(node, am + i, m_inc, *v);
        }
    }
    Ok(out)
}
