//! Radial discretization and the per-mode radial kernel.
//!
//! `[0, R]` is cut into `Ni` equal intervals carrying `Nd` first-kind
//! Chebyshev nodes each. Inside an interval the nodes split it further into
//! `Nd + 1` sub-segments; integrals of `I_n^m` against the Bessel kernels are
//! accumulated sub-segment by sub-segment from precomputed moments.
//!
//! With the rescaled Bessel functions `jt_n`, `yt_n` the kernel reads
//!
//! ```text
//! K_n(a) = i k^2/(2n+1) [ yt_n(ka) P(a) + jt_n(ka) S(a) ] + c3(a) P(R)
//! P(a)   = int_0^a (rho/a)^(n+1) rho jt_n(k rho) I(rho) d rho
//! S(a)   = int_a^R (a/rho)^n     rho yt_n(k rho) I(rho) d rho
//! c3(a)  = -k^2 jt_n(ka) (ka)^n (kR)^(n+1) / ((2n+1)!!)^2
//! ```
//!
//! so every power ratio that appears is at most one. Moments are stored with
//! the same per-sub-segment normalization, which keeps them O(1) for any
//! degree; the log of the normalization is kept alongside for reconstruction.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::specfun::{
    chebyshev_eval, chebyshev_nodes, gauss_legendre, ln_double_factorial, modified_bessel_j,
    modified_bessel_y,
};

/// `Ni` equal intervals on `[0, R]` with `Nd` Chebyshev nodes each.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    intervals: usize,
    order: usize,
    nodes: Vec<f64>,
}

/// Builds the radial grid; nodes are ascending across the whole ball.
pub fn build_grid(radius: f64, intervals: usize, order: usize) -> Result<RadialGrid> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    if intervals < 1 {
        return Err(Error::InvalidConfig("need at least one radial interval".into()));
    }
    if order < 2 {
        return Err(Error::InvalidConfig(format!("interpolation order must be at least 2, got {order}")));
    }
    let x = chebyshev_nodes(order);
    let h = radius / intervals as f64;
    let mut nodes = Vec::with_capacity(intervals * order);
    for j in 0..intervals {
        let u0 = j as f64 * h;
        nodes.extend(x.iter().map(|t| u0 + 0.5 * h * (t + 1.0)));
    }
    Ok(RadialGrid { radius, intervals, order, nodes })
}

impl RadialGrid {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize, i: usize) -> f64 {
        self.nodes[j * self.order + i]
    }

    /// `(u0, u1)` of interval `j`.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        let h = self.radius / self.intervals as f64;
        let u1 = if j + 1 == self.intervals { self.radius } else { (j + 1) as f64 * h };
        (j as f64 * h, u1)
    }

    /// Sub-segment `s` of interval `j`, `s = 0..=Nd`.
    pub fn sub_segment(&self, j: usize, s: usize) -> (f64, f64) {
        let (u0, u1) = self.interval(j);
        let lo = if s == 0 { u0 } else { self.node(j, s - 1) };
        let hi = if s == self.order { u1 } else { self.node(j, s) };
        (lo, hi)
    }
}

/// Interpolating Chebyshev fit on the first-kind nodes of one interval.
#[derive(Debug, Clone)]
pub struct ChebyshevFit {
    order: usize,
    // row l: weights producing c_l from the node values
    matrix: Vec<f64>,
}

impl ChebyshevFit {
    pub fn new(order: usize) -> Self {
        let x = chebyshev_nodes(order);
        let mut matrix = vec![0.0; order * order];
        for l in 0..order {
            let scale = if l == 0 { 1.0 } else { 2.0 } / order as f64;
            for (i, &xi) in x.iter().enumerate() {
                matrix[l * order + i] = scale * chebyshev_eval(l, -1.0, 1.0, xi);
            }
        }
        Self { order, matrix }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fit_into(&self, values: &[Complex64], coeffs: &mut [Complex64]) {
        let nd = self.order;
        for (l, c) in coeffs[..nd].iter_mut().enumerate() {
            let row = &self.matrix[l * nd..(l + 1) * nd];
            *c = values.iter().zip(row).map(|(v, w)| v * w).sum();
        }
    }
}

/// Chebyshev coefficients of the interpolant through `values` at the
/// ascending first-kind nodes.
pub fn chebyshev_fit(values: &[Complex64]) -> Vec<Complex64> {
    let fit = ChebyshevFit::new(values.len());
    let mut c = vec![Complex64::new(0.0, 0.0); values.len()];
    fit.fit_into(values, &mut c);
    c
}

/// Identifies the data a moment table was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentKey {
    pub k: f64,
    pub radius: f64,
    pub intervals: usize,
    pub order: usize,
    pub band: usize,
}

/// Bessel-weighted Chebyshev moments over every sub-segment.
///
/// For sub-segment `[s0, s1]` of interval `[u0, u1]`:
///
/// ```text
/// jm = int (rho/s1)^(n+1) rho jt_n(k rho) T_l(rho) d rho
/// ym = int (s0/rho)^n     rho yt_n(k rho) T_l(rho) d rho     (0 when s0 = 0)
/// ```
///
/// with `T_l` mapped to `[u0, u1]`. The raw moments with weights
/// `rho^(n+2)` and `rho^(1-n)` are `exp(j_log_scale) * jm` and
/// `exp(y_log_scale) * ym`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    key: MomentKey,
    jm: Vec<f64>,
    ym: Vec<f64>,
    j_log_scale: Vec<f64>,
    y_log_scale: Vec<f64>,
    // (s0/s1)^(n+1) and (s0/s1)^n per sub-segment, for the running sums
    j_decay: Vec<f64>,
    y_decay: Vec<f64>,
}

impl MomentTable {
    pub fn key(&self) -> MomentKey {
        self.key
    }

    fn segments(&self) -> usize {
        self.key.order + 1
    }

    #[inline]
    fn seg_index(&self, n: usize, j: usize, s: usize) -> usize {
        (n * self.key.intervals + j) * self.segments() + s
    }

    #[inline]
    fn moment_index(&self, n: usize, j: usize, s: usize) -> usize {
        self.seg_index(n, j, s) * self.key.order
    }

    /// Normalized j-moments `jm[l]` of sub-segment `(j, s)` at degree `n`.
    pub fn j_moments(&self, n: usize, j: usize, s: usize) -> &[f64] {
        let i = self.moment_index(n, j, s);
        &self.jm[i..i + self.key.order]
    }

    pub fn y_moments(&self, n: usize, j: usize, s: usize) -> &[f64] {
        let i = self.moment_index(n, j, s);
        &self.ym[i..i + self.key.order]
    }

    /// `ln` of the factor turning `jm` into the raw `rho^(n+2)` moment.
    pub fn j_log_scale(&self, n: usize, j: usize, s: usize) -> f64 {
        self.j_log_scale[self.seg_index(n, j, s)]
    }

    pub fn y_log_scale(&self, n: usize, j: usize, s: usize) -> f64 {
        self.y_log_scale[self.seg_index(n, j, s)]
    }

    fn decays(grid_key: &MomentKey, grid: &RadialGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let segs = grid_key.order + 1;
        let total = (grid_key.band + 1) * grid_key.intervals * segs;
        let mut jd = Vec::with_capacity(total);
        let mut yd = Vec::with_capacity(total);
        let mut jl = Vec::with_capacity(total);
        let mut yl = Vec::with_capacity(total);
        for n in 0..=grid_key.band {
            let nf = n as f64;
            for j in 0..grid_key.intervals {
                for s in 0..segs {
                    let (s0, s1) = grid.sub_segment(j, s);
                    let lr = (s0 / s1).ln();
                    jd.push(((nf + 1.0) * lr).exp());
                    yd.push(if n == 0 { 1.0 } else { (nf * lr).exp() });
                    jl.push((nf + 1.0) * s1.ln());
                    yl.push(if n == 0 { 0.0 } else { -nf * s0.ln() });
                }
            }
        }
        (jd, yd, jl, yl)
    }

    /// Writes the table to a versioned binary cache file.
    ///
    /// Layout, all little-endian:
    ///
    /// ```text
    /// magic     8 bytes  "LSMOMTAB"
    /// version   u32      1
    /// k, R      f64, f64
    /// Ni, Nd, F u32 x 3
    /// count     u64      number of f64 values in the payload
    /// sha256    32 bytes digest of the payload bytes
    /// payload   jm, ym      ((F+1) * Ni * (Nd+1) * Nd values each, index ((n*Ni + j)*(Nd+1) + s)*Nd + l)
    ///           j_log_scale, y_log_scale   ((F+1) * Ni * (Nd+1) values each)
    /// ```
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut payload = Vec::with_capacity(8 * (2 * self.jm.len() + 2 * self.j_log_scale.len()));
        for v in self.jm.iter().chain(&self.ym).chain(&self.j_log_scale).chain(&self.y_log_scale) {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&payload);
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.key.k.to_le_bytes())?;
        w.write_all(&self.key.radius.to_le_bytes())?;
        for v in [self.key.intervals, self.key.order, self.key.band] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&((payload.len() / 8) as u64).to_le_bytes())?;
        w.write_all(&digest)?;
        w.write_all(&payload)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a cache file, checking format, key and checksum against `grid`, `k`, `band`.
    pub fn load(path: &Path, grid: &RadialGrid, k: f64, band: usize) -> Result<MomentTable> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache("not a moment cache file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported cache version {version}")));
        }
        let key = MomentKey {
            k: read_f64(&mut r)?,
            radius: read_f64(&mut r)?,
            intervals: read_u32(&mut r)? as usize,
            order: read_u32(&mut r)? as usize,
            band: read_u32(&mut r)? as usize,
        };
        let expected =
            MomentKey { k, radius: grid.radius(), intervals: grid.intervals(), order: grid.order(), band };
        if key != expected {
            return Err(Error::Cache(format!("cache key {key:?} does not match {expected:?}")));
        }
        let count = read_u64(&mut r)? as usize;
        let segs = (band + 1) * key.intervals * (key.order + 1);
        let moments = segs * key.order;
        if count != 2 * moments + 2 * segs {
            return Err(Error::Cache(format!("payload holds {count} values, expected {}", 2 * moments + 2 * segs)));
        }
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest)?;
        let mut payload = vec![0u8; count * 8];
        r.read_exact(&mut payload)?;
        if Sha256::digest(&payload).as_slice() != digest {
            return Err(Error::Cache("checksum mismatch".into()));
        }
        let values: Vec<f64> =
            payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let (jm, rest) = values.split_at(moments);
        let (ym, rest) = rest.split_at(moments);
        let (jl, yl) = rest.split_at(segs);
        let (j_decay, y_decay, _, _) = MomentTable::decays(&key, grid);
        Ok(MomentTable {
            key,
            jm: jm.to_vec(),
            ym: ym.to_vec(),
            j_log_scale: jl.to_vec(),
            y_log_scale: yl.to_vec(),
            j_decay,
            y_decay,
        })
    }
}

const CACHE_MAGIC: &[u8; 8] = b"LSMOMTAB";
const CACHE_VERSION: u32 = 1;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Gauss points used per (graded piece of a) sub-segment at degree `n`.
pub fn moment_quadrature_order(order: usize, n: usize) -> usize {
    2 * (order + n / 4) + 8
}

/// Integrates the normalized j- and y-moments of one sub-segment with `q`
/// points per piece, writing `order` values into each output.
fn segment_moments(
    n: usize,
    k: f64,
    (u0, u1): (f64, f64),
    (s0, s1): (f64, f64),
    q: usize,
    jm: &mut [f64],
    ym: &mut [f64],
) {
    let order = jm.len();
    jm.iter_mut().chain(ym.iter_mut()).for_each(|v| *v = 0.0);
    if s1 <= s0 {
        return;
    }
    let (x, w) = gauss_legendre(q);
    let nf = n as f64;
    let mut tl = vec![0.0; order];
    let mut accumulate = |a: f64, b: f64, want_j: bool, want_y: bool| {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            let rho = mid + half * xi;
            let t = (rho - 0.5 * (u1 + u0)) / (0.5 * (u1 - u0));
            tl[0] = 1.0;
            if order > 1 {
                tl[1] = t;
            }
            for l in 2..order {
                tl[l] = 2.0 * t * tl[l - 1] - tl[l - 2];
            }
            if want_j {
                let f = wi * half * ((nf + 1.0) * (rho / s1).ln()).exp() * rho * modified_bessel_j(n, k * rho);
                jm.iter_mut().zip(&tl).for_each(|(m, t)| *m += f * t);
            }
            if want_y {
                let weight = if n == 0 { 1.0 } else { (nf * (s0 / rho).ln()).exp() };
                let f = wi * half * weight * rho * modified_bessel_y(n, k * rho);
                ym.iter_mut().zip(&tl).for_each(|(m, t)| *m += f * t);
            }
        }
    };
    accumulate(s0, s1, true, false);
    if s0 == 0.0 {
        return;
    }
    // (s0/rho)^n has a pole of order n at the origin; grade geometrically so
    // that each piece spans a ratio of at most e and the exponent changes by
    // at most q/2
    let max_log_ratio = if n == 0 { f64::INFINITY } else { (0.5 * q as f64 / nf).min(1.0) };
    let total = (s1 / s0).ln();
    let pieces = (total / max_log_ratio).ceil().max(1.0) as usize;
    let step = total / pieces as f64;
    for p in 0..pieces {
        let a = s0 * (p as f64 * step).exp();
        let b = if p + 1 == pieces { s1 } else { s0 * ((p + 1) as f64 * step).exp() };
        accumulate(a, b, false, true);
    }
}

/// Computes every moment for degrees `0..=band`.
pub fn precompute_moments(grid: &RadialGrid, k: f64, band: usize) -> Result<MomentTable> {
    precompute_moments_with(grid, k, band, moment_quadrature_order)
}

/// As [`precompute_moments`] with a custom quadrature order rule.
pub fn precompute_moments_with(
    grid: &RadialGrid,
    k: f64,
    band: usize,
    rule: impl Fn(usize, usize) -> usize + Sync,
) -> Result<MomentTable> {
    use rayon::prelude::*;

    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidConfig(format!("wavenumber must be positive, got {k}")));
    }
    let key = MomentKey { k, radius: grid.radius(), intervals: grid.intervals(), order: grid.order(), band };
    let order = grid.order();
    let per_degree = grid.intervals() * (order + 1) * order;
    let mut jm = vec![0.0; (band + 1) * per_degree];
    let mut ym = vec![0.0; (band + 1) * per_degree];
    jm.par_chunks_mut(per_degree).zip(ym.par_chunks_mut(per_degree)).enumerate().for_each(
        |(n, (jn, yn))| {
            let q = rule(order, n);
            for j in 0..grid.intervals() {
                for s in 0..=order {
                    let i = (j * (order + 1) + s) * order;
                    segment_moments(
                        n,
                        k,
                        grid.interval(j),
                        grid.sub_segment(j, s),
                        q,
                        &mut jn[i..i + order],
                        &mut yn[i..i + order],
                    );
                }
            }
        },
    );
    let (j_decay, y_decay, j_log_scale, y_log_scale) = MomentTable::decays(&key, grid);
    Ok(MomentTable { key, jm, ym, j_log_scale, y_log_scale, j_decay, y_decay })
}

/// Real prefactors of the three kernel terms at every (degree, node), kept as
/// `(ln|c|, sign)` pairs and expanded once on construction.
#[derive(Debug, Clone)]
pub struct KernelCoefficients {
    band: usize,
    nodes: usize,
    // c1 multiplies i P(a), c2 multiplies i S(a), c3 multiplies P(R)
    log: [Vec<(f64, f64)>; 3],
    value: [Vec<f64>; 3],
}

/// Largest natural log that still exponentiates to a finite double.
const LN_MAX: f64 = 709.0;

impl KernelCoefficients {
    pub fn new(grid: &RadialGrid, k: f64, band: usize) -> Result<Self> {
        let nodes = grid.len();
        let mut log: [Vec<(f64, f64)>; 3] = Default::default();
        for l in log.iter_mut() {
            l.reserve((band + 1) * nodes);
        }
        let ln_k2 = 2.0 * k.ln();
        let ln_kr = (k * grid.radius()).ln();
        for n in 0..=band {
            let nf = n as f64;
            let ln_pre = ln_k2 - (2.0 * nf + 1.0).ln();
            let ln_df = ln_double_factorial(2 * n + 1);
            for &a in grid.nodes() {
                let yt = modified_bessel_y(n, k * a);
                let jt = modified_bessel_j(n, k * a);
                log[0].push(signed_log(yt, ln_pre));
                log[1].push(signed_log(jt, ln_pre));
                let ln3 = ln_k2 + nf * (k * a).ln() + (nf + 1.0) * ln_kr - 2.0 * ln_df;
                let (l3, s3) = signed_log(jt, ln3);
                log[2].push((l3, -s3));
            }
        }
        let mut value: [Vec<f64>; 3] = Default::default();
        for (v, l) in value.iter_mut().zip(&log) {
            *v = Vec::with_capacity(l.len());
            for (i, &(ln, sign)) in l.iter().enumerate() {
                if ln > LN_MAX {
                    return Err(Error::ScalingOverflow { degree: i / nodes, node: i % nodes });
                }
                v.push(sign * ln.exp());
            }
        }
        Ok(Self { band, nodes, log, value })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// `(ln|c_i|, sign)` for term `i` in `0..3`.
    pub fn log_parts(&self, term: usize, n: usize, node: usize) -> (f64, f64) {
        self.log[term][n * self.nodes + node]
    }

    #[inline]
    fn values(&self, n: usize, node: usize) -> (f64, f64, f64) {
        let i = n * self.nodes + node;
        (self.value[0][i], self.value[1][i], self.value[2][i])
    }
}

fn signed_log(x: f64, ln_extra: f64) -> (f64, f64) {
    if x == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (x.abs().ln() + ln_extra, x.signum())
    }
}

/// Running integrals of one mode at every node.
#[derive(Debug, Clone)]
pub struct CumulativeIntegrals {
    /// `P(a)` at every node.
    pub prefix: Vec<Complex64>,
    /// `S(a)` at every node.
    pub suffix: Vec<Complex64>,
    /// `P(R)`.
    pub full: Complex64,
    /// Multiply-adds spent, for cost accounting.
    pub work: usize,
}

/// Prefix and suffix integrals of `I_n^m` given its per-interval Chebyshev
/// coefficients (`Ni * Nd` values, interval-major).
pub fn cumulative_integrals(coeffs: &[Complex64], n: usize, moments: &MomentTable) -> CumulativeIntegrals {
    let key = moments.key();
    let mut out = CumulativeIntegrals {
        prefix: vec![Complex64::new(0.0, 0.0); key.intervals * key.order],
        suffix: vec![Complex64::new(0.0, 0.0); key.intervals * key.order],
        full: Complex64::new(0.0, 0.0),
        work: 0,
    };
    out.full = cumulative_into(coeffs, n, moments, &mut out.prefix, &mut out.suffix, &mut out.work);
    out
}

fn cumulative_into(
    coeffs: &[Complex64],
    n: usize,
    moments: &MomentTable,
    prefix: &mut [Complex64],
    suffix: &mut [Complex64],
    work: &mut usize,
) -> Complex64 {
    let key = moments.key();
    let (ni, nd) = (key.intervals, key.order);
    debug_assert!(n <= key.band);
    let dot = |m: &[f64], c: &[Complex64]| -> Complex64 { c.iter().zip(m).map(|(c, m)| c * m).sum() };
    let mut p = Complex64::new(0.0, 0.0);
    for j in 0..ni {
        let c = &coeffs[j * nd..(j + 1) * nd];
        for s in 0..=nd {
            let idx = moments.seg_index(n, j, s);
            p = p * moments.j_decay[idx] + dot(moments.j_moments(n, j, s), c);
            if s < nd {
                prefix[j * nd + s] = p;
            }
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..ni).rev() {
        let c = &coeffs[j * nd..(j + 1) * nd];
        for s in (0..=nd).rev() {
            // value at the right end of sub-segment s is the running sum so far
            if s < nd {
                suffix[j * nd + s] = acc;
            }
            let idx = moments.seg_index(n, j, s);
            acc = acc * moments.y_decay[idx] + dot(moments.y_moments(n, j, s), c);
        }
    }
    *work += 2 * ni * (nd + 1) * (nd + 1);
    p
}

/// `K_n(a)` at node `node` from its running integrals.
pub fn assemble_kernel(
    prefix: Complex64,
    suffix: Complex64,
    full: Complex64,
    n: usize,
    node: usize,
    kcoef: &KernelCoefficients,
) -> Result<Complex64> {
    let (c1, c2, c3) = kcoef.values(n, node);
    let v = Complex64::i() * (prefix * c1 + suffix * c2) + full * c3;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::ScalingOverflow { degree: n, node });
    }
    Ok(v)
}

/// Everything needed to map `I_n^m` at the nodes to `K_n^m` at the nodes.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    grid: RadialGrid,
    moments: MomentTable,
    kcoef: KernelCoefficients,
    fit: ChebyshevFit,
}

/// Scratch buffers for [`RadialKernel::apply`].
#[derive(Debug, Clone)]
pub struct RadialScratch {
    coeffs: Vec<Complex64>,
    prefix: Vec<Complex64>,
    suffix: Vec<Complex64>,
}

impl RadialKernel {
    pub fn new(grid: RadialGrid, moments: MomentTable) -> Result<Self> {
        let key = moments.key();
        if key.intervals != grid.intervals() || key.order != grid.order() || key.radius != grid.radius() {
            return Err(Error::InvalidConfig("moment table was computed for a different grid".into()));
        }
        let kcoef = KernelCoefficients::new(&grid, key.k, key.band)?;
        let fit = ChebyshevFit::new(grid.order());
        Ok(Self { grid, moments, kcoef, fit })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn moments(&self) -> &MomentTable {
        &self.moments
    }

    pub fn band(&self) -> usize {
        self.moments.key().band
    }

    pub fn k(&self) -> f64 {
        self.moments.key().k
    }

    pub fn scratch(&self) -> RadialScratch {
        let len = self.grid.len();
        let z = Complex64::new(0.0, 0.0);
        RadialScratch { coeffs: vec![z; len], prefix: vec![z; len], suffix: vec![z; len] }
    }

    /// Kernel values of degree `n` at every node for `I` sampled at every
    /// node. Returns the radial work count.
    pub fn apply(
        &self,
        n: usize,
        values: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut RadialScratch,
    ) -> Result<usize> {
        let nd = self.grid.order();
        for (v, c) in values.chunks_exact(nd).zip(scratch.coeffs.chunks_exact_mut(nd)) {
            self.fit.fit_into(v, c);
        }
        let mut work = self.grid.intervals() * nd * nd;
        let full = cumulative_into(
            &scratch.coeffs,
            n,
            &self.moments,
            &mut scratch.prefix,
            &mut scratch.suffix,
            &mut work,
        );
        for (node, o) in out.iter_mut().enumerate() {
            *o = assemble_kernel(scratch.prefix[node], scratch.suffix[node], full, n, node, &self.kcoef)?;
        }
        Ok(work)
    }
}
