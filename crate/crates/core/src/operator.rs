//! The matrix-free Lippmann-Schwinger operator and its GMRES driver.
//!
//! One application of `K` is an angular stage (per radial node: synthesize
//! `u` and `m`, multiply, analyze the product back to band `F`) followed by a
//! radial stage (per mode: Chebyshev fit, running integrals, kernel
//! assembly). The system solved is `u - i K[u] = u_inc`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{modes_per_node, ModeField};
use crate::radial::{MomentTable, RadialGrid, RadialKernel};
use crate::sht::{AngularTransform, DirectTransform};

/// Discretized scattering problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub k: f64,
    pub band: usize,
    pub grid: RadialGrid,
    /// Contrast `m = 1 - n^2` at band `2F`.
    pub contrast: ModeField,
    /// Incident field at band `F`.
    pub incident: ModeField,
}

impl ProblemSpec {
    pub fn new(k: f64, band: usize, grid: RadialGrid, contrast: ModeField, incident: ModeField) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!("wavenumber must be positive, got {k}")));
        }
        if contrast.band() != 2 * band {
            return Err(Error::BandMismatch { requested: contrast.band(), available: 2 * band });
        }
        if incident.band() != band {
            return Err(Error::BandMismatch { requested: incident.band(), available: band });
        }
        if contrast.nodes() != grid.len() || incident.nodes() != grid.len() {
            return Err(Error::InvalidConfig("field sampled on a different radial grid".into()));
        }
        Ok(Self { k, band, grid, contrast, incident })
    }
}

/// Outcome of a GMRES run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// Operator applications inside the Krylov iteration.
    pub iterations: usize,
    /// Relative least-squares residual after each iteration, starting at 1.
    pub residual_history: Vec<f64>,
    /// Relative true residual `|b - A x| / |b|` of the returned iterate.
    pub achieved_tolerance: f64,
    /// Mean wall time per iteration in seconds.
    pub time_per_iteration: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 500, restart: 50 }
    }
}

/// Applies `u -> u - i K[u]` without forming a matrix.
pub struct LsOperator {
    band: usize,
    transform: DirectTransform,
    contrast: ModeField,
    // grid values of the contrast per node, None where it vanishes
    contrast_grid: Option<Vec<Option<Vec<Complex64>>>>,
    active: Vec<bool>,
    radial: RadialKernel,
    radial_work: AtomicUsize,
}

impl std::fmt::Debug for LsOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LsOperator").field("band", &self.band).field("nodes", &self.contrast.nodes()).finish()
    }
}

/// Contrast coefficients below this magnitude count as zero.
const CONTRAST_ZERO: f64 = 1e-13;
/// Upper bound on memory spent caching contrast grid values.
const CONTRAST_CACHE_BYTES: usize = 1 << 30;

impl LsOperator {
    pub fn new(spec: &ProblemSpec, moments: MomentTable) -> Result<Self> {
        let key = moments.key();
        if key.band < spec.band {
            return Err(Error::BandMismatch { requested: spec.band, available: key.band });
        }
        if key.k != spec.k {
            return Err(Error::InvalidConfig(format!("moments computed for k = {}, problem has k = {}", key.k, spec.k)));
        }
        let radial = RadialKernel::new(spec.grid.clone(), moments)?;
        let f = spec.band;
        // band 2F is enough: the integrand u m conj(Y) of every kept output
        // has degree at most 4F, integrated exactly on the band-2F grid
        let transform = DirectTransform::new(2 * f, 2 * f)?;
        let nodes = spec.grid.len();
        let active: Vec<bool> =
            (0..nodes).map(|k| spec.contrast.node_max_abs(k) > CONTRAST_ZERO).collect();
        let per_node = transform.grid().len() * std::mem::size_of::<Complex64>();
        let cached = active.iter().filter(|a| **a).count() * per_node <= CONTRAST_CACHE_BYTES;
        let contrast_grid = if cached {
            let vals: Result<Vec<Option<Vec<Complex64>>>> = (0..nodes)
                .into_par_iter()
                .map(|k| {
                    if active[k] {
                        transform.synthesize(spec.contrast.node(k), 2 * f).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect();
            Some(vals?)
        } else {
            None
        };
        Ok(Self {
            band: f,
            transform,
            contrast: spec.contrast.clone(),
            contrast_grid,
            active,
            radial,
            radial_work: AtomicUsize::new(0),
        })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn nodes(&self) -> usize {
        self.active.len()
    }

    /// Total radial multiply-adds spent so far.
    pub fn radial_work(&self) -> usize {
        self.radial_work.load(Ordering::Relaxed)
    }

    /// `I = P_F[m u]` at every node.
    pub fn product(&self, u: &ModeField) -> Result<ModeField> {
        self.check(u)?;
        let f = self.band;
        let stride = modes_per_node(f);
        let mut out = ModeField::zeros(f, self.nodes());
        out.as_mut_slice().par_chunks_mut(stride).enumerate().try_for_each(|(k, dst)| -> Result<()> {
            if !self.active[k] {
                return Ok(());
            }
            let mut vals = self.transform.synthesize(u.node(k), f)?;
            match &self.contrast_grid {
                Some(cache) => {
                    let m = cache[k].as_ref().expect("active node has cached contrast");
                    vals.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
                }
                None => {
                    let m = self.transform.synthesize(self.contrast.node(k), 2 * f)?;
                    vals.iter_mut().zip(&m).for_each(|(a, b)| *a *= b);
                }
            }
            dst.copy_from_slice(&self.transform.analyze(&vals, f)?);
            Ok(())
        })?;
        Ok(out)
    }

    /// Radial stage: `K_n^m` at every node from `I_n^m` at every node.
    pub fn radial_stage(&self, product: &ModeField) -> Result<ModeField> {
        let f = self.band;
        let nodes = self.nodes();
        let stride = modes_per_node(f);
        // mode-major copy so each mode's radial profile is contiguous
        let mut by_mode = vec![Complex64::new(0.0, 0.0); stride * nodes];
        for k in 0..nodes {
            for (i, v) in product.node(k).iter().enumerate() {
                by_mode[i * nodes + k] = *v;
            }
        }
        let mut kern = vec![Complex64::new(0.0, 0.0); stride * nodes];
        let work = AtomicUsize::new(0);
        kern.par_chunks_mut(nodes).zip(by_mode.par_chunks(nodes)).enumerate().try_for_each_init(
            || self.radial.scratch(),
            |scratch, (idx, (dst, src))| -> Result<()> {
                if src.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                    return Ok(());
                }
                let n = (idx as f64).sqrt() as usize;
                let n = if (n + 1) * (n + 1) <= idx { n + 1 } else if n * n > idx { n - 1 } else { n };
                let w = self.radial.apply(n, src, dst, scratch)?;
                work.fetch_add(w, Ordering::Relaxed);
                Ok(())
            },
        )?;
        self.radial_work.fetch_add(work.into_inner(), Ordering::Relaxed);
        let mut out = ModeField::zeros(f, nodes);
        for k in 0..nodes {
            let dst = out.node_mut(k);
            for (i, d) in dst.iter_mut().enumerate() {
                *d = kern[i * nodes + k];
            }
        }
        Ok(out)
    }

    /// `K[u]`.
    pub fn apply_kernel(&self, u: &ModeField) -> Result<ModeField> {
        let p = self.product(u)?;
        self.radial_stage(&p)
    }

    /// The system operator `u - i K[u]`.
    pub fn apply_forward(&self, u: &ModeField) -> Result<ModeField> {
        let mut k = self.apply_kernel(u)?;
        let mi = Complex64::new(0.0, -1.0);
        k.as_mut_slice().iter_mut().zip(u.as_slice()).for_each(|(kv, uv)| *kv = uv + mi * *kv);
        Ok(k)
    }

    /// Solves `u - i K[u] = incident` with restarted GMRES from a zero guess.
    pub fn solve(&self, incident: &ModeField, opts: GmresOptions) -> Result<(ModeField, SolveReport)> {
        self.check(incident)?;
        let (band, nodes) = (self.band, self.nodes());
        let apply = |x: &[Complex64]| -> Result<Vec<Complex64>> {
            let u = ModeField::from_vec(band, nodes, x.to_vec())?;
            Ok(self.apply_forward(&u)?.into_vec())
        };
        let out = gmres(apply, incident.as_slice(), opts)?;
        let x = ModeField::from_vec(band, nodes, out.x)?;
        match out.status {
            GmresStatus::Converged => Ok((x, out.report)),
            GmresStatus::MaxIterations => Err(Error::MaxIterations { best: Box::new(x), report: out.report }),
            GmresStatus::Breakdown => Err(Error::Breakdown { best: Box::new(x), report: out.report }),
        }
    }

    fn check(&self, u: &ModeField) -> Result<()> {
        if u.band() != self.band {
            return Err(Error::BandMismatch { requested: u.band(), available: self.band });
        }
        if u.nodes() != self.nodes() {
            return Err(Error::InvalidConfig(format!("field has {} nodes, operator {}", u.nodes(), self.nodes())));
        }
        Ok(())
    }
}

/// One-shot `u - i K[u]`.
pub fn apply_forward(u: &ModeField, spec: &ProblemSpec, moments: MomentTable) -> Result<ModeField> {
    LsOperator::new(spec, moments)?.apply_forward(u)
}

/// One-shot solve of `spec`.
pub fn solve(spec: &ProblemSpec, moments: MomentTable, opts: GmresOptions) -> Result<(ModeField, SolveReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("GMRES tolerance must be positive, got {}", opts.tol)));
    }
    LsOperator::new(spec, moments)?.solve(&spec.incident, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmresStatus {
    Converged,
    MaxIterations,
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct GmresOutput {
    pub x: Vec<Complex64>,
    pub report: SolveReport,
    pub status: GmresStatus,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted GMRES with modified Gram-Schmidt plus one reorthogonalization
/// pass and Givens rotations. Converges when the least-squares residual
/// drops below `tol * |b|`; the true residual of the result is reported.
pub fn gmres(
    mut apply: impl FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    b: &[Complex64],
    opts: GmresOptions,
) -> Result<GmresOutput> {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut report = SolveReport { residual_history: vec![1.0], ..Default::default() };
    let mut x = vec![zero; n];
    if bnorm == 0.0 {
        report.achieved_tolerance = 0.0;
        return Ok(GmresOutput { x, report, status: GmresStatus::Converged });
    }
    let restart = opts.restart.max(1);
    let start = Instant::now();
    let mut r = b.to_vec();
    let mut cycle = 0;
    let status = loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        report.achieved_tolerance = rel;
        if rel <= opts.tol {
            break GmresStatus::Converged;
        }
        if report.iterations >= opts.max_iter {
            break GmresStatus::MaxIterations;
        }
        if cycle > 0 {
            report.restarts += 1;
            report.residual_history.push(rel);
        }
        cycle += 1;
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut breakdown = false;
        let mut ls_converged = false;
        for j in 0..restart {
            let mut w = apply(&basis[j])?;
            report.iterations += 1;
            let mut col = vec![zero; j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(v, &w);
                    col[i] += hij;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
                }
            }
            let hnext = norm(&w);
            col[j + 1] = Complex64::new(hnext, 0.0);
            for i in 0..j {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                (a.norm() / rho, a / a.norm() * bb.conj() / rho)
            };
            col[j] = c * a + s * bb;
            col[j + 1] = zero;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s.conj() * gj);
            h.push(col);
            let resid = g[j + 1].norm() / bnorm;
            report.residual_history.push(resid);
            let scale: f64 = h[j].iter().map(|v| v.norm()).fold(hnext, f64::max);
            if hnext <= 1e-14 * scale {
                breakdown = true;
            }
            if resid <= opts.tol {
                ls_converged = true;
            }
            if ls_converged || breakdown || report.iterations >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // back substitution for the Krylov coefficients
        let m = h.len();
        let mut y = vec![zero; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for l in i + 1..m {
                s -= h[l][i] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += yi * vk);
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(bk, ak)| bk - ak).collect();
        let true_rel = norm(&r) / bnorm;
        report.achieved_tolerance = true_rel;
        if ls_converged && true_rel <= 10.0 * opts.tol {
            // least-squares and true residual agree to within roundoff
            break GmresStatus::Converged;
        }
        if breakdown && !ls_converged && true_rel > opts.tol {
            break GmresStatus::Breakdown;
        }
    };
    if report.iterations > 0 {
        report.time_per_iteration = start.elapsed().as_secs_f64() / report.iterations as f64;
    }
    Ok(GmresOutput { x, report, status })
}

/// Relative sup-norm difference of two fields over all radial nodes and the
/// points of the band-`F` angular grid.
pub fn field_error(u: &ModeField, reference: &ModeField) -> Result<f64> {
    if u.band() != reference.band() {
        return Err(Error::BandMismatch { requested: u.band(), available: reference.band() });
    }
    if u.nodes() != reference.nodes() {
        return Err(Error::InvalidConfig("fields live on different radial grids".into()));
    }
    let band = u.band();
    let t = DirectTransform::new(band, band)?;
    let (num, den) = (0..u.nodes())
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let a = t.synthesize(u.node(k), band)?;
            let b = t.synthesize(reference.node(k), band)?;
            let num = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            let den = b.iter().map(|y| y.norm()).fold(0.0, f64::max);
            Ok((num, den))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))?;
    Ok(if den == 0.0 { if num == 0.0 { 0.0 } else { f64::INFINITY } } else { num / den })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{build_grid, precompute_moments};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(band: usize, nodes: usize, seed: u64) -> ModeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..modes_per_node(band) * nodes)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ModeField::from_vec(band, nodes, data).unwrap()
    }

    fn setup(band: usize, contrast: ModeField) -> (ProblemSpec, MomentTable) {
        let grid = build_grid(2.0, 2, 4).unwrap();
        let inc = random_field(band, grid.len(), 99);
        let spec = ProblemSpec::new(1.0, band, grid.clone(), contrast, inc).unwrap();
        let mom = precompute_moments(&grid, 1.0, band).unwrap();
        (spec, mom)
    }

    #[test]
    fn no_scatterer_is_identity() {
        let (spec, mom) = setup(3, ModeField::zeros(6, 8));
        let u = random_field(3, 8, 1);
        assert_eq!(apply_forward(&u, &spec, mom.clone()).unwrap(), u);
        let (x, rep) = solve(&spec, mom, GmresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(x.as_slice().iter().zip(spec.incident.as_slice()).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    #[test]
    fn zero_maps_to_zero_and_kernel_is_linear() {
        let c = random_field(6, 8, 4);
        let (spec, mom) = setup(3, c);
        let op = LsOperator::new(&spec, mom).unwrap();
        let z = ModeField::zeros(3, 8);
        assert!(op.apply_forward(&z).unwrap().norm() == 0.0);
        let u = random_field(3, 8, 5);
        let v = random_field(3, 8, 6);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let mut w = u.clone();
        w.as_mut_slice().iter_mut().zip(v.as_slice()).for_each(|(x, y)| *x = a * *x + b * y);
        let kw = op.apply_kernel(&w).unwrap();
        let ku = op.apply_kernel(&u).unwrap();
        let kv = op.apply_kernel(&v).unwrap();
        let scale = kw.norm();
        for i in 0..kw.as_slice().len() {
            let lin = a * ku.as_slice()[i] + b * kv.as_slice()[i];
            assert!((kw.as_slice()[i] - lin).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn gmres_solves_small_dense_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let a: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let d = if i % (n + 1) == 0 { 4.0 } else { 0.0 };
                Complex64::new(d + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
            })
            .collect();
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mul = |x: &[Complex64]| -> Result<Vec<Complex64>> {
            Ok((0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect())
        };
        for restart in [5usize, 50] {
            let out = gmres(mul, &b, GmresOptions { tol: 1e-12, max_iter: 300, restart }).unwrap();
            assert_eq!(out.status, GmresStatus::Converged);
            assert!(out.report.achieved_tolerance < 1e-11);
            // non-increasing within each cycle
            let mut start = 0;
            for cyc in out.report.residual_history.chunks(restart + 1) {
                assert!(cyc.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "cycle at {start}");
                start += cyc.len();
            }
        }
        let out = gmres(mul, &b, GmresOptions { tol: 1e-14, max_iter: 3, restart: 50 }).unwrap();
        assert_eq!(out.status, GmresStatus::MaxIterations);
        assert_eq!(out.report.iterations, 3);
    }

    #[test]
    fn gmres_reports_breakdown_on_singular_system() {
        // A = diag(1, 0): b outside the range
        let mul = |x: &[Complex64]| -> Result<Vec<Complex64>> { Ok(vec![x[0], Complex64::new(0.0, 0.0)]) };
        let b = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let out = gmres(mul, &b, GmresOptions { tol: 1e-10, max_iter: 10, restart: 5 }).unwrap();
        assert_eq!(out.status, GmresStatus::Breakdown);
        assert!((out.x[0] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn field_error_examples() {
        let r = random_field(4, 3, 8);
        assert_eq!(field_error(&r, &r).unwrap(), 0.0);
        let mut two = r.clone();
        two.as_mut_slice().iter_mut().for_each(|v| *v *= 2.0);
        assert!((field_error(&two, &r).unwrap() - 1.0).abs() < 1e-14);
        let mut z = ModeField::zeros(2, 1);
        z.set(0, 0, 0, Complex64::new((4.0 * std::f64::consts::PI).sqrt(), 0.0));
        let mut p = z.clone();
        p.set(0, 0, 0, z.get(0, 0, 0) + 1e-6);
        let e = field_error(&p, &z).unwrap();
        assert!((e - 1e-6 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!(field_error(&r, &ModeField::zeros(3, 3)).is_err());
    }
}
