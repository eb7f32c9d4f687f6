//! Cross-checks of the fast pipeline against the brute-force oracles.
//!
//! Shared by the `selftest` subcommand and the acceptance suite. Every check
//! is deterministic (fixed seeds) and runs in seconds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{modes_per_node, ModeField};
use crate::operator::{apply_forward, ProblemSpec};
use crate::oracle::{addition_theorem_check, kernel_direct, ls_apply_dense, DenseRule};
use crate::radial::{build_grid, precompute_moments, RadialKernel};
use crate::scenarios::project_function;
use crate::sht::{evaluate_at, pointwise_product_project, AngularTransform, DirectTransform};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn random_coeffs(rng: &mut ChaCha8Rng, band: usize) -> Vec<Complex64> {
    (0..modes_per_node(band)).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Fast operator against target-centred dense quadrature for a cubic,
/// band-3 integrand, so the discretization is exact and the oracle alone
/// limits the agreement.
pub fn oracle_equivalence() -> Result<CheckOutcome> {
    const TOL: f64 = 1e-5;
    let (k, band, radius) = (2.0, 3, 1.0);
    let grid = build_grid(radius, 2, 4)?;
    let u = |p: [f64; 3]| Complex64::new(1.0 + 0.3 * p[0] - 0.2 * p[2], 0.4 * p[1] - 0.1 * p[2]);
    let m = |p: [f64; 3]| {
        Complex64::new(0.5 - 0.4 * (p[0] * p[0] + p[1] * p[1]) + 0.3 * p[0] * p[2], 0.2 * p[1] * p[2] - 0.1 * p[2])
    };
    let uc = project_function(u, &grid, band)?;
    let mc = project_function(m, &grid, 2 * band)?;
    let spec = ProblemSpec::new(k, band, grid.clone(), mc, uc.clone())?;
    let out = apply_forward(&uc, &spec, precompute_moments(&grid, k, band)?)?;
    let dirs: [(f64, f64); 4] = [(0.3, 0.2), (1.1, 2.5), (2.0, -1.2), (2.8, 0.7)];
    let mut targets = Vec::new();
    let mut fast = Vec::new();
    for (j, &rho) in grid.nodes().iter().enumerate() {
        for &(th, ph) in &dirs {
            targets.push([rho * th.sin() * ph.cos(), rho * th.sin() * ph.sin(), rho * th.cos()]);
            fast.push(evaluate_at(out.node(j), band, th, ph));
        }
    }
    let dense = ls_apply_dense(&targets, &u, &m, radius, k, DenseRule::default());
    let scale = dense.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let err = fast.iter().zip(&dense.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    Ok(CheckOutcome::new(
        "oracle equivalence",
        err <= TOL,
        format!("max relative difference {err:.2e} over {} points (tol {TOL:.0e})", targets.len()),
    ))
}

/// Addition theorem at 30 terms for separated radii.
pub fn addition_theorem() -> Result<CheckOutcome> {
    const TOL: f64 = 1e-12;
    let cases = [
        ([0.0, 0.0, 2.0], [0.0, 0.0, 0.5], 1.0),
        ([0.3, -1.1, 0.9], [-0.1, 0.15, 0.05], 2.3),
        ([1.5, 1.0, -0.4], [0.2, -0.3, 0.1], 0.7),
        ([-0.2, 0.1, 0.3], [2.0, -1.5, 1.0], 1.6),
    ];
    let mut worst: f64 = 0.0;
    for (x, y, k) in cases {
        let (direct, series) = addition_theorem_check(x, y, k, 30)?;
        worst = worst.max((direct - series).norm() / direct.norm());
    }
    Ok(CheckOutcome::new(
        "addition theorem",
        worst <= TOL,
        format!("max relative error {worst:.2e} at N = 30 (tol {TOL:.0e})"),
    ))
}

/// Scaled moment-based kernel against raw Bessel quadrature, `n <= 20`.
pub fn scaled_kernel_identity() -> Result<CheckOutcome> {
    const TOL: f64 = 1e-9;
    let (k, band) = (3.0, 20);
    let grid = build_grid(2.0, 3, 6)?;
    let kernel = RadialKernel::new(grid.clone(), precompute_moments(&grid, k, band)?)?;
    let mut scratch = kernel.scratch();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let mut worst: f64 = 0.0;
    for n in 0..=band {
        let p: Vec<Complex64> = (0..6).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f = |x: f64| p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * (x / 2.0) + c);
        let vals: Vec<Complex64> = grid.nodes().iter().map(|&x| f(x)).collect();
        kernel.apply(n, &vals, &mut out, &mut scratch)?;
        for (&a, v) in grid.nodes().iter().zip(&out) {
            let direct = kernel_direct(n, k, grid.radius(), a, &f);
            worst = worst.max((v - direct).norm() / direct.norm());
        }
    }
    Ok(CheckOutcome::new(
        "scaled kernel identity",
        worst <= TOL,
        format!("max relative difference {worst:.2e} over n <= 20 and all nodes (tol {TOL:.0e})"),
    ))
}

/// Roundtrip, Parseval and product anti-aliasing on random draws, `F <= 8`.
pub fn transform_properties() -> Result<CheckOutcome> {
    const ROUNDTRIP: f64 = 1e-12;
    const PARSEVAL: f64 = 1e-10;
    const ALIAS: f64 = 1e-11;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut roundtrip, mut parseval, mut alias) = (0.0f64, 0.0f64, 0.0f64);
    for band in 1..=8 {
        let t = DirectTransform::new(band, band)?;
        let t2 = DirectTransform::new(2 * band, 2 * band)?;
        for _ in 0..8 {
            let c = random_coeffs(&mut rng, band);
            let values = t.synthesize(&c, band)?;
            let back = t.analyze(&values, band)?;
            roundtrip = roundtrip.max(c.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));

            let g = t.grid();
            let energy: f64 = c.iter().map(|v| v.norm_sqr()).sum();
            let quad: f64 = (0..g.n_lat())
                .map(|i| g.cell_weight(i) * values[i * g.n_lon()..(i + 1) * g.n_lon()].iter().map(|v| v.norm_sqr()).sum::<f64>())
                .sum();
            parseval = parseval.max((energy - quad).abs() / energy);

            let m = random_coeffs(&mut rng, 2 * band);
            let fast = t2.product_project(&c, band, &m, 2 * band, band)?;
            let full = pointwise_product_project(&c, band, &m)?;
            let full = ModeField::from_vec(3 * band, 1, full)?.with_band(band);
            alias = alias.max(fast.iter().zip(full.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        }
    }
    let passed = roundtrip < ROUNDTRIP && parseval < PARSEVAL && alias < ALIAS;
    Ok(CheckOutcome::new(
        "transform properties",
        passed,
        format!(
            "roundtrip {roundtrip:.2e} (tol {ROUNDTRIP:.0e}), Parseval {parseval:.2e} (tol {PARSEVAL:.0e}), \
             anti-aliasing {alias:.2e} (tol {ALIAS:.0e}); 64 draws, F = 1..8"
        ),
    ))
}

/// All oracle checks, in a fixed order. A check that errors counts as failed.
pub fn oracle_suite() -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn() -> Result<CheckOutcome>); 4] = [
        ("oracle equivalence", oracle_equivalence),
        ("addition theorem", addition_theorem),
        ("scaled kernel identity", scaled_kernel_identity),
        ("transform properties", transform_properties),
    ];
    checks
        .iter()
        .map(|(name, check)| check().unwrap_or_else(|e| CheckOutcome::new(name, false, format!("error: {e}"))))
        .collect()
}
