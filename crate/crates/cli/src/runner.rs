//! Solve and sweep drivers and their output files.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lsscatter::operator::{field_error, solve, ProblemSpec, SolveReport};
use lsscatter::radial::{build_grid, precompute_moments, MomentTable, RadialGrid};
use lsscatter::scenarios::{
    contrast_coefficients, exact_solution_shifted_radius, exact_solution_sphere_radius, incident_coefficients,
};
use lsscatter::sht::evaluate_at;
use lsscatter::ModeField;
use serde::Serialize;

use crate::config::{Reference, RunConfig, Scenario, SweepParameter};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub moments: f64,
    pub solve: f64,
    pub reference: f64,
    pub total: f64,
}

/// Everything reported about one solve.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scenario: &'static str,
    pub k: f64,
    pub band: usize,
    pub intervals: usize,
    pub order: usize,
    pub radius: f64,
    pub m_inc: i64,
    pub iterations: usize,
    pub restarts: usize,
    pub residual_history: Vec<f64>,
    pub achieved_tolerance: f64,
    pub time_per_iteration: f64,
    pub relative_error: Option<f64>,
    pub reference: String,
    /// Largest incident coefficient of degree `band` over all nodes: the size
    /// of the first neglected term of the incident series.
    pub incident_tail: f64,
    pub moment_cache: CacheStatus,
    pub timings: Timings,
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    parameter: SweepParameter,
    runs: &'a [RunRecord],
}

/// Moment tables for one configuration, loaded from or written to the cache.
struct MomentStore<'a> {
    cfg: &'a RunConfig,
}

impl<'a> MomentStore<'a> {
    fn path(&self, grid: &RadialGrid, band: usize) -> Option<PathBuf> {
        let dir = self.cfg.output.moment_cache.as_ref()?;
        Some(dir.join(format!(
            "moments-k{}-R{}-Ni{}-Nd{}-F{}.bin",
            self.cfg.k,
            grid.radius(),
            grid.intervals(),
            grid.order(),
            band
        )))
    }

    fn get(&self, grid: &RadialGrid, band: usize) -> Result<(MomentTable, CacheStatus), CliError> {
        let Some(path) = self.path(grid, band) else {
            return Ok((precompute_moments(grid, self.cfg.k, band)?, CacheStatus::Disabled));
        };
        if path.exists() {
            match MomentTable::load(&path, grid, self.cfg.k, band) {
                Ok(t) => return Ok((t, CacheStatus::Hit)),
                Err(e) => eprintln!("warning: ignoring {}: {e}", path.display()),
            }
        }
        let table = precompute_moments(grid, self.cfg.k, band)?;
        fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
        table.save(&path)?;
        Ok((table, CacheStatus::Miss))
    }
}

struct Solved {
    grid: RadialGrid,
    u: ModeField,
    report: SolveReport,
    cache: CacheStatus,
    incident_tail: f64,
    moments_time: f64,
    solve_time: f64,
}

fn solve_at(cfg: &RunConfig, store: &MomentStore, intervals: usize, band: usize) -> Result<Solved, CliError> {
    let grid = build_grid(cfg.radius, intervals, cfg.order)?;
    let t0 = Instant::now();
    let (moments, cache) = store.get(&grid, band)?;
    let moments_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let contrast = contrast_coefficients(&cfg.contrast(), &grid, band)?;
    let incident = incident_coefficients(&cfg.incident(), &grid, band)?;
    let incident_tail = (0..grid.len())
        .flat_map(|j| (-(band as i64)..=band as i64).map(move |m| (j, m)))
        .map(|(j, m)| incident.get(j, band, m).norm())
        .fold(0.0, f64::max);
    let spec = ProblemSpec::new(cfg.k, band, grid.clone(), contrast, incident)?;
    let (u, report) = solve(&spec, moments, cfg.gmres_options())?;
    Ok(Solved { grid, u, report, cache, incident_tail, moments_time, solve_time: t1.elapsed().as_secs_f64() })
}

fn exact_reference(cfg: &RunConfig, grid: &RadialGrid, band: usize) -> Result<ModeField, CliError> {
    let m = cfg.incident.m_inc;
    Ok(match cfg.scenario {
        Scenario::Vacuum => incident_coefficients(&cfg.incident(), grid, band)?,
        Scenario::CenteredSphere { n0, radius } => exact_solution_sphere_radius(cfg.k, m, n0, radius, band, grid)?,
        Scenario::ShiftedSphere { n0, radius, offset } => {
            exact_solution_shifted_radius(cfg.k, m, n0, radius, offset, band, grid)?
        }
        _ => return Err(CliError::Config("no exact solution for this scenario".into())),
    })
}

/// Runs solves and measures each against the configured reference, reusing
/// high-band reference solves across runs on the same grid.
struct Driver<'a> {
    cfg: &'a RunConfig,
    store: MomentStore<'a>,
    band_refs: HashMap<usize, ModeField>,
}

impl<'a> Driver<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, store: MomentStore { cfg }, band_refs: HashMap::new() }
    }

    fn run(&mut self, intervals: usize, band: usize) -> Result<(Solved, RunRecord), CliError> {
        let start = Instant::now();
        let solved = solve_at(self.cfg, &self.store, intervals, band)?;
        let t_ref = Instant::now();
        let (relative_error, reference) = match self.cfg.reference {
            Reference::None => (None, "none".to_string()),
            Reference::Exact => {
                let exact = exact_reference(self.cfg, &solved.grid, band)?;
                (Some(field_error(&solved.u, &exact)?), "exact".to_string())
            }
            Reference::Band { band: ref_band } => {
                if !self.band_refs.contains_key(&intervals) {
                    let r = solve_at(self.cfg, &self.store, intervals, ref_band)?;
                    self.band_refs.insert(intervals, r.u);
                }
                let r = &self.band_refs[&intervals];
                (Some(field_error(&solved.u.with_band(ref_band), r)?), format!("band {ref_band}"))
            }
        };
        let reference_time = t_ref.elapsed().as_secs_f64();
        let report = &solved.report;
        let record = RunRecord {
            scenario: self.cfg.scenario_name(),
            k: self.cfg.k,
            band,
            intervals,
            order: self.cfg.order,
            radius: self.cfg.radius,
            m_inc: self.cfg.incident.m_inc,
            iterations: report.iterations,
            restarts: report.restarts,
            residual_history: report.residual_history.clone(),
            achieved_tolerance: report.achieved_tolerance,
            time_per_iteration: report.time_per_iteration,
            relative_error,
            reference,
            incident_tail: solved.incident_tail,
            moment_cache: solved.cache,
            timings: Timings {
                moments: solved.moments_time,
                solve: solved.solve_time,
                reference: reference_time,
                total: start.elapsed().as_secs_f64(),
            },
        };
        Ok((solved, record))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes every coefficient as `node, rho, n, m, re, im`.
pub fn write_solution(path: &Path, grid: &RadialGrid, u: &ModeField) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "rho", "n", "m", "re", "im"])?;
    let band = u.band();
    for (j, rho) in grid.nodes().iter().enumerate() {
        for n in 0..=band {
            for m in -(n as i64)..=n as i64 {
                let c = u.get(j, n, m);
                w.write_record([j.to_string(), rho.to_string(), n.to_string(), m.to_string(), c.re.to_string(), c.im.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `|u|^2` on the `xz` meridian plane as `rho, theta, intensity`,
/// with `theta` running once around the circle: `[0, pi]` on the `phi = 0`
/// half-plane, `(pi, 2 pi)` on the `phi = pi` half-plane.
pub fn write_slice(path: &Path, grid: &RadialGrid, u: &ModeField, angles: usize) -> Result<(), CliError> {
    use rayon::prelude::*;

    let band = u.band();
    let rows: Vec<Vec<(f64, f64, f64)>> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(j, &rho)| {
            (0..angles)
                .map(|i| {
                    let theta = 2.0 * std::f64::consts::PI * i as f64 / angles as f64;
                    let (polar, phi) = if theta <= std::f64::consts::PI {
                        (theta, 0.0)
                    } else {
                        (2.0 * std::f64::consts::PI - theta, std::f64::consts::PI)
                    };
                    (rho, theta, evaluate_at(u.node(j), band, polar, phi).norm_sqr())
                })
                .collect()
        })
        .collect();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rho", "theta", "intensity"])?;
    for (rho, theta, v) in rows.into_iter().flatten() {
        w.write_record([rho.to_string(), theta.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `solve <config>`: one solve, its coefficients, a field slice and a report.
pub fn run_single(cfg: &RunConfig) -> Result<RunRecord, CliError> {
    fs::create_dir_all(&cfg.output.dir)?;
    let mut driver = Driver::new(cfg);
    let (solved, record) = driver.run(cfg.intervals, cfg.band)?;
    write_solution(&cfg.output.dir.join("solution.csv"), &solved.grid, &solved.u)?;
    write_slice(&cfg.output.dir.join("slice.csv"), &solved.grid, &solved.u, cfg.output.slice_angles)?;
    write_json(&cfg.output.dir.join("report.json"), &record)?;
    Ok(record)
}

/// `sweep <config>`: one solve per swept value and a convergence table.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<RunRecord>, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("config has no [sweep] table".into()))?;
    fs::create_dir_all(&cfg.output.dir)?;
    let mut driver = Driver::new(cfg);
    let mut records = Vec::new();
    for &value in &sweep.values {
        let (intervals, band) = match sweep.parameter {
            SweepParameter::Intervals => (value, cfg.band),
            SweepParameter::Band => (cfg.intervals, value),
        };
        records.push(driver.run(intervals, band)?.1);
    }
    let mut w = csv::Writer::from_path(cfg.output.dir.join("table.csv"))?;
    w.write_record(["value", "time_per_iteration", "gmres_iterations", "relative_error", "error_ratio"])?;
    let mut prev: Option<f64> = None;
    for (value, r) in sweep.values.iter().zip(&records) {
        let err = r.relative_error;
        let ratio = match (prev, err) {
            (Some(p), Some(e)) => (p / e).to_string(),
            _ => String::new(),
        };
        w.write_record([
            value.to_string(),
            r.time_per_iteration.to_string(),
            r.iterations.to_string(),
            err.map(|e| e.to_string()).unwrap_or_default(),
            ratio,
        ])?;
        prev = err;
    }
    w.flush()?;
    write_json(&cfg.output.dir.join("sweep.json"), &SweepReport { parameter: sweep.parameter, runs: &records })?;
    Ok(records)
}

/// `cache-moments <config>`: fills the moment cache for every grid and band
/// the config would touch. Returns the cache files.
pub fn cache_moments(cfg: &RunConfig) -> Result<Vec<(PathBuf, CacheStatus)>, CliError> {
    if cfg.output.moment_cache.is_none() {
        return Err(CliError::Config("output.moment_cache is not set".into()));
    }
    let mut combos = vec![(cfg.intervals, cfg.band)];
    if let Some(s) = &cfg.sweep {
        for &v in &s.values {
            combos.push(match s.parameter {
                SweepParameter::Intervals => (v, cfg.band),
                SweepParameter::Band => (cfg.intervals, v),
            });
        }
    }
    if let Reference::Band { band } = cfg.reference {
        let grids: Vec<usize> = combos.iter().map(|c| c.0).collect();
        combos.extend(grids.into_iter().map(|ni| (ni, band)));
    }
    combos.sort_unstable();
    combos.dedup();
    let store = MomentStore { cfg };
    let mut out = Vec::new();
    for (ni, band) in combos {
        let grid = build_grid(cfg.radius, ni, cfg.order)?;
        let (_, status) = store.get(&grid, band)?;
        out.push((store.path(&grid, band).expect("cache enabled"), status));
    }
    Ok(out)
}
