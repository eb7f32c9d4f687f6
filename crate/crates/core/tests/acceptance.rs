//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

use std::process::ExitCode;
use std::time::Instant;

use lsscatter::checks::{self, CheckOutcome};
use lsscatter::operator::{field_error, solve, GmresOptions, ProblemSpec, SolveReport};
use lsscatter::radial::{build_grid, precompute_moments, RadialGrid};
use lsscatter::scenarios::{
    contrast_coefficients, exact_solution_shifted, exact_solution_sphere, incident_coefficients, ContrastSpec,
    IncidentSpec,
};
use lsscatter::{ModeField, Result};

struct Run {
    grid: RadialGrid,
    u: ModeField,
    report: SolveReport,
}

fn run(k: f64, band: usize, grid: RadialGrid, contrast: ContrastSpec, incident: IncidentSpec, opts: GmresOptions) -> Result<Run> {
    let m = contrast_coefficients(&contrast, &grid, band)?;
    let inc = incident_coefficients(&incident, &grid, band)?;
    let spec = ProblemSpec::new(k, band, grid.clone(), m, inc)?;
    let (u, report) = solve(&spec, precompute_moments(&grid, k, band)?, opts)?;
    Ok(Run { grid, u, report })
}

fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn centered_sphere_radial() -> Result<CheckOutcome> {
    const TARGET: [f64; 3] = [0.5645, 0.2048, 0.0533];
    let k = 5.0;
    let sphere = ContrastSpec::CenteredSphere { n0: 2.0, radius: 1.0 };
    let incident = IncidentSpec { m_inc: 1, k, offset: 0.0 };
    let mut errors = Vec::new();
    for ni in [8, 16, 32] {
        let r = run(k, 31, build_grid(2.0, ni, 2)?, sphere, incident, GmresOptions { tol: 1e-10, ..Default::default() })?;
        errors.push(field_error(&r.u, &exact_solution_sphere(k, 1, 2.0, 31, &r.grid)?)?);
    }
    let rs = ratios(&errors);
    let within = errors.iter().zip(TARGET).all(|(e, t)| e / t <= 2.0 && t / e <= 2.0);
    let ordered = rs.iter().all(|r| (2.5..=5.0).contains(r));
    Ok(CheckOutcome {
        name: "[1] centered sphere, radial refinement",
        passed: within && ordered,
        detail: format!("errors [{}] (within 2x of [{}]), ratios [{}] (in [2.5, 5])", fmt(&errors), fmt(&TARGET), fmt(&rs)),
    })
}

fn centered_sphere_high_order() -> Result<CheckOutcome> {
    let k = 5.0;
    let r = run(
        k,
        31,
        build_grid(2.0, 32, 8)?,
        ContrastSpec::CenteredSphere { n0: 2.0, radius: 1.0 },
        IncidentSpec { m_inc: 1, k, offset: 0.0 },
        GmresOptions { tol: 1e-15, max_iter: 500, restart: 100 },
    )?;
    let err = field_error(&r.u, &exact_solution_sphere(k, 1, 2.0, 31, &r.grid)?)?;
    let it = r.report.iterations;
    Ok(CheckOutcome {
        name: "[2] centered sphere, Nd = 8",
        passed: err <= 1e-10 && (40..=100).contains(&it),
        detail: format!("error {err:.3e} (<= 1e-10), {it} GMRES iterations (in [40, 100])"),
    })
}

fn shifted_sphere_radial() -> Result<CheckOutcome> {
    let (k, band, d) = (1.0, 127, 2.0);
    let sphere = ContrastSpec::ShiftedSphere { n0: 2.0, radius: 1.0, offset: d };
    let incident = IncidentSpec { m_inc: 3, k, offset: d };
    let mut errors = Vec::new();
    for ni in [16, 32, 64] {
        let r = run(k, band, build_grid(4.0, ni, 2)?, sphere, incident, GmresOptions { tol: 1e-10, ..Default::default() })?;
        errors.push(field_error(&r.u, &exact_solution_shifted(k, 3, 2.0, d, band, &r.grid)?)?);
    }
    let rs = ratios(&errors);
    Ok(CheckOutcome {
        name: "[3] shifted sphere, radial refinement",
        passed: rs.iter().all(|r| (2.5..=5.0).contains(r)),
        detail: format!("errors [{}], ratios [{}] (in [2.5, 5])", fmt(&errors), fmt(&rs)),
    })
}

fn hoelder_angular_order() -> Result<CheckOutcome> {
    const REFERENCE_BAND: usize = 127;
    let k = 0.5;
    let grid = build_grid(4.0, 4, 8)?;
    let incident = IncidentSpec { m_inc: 3, k, offset: 0.0 };
    let opts = GmresOptions { tol: 1e-10, ..Default::default() };
    let mut orders = Vec::new();
    let mut within = true;
    for (beta, target) in [(0.4, 2.64), (1.4, 3.59), (2.4, 4.61)] {
        let contrast = ContrastSpec::Hoelder { beta, m_ref: 1 };
        let reference = run(k, REFERENCE_BAND, grid.clone(), contrast, incident, opts)?.u;
        let mut errors = Vec::new();
        for band in [7, 15, 31] {
            let u = run(k, band, grid.clone(), contrast, incident, opts)?.u;
            errors.push(field_error(&u.with_band(REFERENCE_BAND), &reference)?);
        }
        let order = (errors[1] / errors[2]).log2();
        within &= (order - target).abs() <= 0.75;
        orders.push(order);
    }
    let increasing = orders.windows(2).all(|w| w[1] > w[0]);
    Ok(CheckOutcome {
        name: "[4] Hoelder shell, angular order",
        passed: within && increasing,
        detail: format!(
            "final log2 ratios [{:.3}, {:.3}, {:.3}] for beta 0.4, 1.4, 2.4 (targets 2.64, 3.59, 4.61 +- 0.75, increasing)",
            orders[0], orders[1], orders[2]
        ),
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<CheckOutcome>); 8] = [
        ("[1] centered sphere, radial refinement", centered_sphere_radial),
        ("[2] centered sphere, Nd = 8", centered_sphere_high_order),
        ("[3] shifted sphere, radial refinement", shifted_sphere_radial),
        ("[4] Hoelder shell, angular order", hoelder_angular_order),
        ("[5] oracle equivalence", checks::oracle_equivalence),
        ("[6] addition theorem", checks::addition_theorem),
        ("[7] scaled kernel identity", checks::scaled_kernel_identity),
        ("[8] transform properties", checks::transform_properties),
    ];
    let mut failed = 0;
    for (label, criterion) in criteria {
        let start = Instant::now();
        let outcome = match criterion() {
            Ok(o) => o,
            Err(e) => CheckOutcome { name: "", passed: false, detail: format!("error: {e}") },
        };
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "{} {label}: {} ({:.1} s)",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
