use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lsscatter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsscatter")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn vacuum(out: &Path) -> String {
    format!(
        r#"
version = 1
k = 2.0
band = 6
intervals = 3
order = 3
radius = 1.0

[scenario]
kind = "vacuum"

[incident]
m_inc = 2

[output]
dir = "{}"
slice_angles = 12
"#,
        out.display()
    )
}

fn sphere_sweep(out: &Path, cache: Option<&Path>, values: &str) -> String {
    let cache = cache.map(|c| format!("moment_cache = \"{}\"\n", c.display())).unwrap_or_default();
    format!(
        r#"
version = 1
k = 2.0
band = 6
intervals = 4
order = 2
radius = 1.5

[scenario]
kind = "centered-sphere"
n0 = 1.5

[incident]
m_inc = 1

[gmres]
tol = 1e-12

[sweep]
parameter = "intervals"
values = {values}

[output]
dir = "{}"
{cache}"#,
        out.display()
    )
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_table(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let mut rows = vec![header];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn missing_config_is_a_config_error() {
    let o = lsscatter(&["solve", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"), "{}", stderr(&o));
}

#[test]
fn invalid_config_is_rejected_before_solving() {
    let dir = TempDir::new().unwrap();
    let body = vacuum(&dir.path().join("out")).replace("order = 3", "order = 3\nsmoothing = 1");
    let o = lsscatter(&["solve", &write_config(dir.path(), "bad.toml", &body)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());

    let body = sphere_sweep(&dir.path().join("out"), None, "[4]");
    let o = lsscatter(&["sweep", &write_config(dir.path(), "short.toml", &body)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 2 values"), "{}", stderr(&o));
}

#[test]
fn vacuum_solve_returns_the_incident_field() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = lsscatter(&["solve", &write_config(dir.path(), "vacuum.toml", &vacuum(&out))]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["relative_error"].as_f64().unwrap() < 1e-12);
    assert!(report["iterations"].as_u64().unwrap() <= 1);
    assert_eq!(report["moment_cache"], "disabled");
    assert_eq!(report["reference"], "exact");

    // 3 intervals of 3 nodes, (F + 1)^2 = 49 coefficients per node
    let solution = read_table(&out.join("solution.csv"));
    assert_eq!(solution[0], ["node", "rho", "n", "m", "re", "im"]);
    assert_eq!(solution.len() - 1, 9 * 49);
    let slice = read_table(&out.join("slice.csv"));
    assert_eq!(slice[0], ["rho", "theta", "intensity"]);
    assert_eq!(slice.len() - 1, 9 * 12);
    assert!(slice[1..].iter().all(|r| r[2].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn sweep_table_reports_convergence() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = lsscatter(&["sweep", &write_config(dir.path(), "s.toml", &sphere_sweep(&out, None, "[4, 8, 16]"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_table(&out.join("table.csv"));
    assert_eq!(table[0], ["value", "time_per_iteration", "gmres_iterations", "relative_error", "error_ratio"]);
    assert_eq!(table.len(), 4);
    assert_eq!(table[1][4], "");
    let errors: Vec<f64> = table[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    for (row, w) in table[2..].iter().zip(errors.windows(2)) {
        let ratio: f64 = row[4].parse().unwrap();
        assert!((ratio - w[0] / w[1]).abs() < 1e-12 * ratio);
        assert!(ratio > 1.5, "refinement should reduce the error: {errors:?}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn moment_cache_round_trips_and_results_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache");
    let fresh = dir.path().join("fresh");
    let cached = dir.path().join("cached");
    let values = "[3, 6]";

    let cfg = write_config(dir.path(), "c.toml", &sphere_sweep(&cached, Some(&cache), values));
    let o = lsscatter(&["cache-moments", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(first.lines().filter(|l| l.starts_with("miss")).count(), 3, "{first}");
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 3);
    let again = lsscatter(&["cache-moments", &cfg]);
    let second = String::from_utf8_lossy(&again.stdout).into_owned();
    assert_eq!(second.lines().filter(|l| l.starts_with("hit")).count(), 3, "{second}");

    let plain = write_config(dir.path(), "p.toml", &sphere_sweep(&fresh, None, values));
    assert!(lsscatter(&["sweep", &plain]).status.success());
    assert!(lsscatter(&["sweep", &cfg]).status.success());
    let without_time = |p: &Path| -> Vec<Vec<String>> {
        read_table(p).into_iter().map(|mut r| {
            r.remove(1);
            r
        }).collect()
    };
    assert_eq!(without_time(&fresh.join("table.csv")), without_time(&cached.join("table.csv")));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(cached.join("sweep.json")).unwrap()).unwrap();
    assert!(report["runs"].as_array().unwrap().iter().all(|r| r["moment_cache"] == "hit"));
}

#[test]
fn corrupt_cache_entry_is_recomputed() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write_config(dir.path(), "c.toml", &sphere_sweep(&dir.path().join("out"), Some(&cache), "[3, 6]"));
    assert!(lsscatter(&["cache-moments", &cfg]).status.success());
    for entry in fs::read_dir(&cache).unwrap() {
        fs::write(entry.unwrap().path(), b"not a moment table").unwrap();
    }
    let o = lsscatter(&["cache-moments", &cfg]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("miss")));
}

#[test]
fn cache_moments_requires_a_cache_directory() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "v.toml", &vacuum(&dir.path().join("out")));
    assert_eq!(lsscatter(&["cache-moments", &cfg]).status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "v.toml", &vacuum(&dir.path().join("out")));
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_lsscatter"))
            .args(["solve", &cfg])
            .env("LSSCATTER_THREADS", threads)
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    for bad in ["0", "many"] {
        let o = run(bad);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(stderr(&o).contains("LSSCATTER_THREADS"), "{}", stderr(&o));
    }
}

#[test]
fn selftest_passes() {
    let o = lsscatter(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{stdout}");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = lsscatter_cli::config::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(lsscatter_cli::config::RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        n += 1;
    }
    assert!(n >= 6);
}

/// A shipped config redirected into `dir`, without a moment cache.
fn shipped(name: &str, dir: &Path) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut cfg = lsscatter_cli::config::RunConfig::load(&path).unwrap();
    cfg.output.dir = dir.join("out");
    cfg.output.moment_cache = None;
    write_config(dir, name, &cfg.to_toml())
}

fn sweep_column(dir: &Path, col: usize) -> Vec<f64> {
    read_table(&dir.join("out/table.csv"))[1..].iter().filter_map(|r| r[col].parse().ok()).collect()
}

#[test]
fn sphere_sweep_is_second_order() {
    let dir = TempDir::new().unwrap();
    let o = lsscatter(&["sweep", &shipped("sphere-radial.toml", dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let errors = sweep_column(dir.path(), 3);
    for (e, expect) in errors.iter().zip([0.5645, 0.2048, 0.0533]) {
        assert!(e / expect < 2.0 && expect / e < 2.0, "{errors:?}");
    }
    let ratios = sweep_column(dir.path(), 4);
    for (r, expect) in ratios.iter().zip([2.81, 3.72]) {
        assert!((r / expect - 1.0).abs() < 0.1, "{ratios:?}");
    }
}

#[test]
fn sphere_single_solve_reports_its_error() {
    let dir = TempDir::new().unwrap();
    let o = lsscatter(&["solve", &shipped("sphere-radial.toml", dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let e = report["relative_error"].as_f64().unwrap();
    assert!(e / 0.0533 < 2.0 && 0.0533 / e < 2.0, "{e}");
    assert_eq!(report["intervals"], 32);
    let history = report["residual_history"].as_array().unwrap();
    assert!(history.len() > report["iterations"].as_u64().unwrap() as usize);
}

#[test]
fn hoelder_band_sweep_order() {
    let dir = TempDir::new().unwrap();
    let o = lsscatter(&["sweep", &shipped("hoelder-0.4.toml", dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = sweep_column(dir.path(), 4).last().unwrap().log2();
    assert!((last - 2.64).abs() <= 0.75, "{last}");
}
