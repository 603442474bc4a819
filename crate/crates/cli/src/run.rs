//! `helmns run`: simulate, check, and write the output tree.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/timings.json
//! <dir>/reports/<check>.json
//! <dir>/series/<check>.csv
//! <dir>/snapshots/u_<step>.hnsf
//! ```
//!
//! Everything except `timings.json` is a pure function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use helmns_core::flow::{self, Trajectory};
use helmns_core::snapshot::{write_snapshot, Snapshot};
use helmns_core::verify::{self, CheckReport, CheckStatus};
use helmns_core::{simulate, Grid3, SimParams, VectorField};
use serde::Serialize;
use serde_json::json;

use crate::config::{InitialCondition, RunConfig};
use crate::{CliError, ARTIFACT_VERSION};

/// Report file layout; `status`, `anchor` and `parts` extend the base
/// schema.
#[derive(Debug, Serialize)]
struct ReportJson<'a> {
    name: &'a str,
    passed: bool,
    informational: bool,
    tolerance: f64,
    worst_sup: f64,
    worst_l2: f64,
    masked_total: usize,
    series_csv_path: Option<String>,
    notes: &'a [String],
    status: CheckStatus,
    anchor: &'a str,
    parts: &'a [verify::SubCheck],
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub status: CheckStatus,
    pub passed: bool,
    pub informational: bool,
    pub tolerance: f64,
    pub worst_sup: f64,
    pub worst_l2: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summaries: Vec<CheckSummary>,
    pub reports: Vec<CheckReport>,
    pub trajectory: Trajectory,
    pub files: Vec<String>,
}

impl RunOutcome {
    /// True when every non-informational check passed or was gated off.
    pub fn all_passed(&self) -> bool {
        self.summaries.iter().all(|s| s.informational || s.passed)
    }
}

pub fn initial_velocity(grid: &Grid3, ic: &InitialCondition) -> helmns_core::Result<VectorField> {
    match *ic {
        InitialCondition::Zero => Ok(VectorField::zeros(*grid)),
        InitialCondition::TaylorGreen => flow::ic_taylor_green(grid),
        InitialCondition::Abc { a, b, c } => flow::ic_abc(grid, a, b, c),
        InitialCondition::GaussianVortex { center, scale, strength } => {
            flow::ic_gaussian_vortex(grid, center, scale, strength)
        }
        InitialCondition::RandomSolenoidal { seed, kmax, amplitude } => {
            flow::ic_random_solenoidal(grid, seed, kmax, amplitude)
        }
    }
}

/// Builds the trajectory described by `cfg`. Configuration problems map to
/// `CliError::Config`, solver aborts to `CliError::Simulation`.
pub fn simulate_config(cfg: &RunConfig) -> Result<Trajectory, CliError> {
    let grid = Grid3::new(cfg.grid.n, cfg.grid.length, cfg.grid.boundary)
        .map_err(|e| CliError::Config(format!("grid: {e}")))?;
    if !grid.is_periodic() {
        return Err(CliError::Config("run needs a periodic grid".into()));
    }
    let u0 = initial_velocity(&grid, &cfg.sim.ic).map_err(|e| CliError::Config(format!("initial condition: {e}")))?;
    let params = SimParams {
        nu: cfg.sim.nu,
        rho: cfg.sim.rho,
        dt: cfg.sim.dt,
        steps: cfg.sim.steps,
        dealias: cfg.sim.dealias,
    };
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    simulate(&u0, &params, cfg.sim.snapshot_every).map_err(CliError::Simulation)
}

fn series_csv(report: &CheckReport) -> String {
    let aligned: Vec<(&String, &Vec<f64>)> = report
        .series
        .iter()
        .filter(|(_, v)| v.len() == report.residuals.len())
        .collect();
    let mut out = String::from("t,sup,l2,masked");
    for (name, _) in &aligned {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (row, r) in report.residuals.iter().enumerate() {
        let _ = write!(out, "{:e},{:e},{:e},{}", r.t, r.sup, r.l2, r.masked);
        for (_, values) in &aligned {
            let _ = write!(out, ",{:e}", values[row]);
        }
        out.push('\n');
    }
    out
}

fn write_file(dir: &Path, rel: &str, contents: &[u8], files: &mut Vec<String>) -> Result<(), CliError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, contents).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    files.push(rel.to_string());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

/// Runs the configured simulation and checks, writing outputs under
/// `out_dir` (or the configured directory).
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome, CliError> {
    let dir: PathBuf = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;

    let t0 = Instant::now();
    let traj = simulate_config(cfg)?;
    let sim_seconds = t0.elapsed().as_secs_f64();

    let mut files = Vec::new();
    let mut snapshots = Vec::new();
    if cfg.output.snapshots {
        for state in &traj.states {
            let step = (state.t / cfg.sim.dt).round() as usize;
            let rel = format!("snapshots/u_{step:05}.hnsf");
            let path = dir.join(&rel);
            fs::create_dir_all(path.parent().expect("snapshot dir"))?;
            write_snapshot(&Snapshot::Vector(state.u.clone()), &path)
                .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            snapshots.push(rel.clone());
            files.push(rel);
        }
    }

    let mut summaries = Vec::new();
    let mut reports = Vec::new();
    let mut timings = serde_json::Map::new();
    for name in &cfg.checks {
        let info = verify::find_check(name).map_err(|e| CliError::Config(e.to_string()))?;
        let t = Instant::now();
        let report = verify::run_check(name, &traj, &cfg.options).map_err(|source| CliError::Check {
            name: name.clone(),
            source,
        })?;
        timings.insert(name.clone(), json!(t.elapsed().as_secs_f64()));

        let csv_rel = cfg.output.csv.then(|| format!("series/{name}.csv"));
        if let Some(rel) = &csv_rel {
            write_file(&dir, rel, series_csv(&report).as_bytes(), &mut files)?;
        }
        if cfg.output.json {
            let body = ReportJson {
                name,
                passed: report.passed(),
                informational: report.informational,
                tolerance: report.tolerance,
                worst_sup: report.worst_sup(),
                worst_l2: report.worst_l2(),
                masked_total: report.masked_total,
                series_csv_path: csv_rel.clone(),
                notes: &report.notes,
                status: report.status,
                anchor: info.anchor,
                parts: &report.parts,
            };
            write_file(&dir, &format!("reports/{name}.json"), &to_json(&body), &mut files)?;
        }
        summaries.push(CheckSummary {
            name: name.clone(),
            status: report.status,
            passed: report.passed(),
            informational: report.informational,
            tolerance: report.tolerance,
            worst_sup: report.worst_sup(),
            worst_l2: report.worst_l2(),
        });
        reports.push(report);
    }

    let timing = json!({ "simulate_seconds": sim_seconds, "checks": timings });
    write_file(&dir, "timings.json", &to_json(&timing), &mut files)?;

    let mut listed = files.clone();
    listed.push("manifest.json".into());
    let all_passed = summaries.iter().all(|s| s.informational || s.passed);
    let manifest = json!({
        "artifact_version": ARTIFACT_VERSION,
        "config": cfg.raw.entries(),
        "resolved": {
            "grid": { "n": cfg.grid.n, "length": cfg.grid.length, "boundary": cfg.grid.boundary },
            "sim": {
                "nu": cfg.sim.nu,
                "rho": cfg.sim.rho,
                "dt": cfg.sim.dt,
                "steps": cfg.sim.steps,
                "snapshot_every": cfg.sim.snapshot_every,
                "dealias": cfg.sim.dealias,
                "ic": format!("{:?}", cfg.sim.ic),
            },
            "check_options": cfg.options,
        },
        "frames": traj.times(),
        "checks": summaries,
        "all_passed": all_passed,
        "snapshots": snapshots,
        "files": listed,
    });
    write_file(&dir, "manifest.json", &to_json(&manifest), &mut files)?;

    Ok(RunOutcome {
        summaries,
        reports,
        trajectory: traj,
        files,
    })
}

/// Text table of check outcomes for the terminal.
pub fn summary_table(outcome: &RunOutcome) -> String {
    let mut out = String::new();
    for s in &outcome.summaries {
        let status = match s.status {
            CheckStatus::Passed => "pass",
            CheckStatus::Failed => "FAIL",
            CheckStatus::NotApplicable => "n/a",
            CheckStatus::Informational => "info",
        };
        let _ = writeln!(out, "{:<28} {:<5} worst_sup={:.3e} tol={:.1e}", s.name, status, s.worst_sup, s.tolerance);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    #[test]
    fn csv_layout() {
        let r = CheckReport::judged(
            "x",
            1.0,
            vec![verify::ResidualSample {
                t: 0.5,
                sup: 0.25,
                l2: 0.125,
                masked: 3,
            }],
        )
        .with_series("extra", vec![2.0])
        .with_series("unaligned", vec![1.0, 2.0]);
        assert_eq!(series_csv(&r), "t,sup,l2,masked,extra\n5e-1,2.5e-1,1.25e-1,3,2e0\n");
    }

    #[test]
    fn zero_flow_run_passes() {
        let dir = tempfile::tempdir().unwrap();
        let raw = RawConfig::parse("grid.n = 8\nsim.ic = zero\nsim.t_end = 0.05\nsim.dt = 0.01\nsim.snapshot_every = 1").unwrap();
        let cfg = RunConfig::from_raw(raw).unwrap();
        let out = run(&cfg, Some(dir.path())).unwrap();
        assert!(out.all_passed());
        assert!(dir.path().join("snapshots/u_00005.hnsf").exists());
        assert!(dir.path().join("reports/check_theorem1.json").exists());
    }
}
