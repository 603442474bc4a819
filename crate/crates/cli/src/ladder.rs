//! `helmns compare-backends`: quadrature against spectral decomposition over
//! a ladder of window resolutions.

use std::fmt::Write as _;
use std::fs;

use helmns_core::flow::gaussian_vortex_velocity;
use helmns_core::helmholtz::{has_decay_warning, quadrature_vs_spectral_report};
use helmns_core::{Boundary, Grid3};

use crate::config::{LadderConfig, LadderField};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct LadderRow {
    pub window_n: usize,
    pub curl_discrepancy: f64,
    pub grad_discrepancy: f64,
    pub quadrature_seconds: f64,
    pub spectral_seconds: f64,
    pub decay_warning: bool,
}

pub const CSV_HEADER: &str =
    "window_n,window_length,periodic_n,periodic_length,curl_discrepancy,grad_discrepancy,quadrature_seconds,spectral_seconds,decay_warning";

pub fn ladder_rows(cfg: &LadderConfig) -> Result<Vec<LadderRow>, CliError> {
    let periodic = Grid3::new([cfg.periodic_n; 3], [cfg.periodic_length; 3], Boundary::Periodic)
        .map_err(|e| CliError::Config(format!("periodic grid: {e}")))?;
    let centre = [cfg.window_length / 2.0; 3];
    let mut rows = Vec::new();
    for &n in &cfg.window_n {
        let window = Grid3::new([n; 3], [cfg.window_length; 3], Boundary::TruncatedWindow)
            .map_err(|e| CliError::Config(format!("window n = {n}: {e}")))?;
        let report = match cfg.field {
            LadderField::GaussianVortex { scale, strength } => {
                quadrature_vs_spectral_report(gaussian_vortex_velocity(centre, scale, strength), &window, &periodic)
            }
            LadderField::Abc => quadrature_vs_spectral_report(
                |p: [f64; 3]| [p[2].sin() + p[1].cos(), p[0].sin() + p[2].cos(), p[1].sin() + p[0].cos()],
                &window,
                &periodic,
            ),
        }
        .map_err(|e| CliError::Config(format!("window n = {n}: {e}")))?;
        let r = report.residuals[0];
        rows.push(LadderRow {
            window_n: n,
            curl_discrepancy: r.sup,
            grad_discrepancy: r.l2,
            quadrature_seconds: report.series["quadrature_seconds"][0],
            spectral_seconds: report.series["spectral_seconds"][0],
            decay_warning: has_decay_warning(&report),
        });
    }
    Ok(rows)
}

pub fn ladder_csv(cfg: &LadderConfig, rows: &[LadderRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:.3},{:.3},{}",
            r.window_n,
            cfg.window_length,
            cfg.periodic_n,
            cfg.periodic_length,
            r.curl_discrepancy,
            r.grad_discrepancy,
            r.quadrature_seconds,
            r.spectral_seconds,
            r.decay_warning
        );
    }
    out
}

/// Runs the ladder and writes `backend_ladder.csv` into the output
/// directory. Returns the CSV text.
pub fn compare_backends(cfg: &LadderConfig) -> Result<String, CliError> {
    let rows = ladder_rows(cfg)?;
    let csv = ladder_csv(cfg, &rows);
    fs::create_dir_all(&cfg.output)?;
    let path = cfg.output.join("backend_ladder.csv");
    fs::write(&path, &csv).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    Ok(csv)
}
