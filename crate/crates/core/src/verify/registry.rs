use serde::Serialize;

use super::checks::{self, CheckOptions};
use super::report::CheckReport;
use crate::error::{Error, Result};
use crate::flow::Trajectory;

pub type CheckFn = fn(&Trajectory, &CheckOptions) -> Result<CheckReport>;

/// A registered trajectory check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckInfo {
    pub name: &'static str,
    /// Short description of the relation being verified.
    pub anchor: &'static str,
    pub informational: bool,
    #[serde(skip)]
    pub run: CheckFn,
}

pub const REGISTRY: &[CheckInfo] = &[
    CheckInfo {
        name: "check_reconstruction",
        anchor: "Helmholtz reconstruction of the nonlinear term",
        informational: false,
        run: checks::check_reconstruction,
    },
    CheckInfo {
        name: "check_pressure_harmonic",
        anchor: "harmonicity of p - rho phi",
        informational: false,
        run: checks::check_pressure_harmonic,
    },
    CheckInfo {
        name: "check_gamma_consistency",
        anchor: "Gamma as heat flow of p - rho phi",
        informational: true,
        run: checks::check_gamma_consistency,
    },
    CheckInfo {
        name: "check_vorticity_transport",
        anchor: "vorticity transport equation",
        informational: false,
        run: checks::check_vorticity_transport,
    },
    CheckInfo {
        name: "check_lemma1_identity",
        anchor: "curl of the advective term",
        informational: false,
        run: checks::check_lemma1_trajectory,
    },
    CheckInfo {
        name: "check_theorem1",
        anchor: "velocity representation through Gamma",
        informational: false,
        run: checks::check_theorem1,
    },
    CheckInfo {
        name: "check_corollary1",
        anchor: "irrotational flow vanishes",
        informational: false,
        run: checks::check_corollary1,
    },
    CheckInfo {
        name: "check_theorem2",
        anchor: "heat representation of curl^k u",
        informational: false,
        run: checks::check_theorem2,
    },
    CheckInfo {
        name: "monitor_theorem34",
        anchor: "pointwise vorticity-rate bound",
        informational: false,
        run: checks::monitor_theorem34,
    },
    CheckInfo {
        name: "delta_diagnostic",
        anchor: "delta mapping",
        informational: true,
        run: checks::delta_diagnostic,
    },
    CheckInfo {
        name: "lambda_compare",
        anchor: "lambda evolution against vorticity",
        informational: true,
        run: checks::lambda_compare,
    },
];

pub fn check_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.name).collect()
}

pub fn find_check(name: &str) -> Result<&'static CheckInfo> {
    REGISTRY
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::Config(format!("unknown check '{name}'")))
}

/// Runs one check; the report's informational flag follows the registry.
pub fn run_check(name: &str, traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    let info = find_check(name)?;
    let mut report = (info.run)(traj, opts)?;
    report.informational = info.informational;
    Ok(report)
}
