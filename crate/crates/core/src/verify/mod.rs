//! Residual checks of the identities satisfied by simulated flows.

pub mod checks;
pub mod registry;
pub mod report;
pub mod vorticity;

pub use checks::{
    check_lemma1_identity, delta_terms, lambda_evolution, lemma1_residuals, reconstruction_residual,
    with_gradient_pollution, CheckOptions, DeltaTerms,
};
pub use registry::{check_names, find_check, run_check, CheckInfo, REGISTRY};
pub use report::{CheckReport, CheckStatus, ResidualSample, SubCheck};
pub use vorticity::{vorticity_states, VorticityState};
