//! Numerical core for incompressible flow on 3-D grids: grids and fields,
//! spectral and finite-difference calculus, the Helmholtz decomposition, the
//! heat operator, a periodic pseudo-spectral solver and a suite of
//! verification checks.

pub mod calculus;
pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod heat;
pub mod helmholtz;
pub mod snapshot;
pub mod spectral;
pub mod stencil;
pub mod verify;

pub use calculus::{advect, curl, curl_k, div, grad, laplacian, nonlinear_term, DiffBackend};
pub use error::{Error, Result};
pub use field::{FieldNormSet, Norms, ScalarField, VectorField};
pub use grid::{make_grid, Boundary, Grid3};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
pub use helmholtz::{decompose, h_k, h_operator, HelmholtzBackend, HelmholtzParts};
pub use flow::{simulate, FlowState, SimParams, Trajectory};
pub use heat::{heat_propagate, HeatBackend, HeatParams};
