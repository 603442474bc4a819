use crate::calculus::{self, DiffBackend};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flow::Trajectory;
use crate::stencil::fornberg_weights;

/// Vorticity, its time derivative and its Laplacian at one trajectory frame.
#[derive(Clone, Debug)]
pub struct VorticityState {
    pub t: f64,
    pub v: VectorField,
    /// Three-point derivative over neighbouring frames: centered for
    /// interior frames, one-sided at the ends.
    pub dvdt: VectorField,
    pub lapv: VectorField,
    /// True when `dvdt` came from a centered stencil.
    pub interior: bool,
}

/// Weighted sum `Σ w_j f_j` of frame fields.
pub(crate) fn combine(weights: &[f64], fields: &[&VectorField]) -> VectorField {
    let mut out = VectorField::zeros(*fields[0].grid());
    for (w, f) in weights.iter().zip(fields) {
        out.axpy(*w, f);
    }
    out
}

/// Derivative at `times[at]` from frames `lo..=hi` (Lagrange weights, so
/// uneven frame spacing is handled).
pub(crate) fn time_derivative(times: &[f64], fields: &[VectorField], at: usize, lo: usize, hi: usize) -> VectorField {
    let nodes: Vec<f64> = times[lo..=hi].iter().map(|t| t - times[at]).collect();
    let w = fornberg_weights(&nodes, 1);
    let refs: Vec<&VectorField> = fields[lo..=hi].iter().collect();
    combine(&w, &refs)
}

pub fn vorticity_states(traj: &Trajectory) -> Result<Vec<VorticityState>> {
    if !traj.grid.is_periodic() {
        return Err(Error::Config("trajectory checks require a periodic grid".into()));
    }
    let b = DiffBackend::Spectral;
    let times = traj.times();
    let vs: Vec<VectorField> = traj
        .states
        .iter()
        .map(|s| calculus::curl(&s.u, b))
        .collect::<Result<_>>()?;
    let n = vs.len();
    let mut out = Vec::with_capacity(n);
    for (i, v) in vs.iter().enumerate() {
        let (dvdt, interior) = match n {
            1 => (VectorField::zeros(traj.grid), false),
            2 => (time_derivative(&times, &vs, i, 0, 1), false),
            _ if i == 0 => (time_derivative(&times, &vs, 0, 0, 2), false),
            _ if i == n - 1 => (time_derivative(&times, &vs, i, n - 3, n - 1), false),
            _ => (time_derivative(&times, &vs, i, i - 1, i + 1), true),
        };
        out.push(VorticityState {
            t: times[i],
            v: v.clone(),
            dvdt,
            lapv: calculus::laplacian(v, b)?,
            interior,
        });
    }
    Ok(out)
}
