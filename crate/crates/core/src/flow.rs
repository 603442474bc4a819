//! Periodic pseudo-spectral Navier–Stokes solver and the bundled initial
//! conditions.
//!
//! Time stepping is fourth-order Runge–Kutta in integrating-factor (Lawson)
//! form: viscosity is applied exactly through `exp(−ν|k|²τ)` and the
//! projected, dealiased advection term is treated explicitly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, DiffBackend};
use crate::error::{Error, Result};
use crate::field::{Norms, ScalarField, VectorField};
use crate::grid::Grid3;
use crate::spectral::{SpectralGrid, Spectrum, I, ZERO};

/// Advective CFL limit enforced before every step.
pub const CFL_LIMIT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub u: VectorField,
    pub p: ScalarField,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub nu: f64,
    pub rho: f64,
    pub dt: f64,
    pub steps: usize,
    pub dealias: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            nu: 0.1,
            rho: 1.0,
            dt: 5e-3,
            steps: 200,
            dealias: true,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nu", self.nu), ("rho", self.rho), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: SimParams,
    pub grid: Grid3,
    pub states: Vec<FlowState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

fn require_periodic(grid: &Grid3, what: &str) -> Result<()> {
    if grid.is_periodic() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} requires a periodic grid")))
    }
}

/// `(cos x sin y, −sin x cos y, 0)`.
pub fn ic_taylor_green(grid: &Grid3) -> Result<VectorField> {
    VectorField::sample(*grid, |p| [p[0].cos() * p[1].sin(), -p[0].sin() * p[1].cos(), 0.0])
}

/// `(A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`.
pub fn ic_abc(grid: &Grid3, a: f64, b: f64, c: f64) -> Result<VectorField> {
    VectorField::sample(*grid, |p| {
        [
            a * p[2].sin() + c * p[1].cos(),
            b * p[0].sin() + a * p[2].cos(),
            c * p[1].sin() + b * p[0].cos(),
        ]
    })
}

/// Curl of the stream vector `strength·exp(−|x−center|²/scale²)·ẑ`.
///
/// Periodic grids take the spectral curl of the sampled stream function, so
/// the result is discretely divergence-free; windows use the analytic curl.
pub fn ic_gaussian_vortex(grid: &Grid3, center: [f64; 3], scale: f64, strength: f64) -> Result<VectorField> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("vortex scale must be positive, got {scale}")));
    }
    let stream = move |p: [f64; 3]| {
        let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
        strength * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (scale * scale)).exp()
    };
    if grid.is_periodic() {
        let psi = VectorField::sample(*grid, |p| [0.0, 0.0, stream(p)])?;
        return calculus::curl(&psi, DiffBackend::Spectral);
    }
    VectorField::sample(*grid, gaussian_vortex_velocity(center, scale, strength))
}

/// Analytic velocity of [`ic_gaussian_vortex`] at a point.
pub fn gaussian_vortex_velocity(center: [f64; 3], scale: f64, strength: f64) -> impl Fn([f64; 3]) -> [f64; 3] + Sync + Copy {
    move |p| {
        let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
        let s = strength * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (scale * scale)).exp();
        let w = -2.0 / (scale * scale);
        [w * d[1] * s, -w * d[0] * s, 0.0]
    }
}

/// Real field whose Fourier modes with `0 < |m| ≤ kmax` carry seeded uniform
/// coefficients. Not projected.
pub fn random_band_limited(grid: &Grid3, seed: u64, kmax: usize) -> Result<VectorField> {
    require_periodic(grid, "random_band_limited")?;
    let n = grid.n();
    if kmax == 0 || n.iter().any(|&m| 2 * kmax >= m) {
        return Err(Error::InvalidArgument(format!(
            "kmax must be in 1..n/2 for grid {n:?}, got {kmax}"
        )));
    }
    let sg = SpectralGrid::new(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec: [Spectrum; 3] = [vec![ZERO; sg.len()], vec![ZERO; sg.len()], vec![ZERO; sg.len()]];
    let kmax2 = (kmax * kmax) as i64;
    for idx in 0..sg.len() {
        let (a, b, c) = grid.unravel(idx);
        let m = [
            crate::spectral::mode_number(a, n[0]),
            crate::spectral::mode_number(b, n[1]),
            crate::spectral::mode_number(c, n[2]),
        ];
        let m2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        if m2 == 0 || m2 > kmax2 {
            continue;
        }
        for s in spec.iter_mut() {
            s[idx] = rustfft::num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    Ok(sg.inverse_vector(spec))
}

/// Band-limited, projected solenoidal, mean-zero field scaled to
/// `sup|u| = amplitude`. Equal seeds give identical fields.
pub fn ic_random_solenoidal(grid: &Grid3, seed: u64, kmax: usize, amplitude: f64) -> Result<VectorField> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude must be non-negative, got {amplitude}")));
    }
    let raw = random_band_limited(grid, seed, kmax)?;
    let sg = SpectralGrid::new(grid)?;
    let mut h = sg.forward_vector(&raw);
    sg.leray_project(&mut h);
    for c in h.iter_mut() {
        c[0] = ZERO;
    }
    let u = sg.inverse_vector(h);
    let sup = u.sup_norm();
    if sup == 0.0 {
        return Ok(u);
    }
    Ok(u.scale(amplitude / sup))
}

/// Solves `△p = −ρ div((u·∇)u)` spectrally with a mean-zero gauge.
pub fn pressure_solve(u: &VectorField, rho: f64) -> Result<ScalarField> {
    require_periodic(u.grid(), "pressure_solve")?;
    let sg = SpectralGrid::new(u.grid())?;
    let a = sg.forward_vector(&calculus::advect(u, u, DiffBackend::Spectral)?);
    let mut p = vec![ZERO; sg.len()];
    sg.for_each_mode(|idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let kdot = k[0] * a[0][idx] + k[1] * a[1][idx] + k[2] * a[2][idx];
            p[idx] = rho * I * kdot / k2;
        }
    });
    Ok(sg.inverse(p))
}

/// Right-hand side without viscosity: `−P[(u·∇)u]` with the mean mode
/// removed, so stepping conserves the mean of `u`.
struct Rhs {
    sg: SpectralGrid,
    dealias: bool,
}

impl Rhs {
    fn eval(&self, uh: &[Spectrum; 3]) -> [Spectrum; 3] {
        let sg = &self.sg;
        let trunc = |s: &Spectrum| {
            let mut s = s.clone();
            if self.dealias {
                sg.dealias(&mut s);
            }
            s
        };
        let ut: Vec<Spectrum> = uh.iter().map(trunc).collect();
        let u: Vec<ScalarField> = ut.iter().map(|s| sg.inverse(s.clone())).collect();
        let mut out: [Spectrum; 3] = Default::default();
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = vec![0.0; sg.len()];
            for (j, uj) in u.iter().enumerate() {
                let d = sg.inverse(sg.derivative(&ut[i], j));
                for ((a, &x), &y) in acc.iter_mut().zip(uj.data()).zip(d.data()) {
                    *a += x * y;
                }
            }
            let mut s = sg.forward(&ScalarField::from_vec_unchecked(*sg.grid(), acc));
            if self.dealias {
                sg.dealias(&mut s);
            }
            s.iter_mut().for_each(|c| *c = -*c);
            *slot = s;
        }
        sg.leray_project(&mut out);
        for c in out.iter_mut() {
            c[0] = ZERO;
        }
        out
    }
}

struct Stepper {
    rhs: Rhs,
    dt: f64,
    /// `exp(−ν|k|²dt)` and `exp(−ν|k|²dt/2)`.
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Stepper {
    fn new(grid: &Grid3, params: &SimParams) -> Result<Self> {
        params.validate()?;
        require_periodic(grid, "the flow solver")?;
        let sg = SpectralGrid::new(grid)?;
        let k2 = sg.k_squared();
        let full = k2.iter().map(|k| (-params.nu * k * params.dt).exp()).collect();
        let half = k2.iter().map(|k| (-params.nu * k * params.dt / 2.0).exp()).collect();
        Ok(Self {
            rhs: Rhs {
                sg,
                dealias: params.dealias,
            },
            dt: params.dt,
            full,
            half,
        })
    }

    fn cfl(&self, u: &VectorField) -> f64 {
        self.dt * u.sup_norm() / u.grid().min_spacing()
    }

    /// One Lawson RK4 step in spectral space.
    fn advance(&self, uh: &[Spectrum; 3]) -> [Spectrum; 3] {
        let dt = self.dt;
        let combine = |f: &dyn Fn(usize, usize) -> rustfft::num_complex::Complex64| -> [Spectrum; 3] {
            let n = uh[0].len();
            [
                (0..n).map(|i| f(0, i)).collect(),
                (0..n).map(|i| f(1, i)).collect(),
                (0..n).map(|i| f(2, i)).collect(),
            ]
        };
        let (e, e2) = (&self.full, &self.half);
        let k1 = self.rhs.eval(uh);
        let a = combine(&|c, i| e2[i] * (uh[c][i] + 0.5 * dt * k1[c][i]));
        let k2 = self.rhs.eval(&a);
        let b = combine(&|c, i| e2[i] * uh[c][i] + 0.5 * dt * k2[c][i]);
        let k3 = self.rhs.eval(&b);
        let d = combine(&|c, i| e[i] * uh[c][i] + dt * e2[i] * k3[c][i]);
        let k4 = self.rhs.eval(&d);
        combine(&|c, i| {
            e[i] * uh[c][i] + dt / 6.0 * (e[i] * k1[c][i] + 2.0 * e2[i] * (k2[c][i] + k3[c][i]) + k4[c][i])
        })
    }

    /// Checks CFL on `u`, advances, and checks the result is finite.
    fn step_velocity(&self, u: &VectorField, step: usize) -> Result<VectorField> {
        let cfl = self.cfl(u);
        if !(cfl <= CFL_LIMIT) {
            if !u.is_finite() {
                return Err(Error::Blowup { step });
            }
            return Err(Error::Cfl { step, cfl });
        }
        let sg = &self.rhs.sg;
        let next = sg.inverse_vector(self.advance(&sg.forward_vector(u)));
        if !next.is_finite() {
            return Err(Error::Blowup { step });
        }
        Ok(next)
    }
}

/// Advances one time step and recomputes the pressure.
pub fn step(state: &FlowState, params: &SimParams) -> Result<FlowState> {
    let stepper = Stepper::new(state.u.grid(), params)?;
    let u = stepper.step_velocity(&state.u, 0)?;
    let p = pressure_solve(&u, params.rho)?;
    Ok(FlowState {
        u,
        p,
        t: state.t + params.dt,
    })
}

/// Runs `params.steps` steps from `u0`, recording every
/// `snapshot_every`-th state plus the initial and final states.
pub fn simulate(u0: &VectorField, params: &SimParams, snapshot_every: usize) -> Result<Trajectory> {
    if snapshot_every == 0 {
        return Err(Error::InvalidArgument("snapshot_every must be at least 1".into()));
    }
    let grid = *u0.grid();
    let stepper = Stepper::new(&grid, params)?;
    let record = |u: &VectorField, n: usize| -> Result<FlowState> {
        Ok(FlowState {
            u: u.clone(),
            p: pressure_solve(u, params.rho)?,
            t: n as f64 * params.dt,
        })
    };
    let mut states = vec![record(u0, 0)?];
    let mut u = u0.clone();
    for n in 0..params.steps {
        u = stepper.step_velocity(&u, n)?;
        let done = n + 1;
        if done % snapshot_every == 0 || done == params.steps {
            states.push(record(&u, done)?);
        }
    }
    Ok(Trajectory {
        params: *params,
        grid,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Boundary};

    fn cube(n: usize) -> Grid3 {
        Grid3::periodic_cube(n).unwrap()
    }

    #[test]
    fn initial_conditions_are_solenoidal() {
        let g = cube(16);
        let c = g.center();
        let fields = [
            ic_taylor_green(&g).unwrap(),
            ic_abc(&g, 1.0, 0.7, 0.3).unwrap(),
            ic_gaussian_vortex(&g, c, 0.8, 1.0).unwrap(),
            ic_random_solenoidal(&g, 7, 4, 1.0).unwrap(),
        ];
        for f in &fields {
            assert!(calculus::div(f, DiffBackend::Spectral).unwrap().sup_norm() <= 1e-12);
        }
    }

    #[test]
    fn random_ic_is_seeded() {
        let g = cube(16);
        let a = ic_random_solenoidal(&g, 3, 3, 2.0).unwrap();
        assert_eq!(a, ic_random_solenoidal(&g, 3, 3, 2.0).unwrap());
        assert_ne!(a, ic_random_solenoidal(&g, 4, 3, 2.0).unwrap());
        assert!((a.sup_norm() - 2.0).abs() < 1e-12);
        assert!(a.mean().iter().all(|m| m.abs() < 1e-14));
        assert!(ic_random_solenoidal(&g, 3, 8, 1.0).is_err());
        assert!(ic_random_solenoidal(&g, 3, 0, 1.0).is_err());
    }

    #[test]
    fn gaussian_vortex_on_window_is_analytic_curl() {
        // the discrete divergence is pure truncation error: fourth order
        let div_at = |n: usize| {
            let g = make_grid([n; 3], [6.0; 3], Boundary::TruncatedWindow).unwrap();
            let u = ic_gaussian_vortex(&g, g.center(), 1.0, 1.0).unwrap();
            assert!((u.at(n / 2, n / 2 - 1, 0)[2]).abs() == 0.0);
            calculus::div(&u, DiffBackend::FiniteDifference(4)).unwrap().sup_norm()
        };
        let (coarse, fine) = (div_at(16), div_at(32));
        assert!(coarse / fine > 10.0, "{coarse} {fine}");
        let g = make_grid([8; 3], [6.0; 3], Boundary::TruncatedWindow).unwrap();
        assert!(ic_gaussian_vortex(&g, g.center(), 0.0, 1.0).is_err());
    }

    #[test]
    fn taylor_green_pressure() {
        let g = cube(32);
        let u = ic_taylor_green(&g).unwrap();
        let p = pressure_solve(&u, 1.5).unwrap();
        let want = ScalarField::sample(g, |x| -1.5 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0).unwrap();
        assert!((&p - &want).sup_norm() <= 1e-10);
        assert_eq!(pressure_solve(&VectorField::zeros(g), 1.0).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn abc_pressure_residual() {
        let g = cube(32);
        let u = ic_abc(&g, 1.0, 0.8, 0.6).unwrap();
        let p = pressure_solve(&u, 1.0).unwrap();
        let lap = calculus::laplacian(&p, DiffBackend::Spectral).unwrap();
        let rhs = calculus::div(&calculus::advect(&u, &u, DiffBackend::Spectral).unwrap(), DiffBackend::Spectral)
            .unwrap()
            .scale(-1.0);
        assert!((&lap - &rhs).sup_norm() <= 1e-9);
    }

    #[test]
    fn zero_is_fixed_point() {
        let g = cube(8);
        let s = FlowState {
            u: VectorField::zeros(g),
            p: ScalarField::zeros(g),
            t: 0.0,
        };
        let next = step(&s, &SimParams::default()).unwrap();
        assert_eq!(next.u.sup_norm(), 0.0);
        assert_eq!(next.t, 5e-3);
    }

    #[test]
    fn taylor_green_single_step() {
        let g = cube(16);
        let u0 = ic_taylor_green(&g).unwrap();
        let params = SimParams {
            dt: 0.01,
            ..SimParams::default()
        };
        let s = FlowState {
            p: pressure_solve(&u0, 1.0).unwrap(),
            u: u0.clone(),
            t: 0.0,
        };
        let next = step(&s, &params).unwrap();
        let want = u0.scale((-0.2f64 * 0.01).exp());
        assert!((&next.u - &want).sup_norm() <= 1e-10 * u0.sup_norm());
    }

    #[test]
    fn cfl_guard_and_bad_params() {
        let g = cube(8);
        let u0 = ic_taylor_green(&g).unwrap();
        let params = SimParams {
            dt: 1.0,
            ..SimParams::default()
        };
        assert!(matches!(simulate(&u0, &params, 1), Err(Error::Cfl { step: 0, .. })));
        let bad = SimParams {
            nu: -1.0,
            ..SimParams::default()
        };
        assert!(simulate(&u0, &bad, 1).is_err());
        assert!(simulate(&u0, &SimParams::default(), 0).is_err());
        let w = make_grid([8; 3], [1.0; 3], Boundary::TruncatedWindow).unwrap();
        assert!(simulate(&VectorField::zeros(w), &SimParams::default(), 1).is_err());
    }

    #[test]
    fn recording_schedule() {
        let g = cube(8);
        let u0 = ic_taylor_green(&g).unwrap();
        let params = SimParams {
            steps: 7,
            ..SimParams::default()
        };
        let traj = simulate(&u0, &params, 3).unwrap();
        let steps: Vec<usize> = traj.times().iter().map(|t| (t / 5e-3).round() as usize).collect();
        assert_eq!(steps, vec![0, 3, 6, 7]);
        let empty = simulate(&u0, &SimParams { steps: 0, ..params }, 3).unwrap();
        assert_eq!(empty.states.len(), 1);
        assert_eq!(empty.states[0].p, pressure_solve(&u0, 1.0).unwrap());
    }
}
