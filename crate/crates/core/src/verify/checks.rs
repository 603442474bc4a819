use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::report::{CheckReport, ResidualSample};
use super::vorticity::{vorticity_states, VorticityState};
use crate::calculus::{self, DiffBackend};
use crate::error::{Error, Result};
use crate::field::{Norms, ScalarField, VectorField};
use crate::flow::{FlowState, Trajectory};
use crate::heat::{self, HeatBackend, HeatParams};
use crate::helmholtz::{self, HelmholtzBackend};
use crate::spectral::SpectralGrid;

const SP: DiffBackend = DiffBackend::Spectral;
const HP: HelmholtzBackend = HelmholtzBackend::SpectralPoisson;
const HB: HeatBackend = HeatBackend::Spectral;

/// Tolerances, gates and thresholds for every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub reconstruction_tol: f64,
    pub pressure_tol: f64,
    pub gamma_tol: f64,
    /// Vorticity transport tolerance is this factor times the squared frame
    /// spacing.
    pub transport_factor: f64,
    pub lemma1_tol: f64,
    pub theorem1_tol: f64,
    pub corollary_eps: f64,
    pub theorem2_k: usize,
    pub theorem2_gate: f64,
    pub theorem2_tol: f64,
    pub monitor_rel_tol: f64,
    pub eps_lap: f64,
    pub lambda_substeps: usize,
    /// Evolve λ with δ = 1 everywhere (plain heat flow of the vorticity).
    pub lambda_unit_delta: bool,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            reconstruction_tol: 1e-9,
            pressure_tol: 1e-6,
            gamma_tol: 1e-6,
            transport_factor: 10.0,
            lemma1_tol: 1e-9,
            theorem1_tol: 1e-6,
            corollary_eps: 1e-8,
            theorem2_k: 1,
            theorem2_gate: 1e-8,
            theorem2_tol: 1e-6,
            monitor_rel_tol: 1e-8,
            eps_lap: 1e-8,
            lambda_substeps: 4,
            lambda_unit_delta: false,
            delta_min: 0.0,
            delta_max: 1e3,
        }
    }
}

fn require_periodic(traj: &Trajectory) -> Result<()> {
    if traj.grid.is_periodic() {
        Ok(())
    } else {
        Err(Error::Config("trajectory checks require a periodic grid".into()))
    }
}

/// `x`, or 1 when `x` is zero (so that 0/0 reads as 0).
fn nz(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        1.0
    }
}

fn rms<F: Norms>(f: &F, volume: f64) -> f64 {
    f.norms().l2 / volume.sqrt()
}

/// Sup and RMS of `r`, both divided by `scale`.
fn relative<F: Norms + HasGrid>(t: f64, r: &F, scale: f64) -> ResidualSample {
    ResidualSample {
        t,
        sup: r.sup_norm() / scale,
        l2: rms(r, r.grid_ref().volume()) / scale,
        masked: 0,
    }
}

trait HasGrid {
    fn grid_ref(&self) -> &crate::grid::Grid3;
}

impl HasGrid for ScalarField {
    fn grid_ref(&self) -> &crate::grid::Grid3 {
        self.grid()
    }
}

impl HasGrid for VectorField {
    fn grid_ref(&self) -> &crate::grid::Grid3 {
        self.grid()
    }
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Scalar potential of the nonlinear term in the Newtonian sign convention
/// (`−phi` of the decomposition).
fn newtonian_phi(u: &VectorField, nu: f64) -> Result<ScalarField> {
    let n = calculus::nonlinear_term(u, nu, SP)?;
    Ok(helmholtz::decompose(&n, HP)?.phi.scale(-1.0))
}

/// Relative reconstruction and part-property residuals of one field:
/// `max(‖f − grad φ − curl Φ − mean‖, ‖div curl Φ‖, ‖curl grad φ‖) / ‖f‖`
/// in sup and RMS.
pub fn reconstruction_residual(f: &VectorField) -> Result<(f64, f64)> {
    let parts = helmholtz::decompose(f, HP)?;
    let rec = f - &parts.reconstruct();
    let d = calculus::div(&parts.curl_part, SP)?;
    let c = calculus::curl(&parts.grad_part, SP)?;
    let scale = nz(f.sup_norm());
    let vol = f.grid().volume();
    let sup = worst([rec.sup_norm(), d.sup_norm(), c.sup_norm()]) / scale;
    let l2 = worst([rms(&rec, vol), rms(&d, vol), rms(&c, vol)]) / scale;
    Ok((sup, l2))
}

pub fn check_reconstruction(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let mut residuals = Vec::new();
    for s in &traj.states {
        let n = calculus::nonlinear_term(&s.u, traj.params.nu, SP)?;
        let (sup, l2) = reconstruction_residual(&n)?;
        residuals.push(ResidualSample {
            t: s.t,
            sup,
            l2,
            masked: 0,
        });
    }
    Ok(CheckReport::judged("check_reconstruction", opts.reconstruction_tol, residuals)
        .with_note("nonlinear term (u.grad)u - nu lap u decomposed spectrally; residual is the worst of reconstruction, div of the solenoidal part and curl of the gradient part, relative to sup of the term"))
}

pub fn check_pressure_harmonic(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let rho = traj.params.rho;
    let mut residuals = Vec::new();
    let (mut literal, mut spread) = (0.0f64, 0.0f64);
    for s in &traj.states {
        let phi_n = newtonian_phi(&s.u, traj.params.nu)?;
        let mut q = s.p.clone();
        q.axpy(-rho, &phi_n);
        let lap_q = calculus::laplacian(&q, SP)?;
        let lap_p = calculus::laplacian(&s.p, SP)?;
        let scale = nz(lap_p.sup_norm());
        residuals.push(relative(s.t, &lap_q, scale));
        // the same quantity with the opposite potential sign
        let mut q_lit = s.p.clone();
        q_lit.axpy(rho, &phi_n);
        literal = literal.max(calculus::laplacian(&q_lit, SP)?.sup_norm() / scale);
        spread = spread.max(q.max() - q.min());
    }
    Ok(CheckReport::judged("check_pressure_harmonic", opts.pressure_tol, residuals)
        .with_note("residual: sup|lap(p - rho phi)| / sup|lap p| with phi the Newtonian potential (1/4pi) int div N / r of the nonlinear term N")
        .with_note(format!("worst spatial spread of p - rho phi: {spread:.3e}"))
        .with_note(format!(
            "with phi of the opposite sign (lap phi = div N) the ratio is {literal:.3e}"
        )))
}

pub fn check_gamma_consistency(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let (nu, rho) = (traj.params.nu, traj.params.rho);
    let s0 = &traj.states[0];
    let phi0 = newtonian_phi(&s0.u, nu)?;
    let scale = nz(s0.p.sup_norm());
    let mut residuals = Vec::new();
    for s in &traj.states {
        let g = heat::gamma(&s0.p, &phi0, rho, HeatParams::new(nu, s.t)?, HB)?;
        let mut target = s.p.clone();
        target.axpy(-rho, &newtonian_phi(&s.u, nu)?);
        residuals.push(relative(s.t, &(&g - &target), scale));
    }
    Ok(CheckReport::informational("check_gamma_consistency", opts.gamma_tol, residuals)
        .with_note("Gamma(t) = heat semigroup applied to p(0) - rho phi(0), compared with p(t) - rho phi(t); relative to sup|p(0)|"))
}

fn frame_spacing(traj: &Trajectory) -> f64 {
    let t = traj.times();
    t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

pub fn check_vorticity_transport(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let spacing = frame_spacing(traj);
    let tol = opts.transport_factor * spacing * spacing;
    let vs = vorticity_states(traj)?;
    let mut residuals = Vec::new();
    for (s, w) in traj.states.iter().zip(&vs) {
        if !w.interior {
            continue;
        }
        let adv = calculus::advect(&s.u, &s.u, SP)?;
        let mut r = &w.dvdt + &calculus::curl(&adv, SP)?;
        r.axpy(-traj.params.nu, &w.lapv);
        residuals.push(relative(s.t, &r, nz(w.v.sup_norm())));
    }
    if residuals.is_empty() {
        return Ok(CheckReport::not_applicable(
            "check_vorticity_transport",
            tol,
            "needs at least three frames for a centered time derivative",
        ));
    }
    Ok(CheckReport::judged("check_vorticity_transport", tol, residuals).with_note(format!(
        "dv/dt + curl((u.grad)u) - nu lap v with centered frame differences; tolerance {} x (frame spacing {spacing:.3e})^2, relative to sup|v|",
        opts.transport_factor
    )))
}

/// `(correct, reversed)` relative residuals of the curl-of-advection
/// identity for solenoidal `u` with `v = curl u`:
/// `curl((u·∇)u) = (u·∇)v − (v·∇)u`, and the same with the right-hand side
/// negated.
pub fn lemma1_residuals(u: &VectorField) -> Result<(f64, f64)> {
    let v = calculus::curl(u, SP)?;
    let lhs = calculus::curl(&calculus::advect(u, u, SP)?, SP)?;
    let uv = calculus::advect(u, &v, SP)?;
    let vu = calculus::advect(&v, u, SP)?;
    let rhs = &uv - &vu;
    let scale = nz(worst([
        lhs.sup_norm(),
        uv.sup_norm(),
        vu.sup_norm(),
        v.sup_norm() * v.sup_norm(),
    ]));
    Ok(((&lhs - &rhs).sup_norm() / scale, (&lhs + &rhs).sup_norm() / scale))
}

fn lemma1_report(samples: Vec<(f64, f64, f64)>, opts: &CheckOptions) -> CheckReport {
    let reversed = worst(samples.iter().map(|s| s.2));
    let residuals = samples
        .into_iter()
        .map(|(t, sup, _)| ResidualSample {
            t,
            sup,
            l2: 0.0,
            masked: 0,
        })
        .collect();
    CheckReport::judged("check_lemma1_identity", opts.lemma1_tol, residuals)
        .with_note("identity curl((u.grad)u) = (u.grad)v - (v.grad)u; relative to max(sup|lhs|, sup|(u.grad)v|, sup|(v.grad)u|, sup|v|^2)")
        .with_note(format!(
            "with the two advection terms swapped the residual is {reversed:.3e}"
        ))
}

pub fn check_lemma1_identity(u: &VectorField, opts: &CheckOptions) -> Result<CheckReport> {
    let (c, r) = lemma1_residuals(u)?;
    Ok(lemma1_report(vec![(0.0, c, r)], opts))
}

/// The identity check applied at every frame of a trajectory.
pub fn check_lemma1_trajectory(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let samples = traj
        .states
        .iter()
        .map(|s| lemma1_residuals(&s.u).map(|(c, r)| (s.t, c, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(lemma1_report(samples, opts))
}

/// Cumulative trapezoid integrals `∫₀^{t_n} (1/ρ) grad Γ(s) ds` at every
/// frame, with `Γ` propagated from the first frame.
fn gamma_gradient_integrals(traj: &Trajectory) -> Result<Vec<VectorField>> {
    let (nu, rho) = (traj.params.nu, traj.params.rho);
    let s0 = &traj.states[0];
    let phi0 = newtonian_phi(&s0.u, nu)?;
    let mut out: Vec<VectorField> = Vec::with_capacity(traj.states.len());
    let mut prev: Option<(f64, VectorField)> = None;
    for s in &traj.states {
        let g = heat::gamma(&s0.p, &phi0, rho, HeatParams::new(nu, s.t)?, HB)?;
        let grad = calculus::grad(&g, SP)?.scale(1.0 / rho);
        let acc = match (&prev, out.last()) {
            (Some((t0, g0)), Some(last)) => {
                let mut acc = last.clone();
                let h = s.t - t0;
                acc.axpy(h / 2.0, g0);
                acc.axpy(h / 2.0, &grad);
                acc
            }
            _ => VectorField::zeros(traj.grid),
        };
        out.push(acc);
        prev = Some((s.t, grad));
    }
    Ok(out)
}

pub fn check_theorem1(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let integrals = gamma_gradient_integrals(traj)?;
    let scale = nz(traj.states[0].u.sup_norm());
    let mut residuals = Vec::new();
    let (mut gradient_content, mut integral_size) = (Vec::new(), Vec::new());
    for (s, int) in traj.states.iter().zip(&integrals) {
        let h = helmholtz::h_operator(&s.u, HP)?;
        let non_sol = &s.u - &h;
        gradient_content.push(non_sol.sup_norm() / scale);
        integral_size.push(int.sup_norm() / scale);
        residuals.push(relative(s.t, &(&non_sol + int), scale));
    }
    Ok(CheckReport::judged("check_theorem1", opts.theorem1_tol, residuals)
        .with_note("r = u - H(u) + int_0^t (1/rho) grad Gamma ds (trapezoid over frames), relative to sup|u(0)|")
        .with_series("u_minus_hu", gradient_content)
        .with_series("gamma_integral", integral_size))
}

pub fn check_corollary1(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let eps = opts.corollary_eps;
    let c_grid = 1.0 / traj.grid.min_wavenumber();
    let tol = c_grid * eps;
    let curls: Vec<f64> = traj
        .states
        .iter()
        .map(|s| calculus::curl(&s.u, SP).map(|v| v.sup_norm()))
        .collect::<Result<_>>()?;
    let Some(start) = curls.iter().position(|&c| c <= eps) else {
        let least = curls.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(CheckReport::not_applicable(
            "check_corollary1",
            tol,
            format!("sup|curl u| never falls to {eps:e} (smallest {least:.3e})"),
        ));
    };
    let mut residuals = Vec::new();
    for s in &traj.states[start..] {
        let grad_part = helmholtz::decompose(&s.u, HP)?.grad_part;
        let sup = s.u.sup_norm().max(grad_part.sup_norm());
        residuals.push(ResidualSample {
            t: s.t,
            sup,
            l2: rms(&s.u, traj.grid.volume()),
            masked: 0,
        });
    }
    Ok(CheckReport::judged("check_corollary1", tol, residuals).with_note(format!(
        "applicable from t = {:.4} where sup|curl u| <= {eps:e}; bound C_grid*eps with C_grid = 1/k_min = {c_grid:.4}",
        traj.states[start].t
    )))
}

pub fn check_theorem2(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let k = opts.theorem2_k;
    let nu = traj.params.nu;
    let name = "check_theorem2";

    // gate on curl^k of the advective term, relative to sup|u| sup|curl^k u|
    let mut gate_worst = 0.0f64;
    for s in &traj.states {
        let adv = calculus::advect(&s.u, &s.u, SP)?;
        let ck = calculus::curl_k(&adv, k, SP)?.sup_norm();
        let denom = s.u.sup_norm() * calculus::curl_k(&s.u, k, SP)?.sup_norm();
        gate_worst = gate_worst.max(if denom > 0.0 { ck / denom } else { ck });
    }
    let u0 = &traj.states[0].u;
    let full = calculus::curl_k(&calculus::nonlinear_term(u0, nu, SP)?, k, SP)?.sup_norm();
    let full_note = format!(
        "gate uses curl^k of (u.grad)u only; curl^k of the full nonlinear term at t=0 has sup {full:.3e}"
    );
    if gate_worst > opts.theorem2_gate {
        return Ok(CheckReport::not_applicable(
            name,
            opts.theorem2_tol,
            format!(
                "gate failed: sup|curl^{k}((u.grad)u)| / (sup|u| sup|curl^{k} u|) = {gate_worst:.3e} > {:e}",
                opts.theorem2_gate
            ),
        )
        .with_note(full_note));
    }

    let v0k = calculus::curl_k(u0, k, SP)?;
    let scale_v = nz(v0k.sup_norm());
    let scale_u = nz(u0.sup_norm());
    let integrals = gamma_gradient_integrals(traj)?;
    let (mut a_series, mut b_series) = (Vec::new(), Vec::new());
    let mut projection_only = 0.0f64;
    let mut residuals = Vec::new();
    for (s, int) in traj.states.iter().zip(&integrals) {
        let xi = heat::xi(u0, k, HeatParams::new(nu, s.t)?, HB)?;
        let vk = calculus::curl_k(&s.u, k, SP)?;
        let a = (&vk - &xi).sup_norm() / scale_v;

        let mut w = xi.clone();
        for _ in 0..k {
            w = helmholtz::biot_savart(&w, HP)?;
        }
        let rep = &helmholtz::h_operator(&w, HP)? - int;
        let b = (&s.u - &rep).sup_norm() / scale_u;
        projection_only = projection_only.max((&s.u - &helmholtz::h_k(&xi, k, HP)?).sup_norm() / scale_u);

        a_series.push(a);
        b_series.push(b);
        residuals.push(ResidualSample {
            t: s.t,
            sup: a.max(b),
            l2: 0.0,
            masked: 0,
        });
    }
    let (wa, wb) = (worst(a_series.iter().cloned()), worst(b_series.iter().cloned()));
    Ok(CheckReport::judged(name, opts.theorem2_tol, residuals)
        .with_part("vorticity_vs_xi", opts.theorem2_tol, wa)
        .with_part("velocity_vs_h_of_xi", opts.theorem2_tol, wb)
        .with_series("vorticity_vs_xi", a_series)
        .with_series("velocity_vs_h_of_xi", b_series)
        .with_note(format!("gate passed: worst ratio {gate_worst:.3e} <= {:e}", opts.theorem2_gate))
        .with_note(full_note)
        .with_note(format!("k = {k}; velocity reconstructed as H(B^k xi) - int (1/rho) grad Gamma with B the vector potential without outer curl"))
        .with_note(format!(
            "comparing u with H^k(xi) directly gives {projection_only:.3e} (H^k(xi) is a vorticity-like field)"
        )))
}

/// Spectral gradient of every component of `f`.
fn component_gradients(f: &VectorField) -> Result<[VectorField; 3]> {
    Ok([
        calculus::grad(f.component(0), SP)?,
        calculus::grad(f.component(1), SP)?,
        calculus::grad(f.component(2), SP)?,
    ])
}

pub fn monitor_theorem34(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let name = "monitor_theorem34";
    let n = traj.states.len();
    if n < 5 {
        return Ok(CheckReport::not_applicable(name, 0.0, "needs at least five frames"));
    }
    let vs = vorticity_states(traj)?;
    let times = traj.times();
    let vfields: Vec<VectorField> = vs.iter().map(|w| w.v.clone()).collect();
    let nu = traj.params.nu;
    let g = traj.grid;

    let mut residuals = Vec::new();
    let (mut violations, mut margins) = (Vec::new(), Vec::new());
    let mut total = 0usize;
    let mut worst_excess: Option<(f64, f64, usize, usize)> = None;
    let mut worst_margin = f64::NEG_INFINITY;
    for f in 2..n - 2 {
        let state: &FlowState = &traj.states[f];
        let w: &VorticityState = &vs[f];
        // centered difference over the wider pair of neighbours
        let wide = (&vfields[f + 2] - &vfields[f - 2]).scale(1.0 / (times[f + 2] - times[f - 2]));
        let gv = component_gradients(&w.v)?;
        let gu = component_gradients(&state.u)?;
        let v2 = w.v.magnitude_squared();
        let u2 = state.u.magnitude_squared();
        let (mut frame_viol, mut frame_excess, mut frame_sq, mut frame_margin) = (0usize, 0.0f64, 0.0f64, f64::NEG_INFINITY);
        for c in 0..3 {
            let dv = w.dvdt.component(c).data();
            let dw = wide.component(c).data();
            let lap = w.lapv.component(c).data();
            let gvc = gv[c].magnitude_squared();
            let guc = gu[c].magnitude_squared();
            for p in 0..g.len() {
                let l = dv[p] / 4.0;
                let r = v2.data()[p] + gvc.data()[p] + u2.data()[p] + guc.data()[p] + (nu * lap[p]).max(0.0);
                let tol = opts.monitor_rel_tol * (1.0 + r.abs()) + (dw[p] - dv[p]).abs() / 12.0;
                let margin = l - r;
                frame_margin = frame_margin.max(margin);
                let excess = margin - tol;
                if excess > 0.0 {
                    frame_viol += 1;
                    frame_sq += excess * excess;
                    if excess > frame_excess {
                        frame_excess = excess;
                    }
                    if worst_excess.map_or(true, |we| excess > we.0) {
                        worst_excess = Some((excess, times[f], p, c));
                    }
                }
            }
        }
        total += frame_viol;
        worst_margin = worst_margin.max(frame_margin);
        violations.push(frame_viol as f64);
        margins.push(frame_margin);
        residuals.push(ResidualSample {
            t: times[f],
            sup: frame_excess,
            l2: (frame_sq / (3 * g.len()) as f64).sqrt(),
            masked: 0,
        });
    }
    let mut report = CheckReport::judged(name, 0.0, residuals)
        .with_series("violations", violations)
        .with_series("max_margin", margins)
        .with_note("L = (1/4) dv_i/dt against R = |v|^2 + |grad v_i|^2 + |u|^2 + |grad u_i|^2 + max(nu lap v_i, 0); residual is the largest excess of L over R + tol")
        .with_note(format!(
            "tol = {:e} (1 + |R|) + |D_wide - D_centered| / 12; {total} violations; largest L - R = {worst_margin:.3e}",
            opts.monitor_rel_tol
        ));
    if let Some((excess, t, p, c)) = worst_excess {
        let (i, j, k) = g.unravel(p);
        report = report.with_note(format!(
            "worst violation {excess:.3e} at t = {t:.4}, point ({i}, {j}, {k}), component {c}"
        ));
    }
    Ok(report)
}

/// Pointwise terms of the δ mapping for one frame. Entries at masked points
/// (|ν△v_i| ≤ eps) are NaN.
#[derive(Clone, Debug)]
pub struct DeltaTerms {
    /// `mask[i][p]` is true where the point is excluded.
    pub mask: [Vec<bool>; 3],
    /// `g[i][j][p]` is `g_{j+1}` of component `i`.
    pub g: [[Vec<f64>; 4]; 3],
    pub delta: [Vec<f64>; 3],
}

impl DeltaTerms {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().map(|m| m.iter().filter(|x| **x).count()).sum()
    }
}

pub fn delta_terms(u: &VectorField, w: &VorticityState, nu: f64, eps_lap: f64) -> Result<DeltaTerms> {
    let gv = component_gradients(&w.v)?;
    let gu = component_gradients(u)?;
    let v2 = w.v.magnitude_squared();
    let u2 = u.magnitude_squared();
    let len = u.grid().len();
    let mut mask: [Vec<bool>; 3] = Default::default();
    let mut g: [[Vec<f64>; 4]; 3] = Default::default();
    let mut delta: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let lap = w.lapv.component(c).data();
        let gvc = gv[c].magnitude_squared();
        let guc = gu[c].magnitude_squared();
        let numerators = [v2.data(), gvc.data(), u2.data(), guc.data()];
        for gj in g[c].iter_mut() {
            *gj = vec![f64::NAN; len];
        }
        mask[c] = vec![true; len];
        delta[c] = vec![f64::NAN; len];
        for p in 0..len {
            let d = nu * lap[p];
            if !(d.abs() > eps_lap) {
                continue;
            }
            mask[c][p] = false;
            let mut sum = 1.0;
            for (j, num) in numerators.iter().enumerate() {
                let val = num[p] / d;
                g[c][j][p] = val;
                sum += val;
            }
            delta[c][p] = sum;
        }
    }
    Ok(DeltaTerms { mask, g, delta })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted_finite(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn delta_diagnostic(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    require_periodic(traj)?;
    let vs = vorticity_states(traj)?;
    let nu = traj.params.nu;
    let mut residuals = Vec::new();
    let names = ["delta_min", "delta_q10", "delta_median", "delta_q90", "delta_max", "g1_median", "g2_median", "g3_median", "g4_median"];
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut trend: Vec<f64> = Vec::new();
    for (s, w) in traj.states.iter().zip(&vs) {
        let terms = delta_terms(&s.u, w, nu, opts.eps_lap)?;
        let all = sorted_finite(terms.delta.iter().flatten().cloned());
        let stats = [
            all.first().cloned().unwrap_or(f64::NAN),
            quantile(&all, 0.1),
            quantile(&all, 0.5),
            quantile(&all, 0.9),
            all.last().cloned().unwrap_or(f64::NAN),
        ];
        for (slot, v) in series.iter_mut().zip(stats) {
            slot.push(v);
        }
        for j in 0..4 {
            let gj = sorted_finite(terms.g.iter().flat_map(|c| c[j].iter().cloned()));
            series[5 + j].push(quantile(&gj, 0.5));
        }
        let dev = sorted_finite(all.iter().map(|d| (d - 1.0).abs()));
        let median_dev = quantile(&dev, 0.5);
        trend.push(median_dev);
        residuals.push(ResidualSample {
            t: s.t,
            sup: all.iter().map(|d| d.abs()).fold(0.0, f64::max),
            l2: median_dev,
            masked: terms.masked_count(),
        });
    }
    let mut report = CheckReport::informational("delta_diagnostic", opts.eps_lap, residuals)
        .with_note(format!(
            "g1..g4 = |v|^2, |grad v_i|^2, |u|^2, |grad u_i|^2 over nu lap v_i; delta = 1 + sum g_j; points with |nu lap v_i| <= {:e} are masked",
            opts.eps_lap
        ))
        .with_note("residual sup = max |delta|, l2 = median |delta - 1| per frame");
    let finite: Vec<f64> = trend.iter().cloned().filter(|x| x.is_finite()).collect();
    if let (Some(first), Some(last)) = (finite.first(), finite.last()) {
        let direction = if last < first { "toward" } else { "away from" };
        report = report.with_note(format!(
            "median |delta - 1| moves {direction} 0: {first:.4e} at the first unmasked frame, {last:.4e} at the last"
        ));
    } else {
        report = report.with_note("every point is masked at every frame");
    }
    for (name, values) in names.iter().zip(series) {
        report = report.with_series(name, values);
    }
    Ok(report)
}

/// Integrates `∂_t λ_i = δ_i ν △λ_i` from `λ(0) = v(0)` across the frames,
/// with `δ` frozen over each frame interval.
///
/// Masked points use `δ = 1` and `δ` is clamped to `[delta_min, delta_max]`.
/// With `force_unit_delta` the coefficient is 1 everywhere. Each interval is
/// split into `substeps` steps of second-order Runge–Kutta in
/// integrating-factor form: the constant part `c ν △` with `c` the midrange
/// of `δ_i` is applied exactly and `(δ_i − c) ν △λ_i` explicitly.
pub fn lambda_evolution(traj: &Trajectory, opts: &CheckOptions, force_unit_delta: bool) -> Result<Vec<VectorField>> {
    require_periodic(traj)?;
    if opts.lambda_substeps == 0 {
        return Err(Error::InvalidArgument("lambda_substeps must be at least 1".into()));
    }
    let nu = traj.params.nu;
    let vs = vorticity_states(traj)?;
    let sg = SpectralGrid::new(&traj.grid)?;
    let k2 = sg.k_squared();
    let mut lam = sg.forward_vector(&vs[0].v);
    let mut out = vec![vs[0].v.clone()];
    for f in 0..vs.len() - 1 {
        let interval = vs[f + 1].t - vs[f].t;
        let terms = if force_unit_delta {
            None
        } else {
            Some(delta_terms(&traj.states[f].u, &vs[f], nu, opts.eps_lap)?)
        };
        for (c, spec) in lam.iter_mut().enumerate() {
            let delta: Vec<f64> = match &terms {
                None => vec![1.0; sg.len()],
                Some(t) => t.delta[c]
                    .iter()
                    .zip(&t.mask[c])
                    .map(|(&d, &m)| if m { 1.0 } else { d.clamp(opts.delta_min, opts.delta_max) })
                    .collect(),
            };
            let lo = delta.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mid = (lo + hi) / 2.0;
            if lo == hi {
                sg.apply_heat(spec, mid * nu * interval);
                continue;
            }
            let h = interval / opts.lambda_substeps as f64;
            let e: Vec<f64> = k2.iter().map(|k| (-mid * nu * k * h).exp()).collect();
            let coef: Vec<f64> = delta.iter().map(|d| (d - mid) * nu).collect();
            let explicit = |s: &[Complex64]| -> Vec<Complex64> {
                let lap: Vec<Complex64> = s.iter().zip(&k2).map(|(z, k)| -z * k).collect();
                let lap = sg.inverse(lap);
                let prod = ScalarField::from_vec(traj.grid, lap.data().iter().zip(&coef).map(|(a, b)| a * b).collect());
                let mut p = sg.forward(&prod.expect("finite product"));
                sg.dealias(&mut p);
                p
            };
            for _ in 0..opts.lambda_substeps {
                let k1 = explicit(spec);
                let a: Vec<Complex64> = spec.iter().zip(&k1).zip(&e).map(|((x, y), e)| (x + h * y) * e).collect();
                let k2s = explicit(&a);
                for (i, z) in spec.iter_mut().enumerate() {
                    *z = e[i] * *z + h / 2.0 * (e[i] * k1[i] + k2s[i]);
                }
            }
        }
        out.push(sg.inverse_vector(lam.clone()));
    }
    Ok(out)
}

pub fn lambda_compare(traj: &Trajectory, opts: &CheckOptions) -> Result<CheckReport> {
    let lams = lambda_evolution(traj, opts, opts.lambda_unit_delta)?;
    let vs = vorticity_states(traj)?;
    let scale = nz(vs[0].v.sup_norm());
    let mut residuals = Vec::new();
    let mut fractions = Vec::new();
    let (mut above, mut total) = (0usize, 0usize);
    let mut worst_deficit = f64::NEG_INFINITY;
    for (lam, w) in lams.iter().zip(&vs) {
        let mut count = 0usize;
        let (mut deficit, mut sq) = (f64::NEG_INFINITY, 0.0);
        for c in 0..3 {
            for (l, v) in lam.component(c).data().iter().zip(w.v.component(c).data()) {
                if l >= v {
                    count += 1;
                }
                let d = v - l;
                deficit = deficit.max(d);
                if d > 0.0 {
                    sq += d * d;
                }
            }
        }
        let n = 3 * traj.grid.len();
        above += count;
        total += n;
        worst_deficit = worst_deficit.max(deficit);
        fractions.push(count as f64 / n as f64);
        residuals.push(ResidualSample {
            t: w.t,
            sup: deficit.max(0.0) / scale,
            l2: (sq / n as f64).sqrt() / scale,
            masked: 0,
        });
    }
    Ok(CheckReport::informational("lambda_compare", 0.0, residuals)
        .with_series("fraction_lambda_ge_v", fractions)
        .with_note(format!(
            "lambda_i ≥ v_i at {:.4} of (point, frame) pairs; worst deficit max(v_i - lambda_i) = {:.3e} (relative {:.3e})",
            above as f64 / total as f64,
            worst_deficit,
            worst_deficit / scale
        ))
        .with_note(format!(
            "d lambda_i/dt = delta nu lap lambda_i with delta frozen per frame interval, clamped to [{}, {}], masked points delta = 1, {} RK2 substeps per interval",
            opts.delta_min, opts.delta_max, opts.lambda_substeps
        )))
}

/// Copy of `traj` with `amplitude·grad(sin x)` added to every velocity.
/// Used as a negative control for the representation checks.
pub fn with_gradient_pollution(traj: &Trajectory, amplitude: f64) -> Result<Trajectory> {
    let pollution = VectorField::sample(traj.grid, |p| [amplitude * p[0].cos(), 0.0, 0.0])?;
    let mut out = traj.clone();
    for s in out.states.iter_mut() {
        s.u += &pollution;
    }
    Ok(out)
}
