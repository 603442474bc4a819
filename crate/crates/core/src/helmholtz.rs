//! Helmholtz decomposition `f = grad φ + curl Φ`, the solenoidal operator
//! `H` and its iterates.
//!
//! `SpectralPoisson` solves the potentials modewise on periodic grids.
//! `DirectQuadrature` sums the Newtonian-potential integrals over the cells
//! of a truncated window (midpoint rule, singular cell skipped) and then
//! differentiates with fourth-order stencils.
//!
//! Sign convention: `φ` satisfies `△φ = div f`, so the gradient part is
//! `+grad φ`. The Newtonian potential `(1/4π)∫ div f/|x−x′|` is `−φ`.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, DiffBackend};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Boundary, Grid3};
use crate::spectral::{SpectralGrid, Spectrum, I, ZERO};
use crate::verify::report::{CheckReport, ResidualSample};

/// Stencil order used by the quadrature backend.
const QUADRATURE_FD_ORDER: usize = 4;
/// Decay check: shell sup must not exceed this fraction of the interior sup.
pub const DECAY_RATIO: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelmholtzBackend {
    SpectralPoisson,
    DirectQuadrature,
}

impl HelmholtzBackend {
    pub fn natural_for(grid: &Grid3) -> Self {
        if grid.is_periodic() {
            HelmholtzBackend::SpectralPoisson
        } else {
            HelmholtzBackend::DirectQuadrature
        }
    }

    fn validate(&self, grid: &Grid3) -> Result<()> {
        match (self, grid.boundary()) {
            (HelmholtzBackend::SpectralPoisson, Boundary::Periodic)
            | (HelmholtzBackend::DirectQuadrature, Boundary::TruncatedWindow) => Ok(()),
            (HelmholtzBackend::SpectralPoisson, _) => Err(Error::Config(
                "SpectralPoisson requires a periodic grid".into(),
            )),
            (HelmholtzBackend::DirectQuadrature, _) => Err(Error::Config(
                "DirectQuadrature requires a truncated-window grid".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzParts {
    pub phi: ScalarField,
    pub psi: VectorField,
    pub grad_part: VectorField,
    pub curl_part: VectorField,
    /// Mean of the input on periodic grids (belongs to neither part); zero on
    /// windows.
    pub remainder: [f64; 3],
    /// Set when the quadrature input fails the boundary decay check.
    pub decay_warning: Option<String>,
}

impl HelmholtzParts {
    /// `grad_part + curl_part + remainder`.
    pub fn reconstruct(&self) -> VectorField {
        let mut out = &self.grad_part + &self.curl_part;
        for c in 0..3 {
            let m = self.remainder[c];
            out.component_mut(c).data_mut().iter_mut().for_each(|v| *v += m);
        }
        out
    }
}

pub fn decompose(f: &VectorField, backend: HelmholtzBackend) -> Result<HelmholtzParts> {
    backend.validate(f.grid())?;
    match backend {
        HelmholtzBackend::SpectralPoisson => spectral_decompose(f),
        HelmholtzBackend::DirectQuadrature => quadrature_decompose(f),
    }
}

fn spectral_decompose(f: &VectorField) -> Result<HelmholtzParts> {
    let sg = SpectralGrid::new(f.grid())?;
    let n = sg.len();
    let fh = sg.forward_vector(f);
    let mut phi = vec![ZERO; n];
    let mut psi: [Spectrum; 3] = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let mut gp: [Spectrum; 3] = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let mut cp: [Spectrum; 3] = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    sg.for_each_mode(|idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            // zero mode (the mean) and modes with no resolvable derivative
            return;
        }
        let v = [fh[0][idx], fh[1][idx], fh[2][idx]];
        let kdot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
        phi[idx] = -I * kdot / k2;
        let kx = [
            k[1] * v[2] - k[2] * v[1],
            k[2] * v[0] - k[0] * v[2],
            k[0] * v[1] - k[1] * v[0],
        ];
        for c in 0..3 {
            psi[c][idx] = I * kx[c] / k2;
            gp[c][idx] = k[c] * kdot / k2;
            cp[c][idx] = v[c] - gp[c][idx];
        }
    });
    Ok(HelmholtzParts {
        phi: sg.inverse(phi),
        psi: sg.inverse_vector(psi),
        grad_part: sg.inverse_vector(gp),
        curl_part: sg.inverse_vector(cp),
        remainder: f.mean(),
        decay_warning: None,
    })
}

/// Boundary-shell thickness used by the decay check.
fn shell_layers(n: usize) -> usize {
    (n / 8).max(1)
}

/// `None` if `f` decays toward the window faces, otherwise a warning.
pub fn decay_check(f: &VectorField) -> Option<String> {
    let g = *f.grid();
    let n = g.n();
    let layers = [shell_layers(n[0]), shell_layers(n[1]), shell_layers(n[2])];
    let (mut shell, mut interior) = (0.0f64, 0.0f64);
    for idx in 0..g.len() {
        let (i, j, k) = g.unravel(idx);
        let p = f.at(i, j, k);
        let m = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let in_shell = [i, j, k]
            .iter()
            .zip(n.iter().zip(layers))
            .any(|(&x, (&nn, l))| x < l || x >= nn - l);
        if in_shell {
            shell = shell.max(m);
        } else {
            interior = interior.max(m);
        }
    }
    if shell <= DECAY_RATIO * interior || shell == 0.0 {
        None
    } else {
        Some(format!(
            "field does not decay toward the window edge: shell sup {shell:.3e} exceeds {DECAY_RATIO} x interior sup {interior:.3e}"
        ))
    }
}

/// Inverse distances `1/|Δ|` for every grid offset, zero at the origin.
struct InverseDistance {
    dims: [usize; 3],
    table: Vec<f64>,
}

impl InverseDistance {
    fn new(g: &Grid3) -> Self {
        let n = g.n();
        let h = g.spacing();
        let dims = [2 * n[0] - 1, 2 * n[1] - 1, 2 * n[2] - 1];
        let mut table = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for c in 0..dims[2] {
            let dz = (c as f64 - (n[2] - 1) as f64) * h[2];
            for b in 0..dims[1] {
                let dy = (b as f64 - (n[1] - 1) as f64) * h[1];
                for a in 0..dims[0] {
                    let dx = (a as f64 - (n[0] - 1) as f64) * h[0];
                    let r2 = dx * dx + dy * dy + dz * dz;
                    table.push(if r2 == 0.0 { 0.0 } else { 1.0 / r2.sqrt() });
                }
            }
        }
        Self { dims, table }
    }
}

/// `out_s(x) = Σ_{x′ ≠ x} src_s(x′)/|x − x′|` for several sources at once.
/// Parallel over output points; each point sums in a fixed order.
fn newtonian_sums(g: &Grid3, sources: &[&[f64]]) -> Vec<Vec<f64>> {
    let [nx, ny, nz] = g.n();
    let kernel = InverseDistance::new(g);
    let [dx, dy, _] = kernel.dims;
    let ns = sources.len();
    let per_point: Vec<Vec<f64>> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = g.unravel(idx);
            let mut acc = vec![0.0; ns];
            for kk in 0..nz {
                let c = kk + nz - 1 - k;
                for jj in 0..ny {
                    let b = jj + ny - 1 - j;
                    let row = (c * dy + b) * dx + (nx - 1 - i);
                    let w = &kernel.table[row..row + nx];
                    let src_row = (kk * ny + jj) * nx;
                    for (s, a) in sources.iter().zip(acc.iter_mut()) {
                        let line = &s[src_row..src_row + nx];
                        *a += w.iter().zip(line).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            acc
        })
        .collect();
    (0..ns)
        .map(|s| per_point.iter().map(|p| p[s]).collect())
        .collect()
}

fn quadrature_decompose(f: &VectorField) -> Result<HelmholtzParts> {
    let g = *f.grid();
    let fd = DiffBackend::FiniteDifference(QUADRATURE_FD_ORDER);
    let divf = calculus::div(f, fd)?;
    let curlf = calculus::curl(f, fd)?;
    let sources = [
        divf.data(),
        curlf.component(0).data(),
        curlf.component(1).data(),
        curlf.component(2).data(),
    ];
    let sums = newtonian_sums(&g, &sources);
    let w = g.cell_volume() / (4.0 * PI);
    let mut sums = sums.into_iter().map(|s| s.into_iter().map(|v| v * w).collect::<Vec<_>>());
    let newtonian = ScalarField::from_vec_unchecked(g, sums.next().unwrap());
    let phi = newtonian.scale(-1.0);
    let psi = VectorField::from_array([
        ScalarField::from_vec_unchecked(g, sums.next().unwrap()),
        ScalarField::from_vec_unchecked(g, sums.next().unwrap()),
        ScalarField::from_vec_unchecked(g, sums.next().unwrap()),
    ]);
    Ok(HelmholtzParts {
        grad_part: calculus::grad(&phi, fd)?,
        curl_part: calculus::curl(&psi, fd)?,
        phi,
        psi,
        remainder: [0.0; 3],
        decay_warning: decay_check(f),
    })
}

/// The solenoidal operator `H(v) = curl Φ_v`.
pub fn h_operator(v: &VectorField, backend: HelmholtzBackend) -> Result<VectorField> {
    if backend == HelmholtzBackend::SpectralPoisson {
        backend.validate(v.grid())?;
        let sg = SpectralGrid::new(v.grid())?;
        let mut h = sg.forward_vector(v);
        sg.leray_project(&mut h);
        sg.for_each_mode(|idx, _, k| {
            if k == [0.0; 3] {
                for c in h.iter_mut() {
                    c[idx] = ZERO;
                }
            }
        });
        return Ok(sg.inverse_vector(h));
    }
    Ok(decompose(v, backend)?.curl_part)
}

/// `k`-fold composition of [`h_operator`]; `k = 0` is rejected.
pub fn h_k(v: &VectorField, k: usize, backend: HelmholtzBackend) -> Result<VectorField> {
    if k == 0 {
        return Err(Error::InvalidArgument("h_k needs k >= 1".into()));
    }
    let mut out = h_operator(v, backend)?;
    for _ in 1..k {
        out = h_operator(&out, backend)?;
    }
    Ok(out)
}

/// Vector potential of `v` without an outer curl. For solenoidal mean-zero
/// `u` and `v = curl u` this recovers `u` (Biot–Savart).
pub fn biot_savart(v: &VectorField, backend: HelmholtzBackend) -> Result<VectorField> {
    Ok(decompose(v, backend)?.psi)
}

/// Points within the central half of the window along every axis.
fn interior_mask(g: &Grid3) -> Vec<bool> {
    let c = g.center();
    let l = g.length();
    (0..g.len())
        .map(|idx| {
            let p = g.point_at(idx);
            (0..3).all(|a| (p[a] - c[a]).abs() <= l[a] / 4.0 + 1e-12 * l[a])
        })
        .collect()
}

fn masked_sup(f: &VectorField, mask: &[bool]) -> f64 {
    let g = f.grid();
    (0..g.len())
        .filter(|&i| mask[i])
        .map(|idx| {
            let (i, j, k) = g.unravel(idx);
            let p = f.at(i, j, k);
            (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Maps every window cell to a periodic-grid node. The periodic spacing must
/// divide the window spacing, and the periodic box must contain the window.
fn node_map(window: &Grid3, periodic: &Grid3) -> Result<([usize; 3], [usize; 3])> {
    let (nw, np) = (window.n(), periodic.n());
    let (hw, hp) = (window.spacing(), periodic.spacing());
    let mut ratio = [0; 3];
    let mut offset = [0; 3];
    for a in 0..3 {
        let r = hw[a] / hp[a];
        let ri = r.round();
        if ri < 1.0 || (r - ri).abs() > 1e-9 * r {
            return Err(Error::InvalidArgument(format!(
                "window spacing {} is not an integer multiple of periodic spacing {} on axis {a}",
                hw[a], hp[a]
            )));
        }
        ratio[a] = ri as usize;
        let span = (nw[a] - 1) * ratio[a] + 1;
        if span > np[a] {
            return Err(Error::InvalidArgument(format!(
                "periodic grid has {} points on axis {a}, window needs {span}",
                np[a]
            )));
        }
        offset[a] = (np[a] - span) / 2;
    }
    Ok((ratio, offset))
}

/// Runs both backends on a decaying field and reports their discrepancy on
/// the central half of the window.
///
/// The periodic grid is sampled so that its nodes pass through the window's
/// cell centres. Residual `sup` is the relative sup discrepancy of the
/// solenoidal parts, `l2` that of the gradient parts (relative to `sup f`).
pub fn quadrature_vs_spectral_report<F>(f: F, window: &Grid3, periodic: &Grid3) -> Result<CheckReport>
where
    F: Fn([f64; 3]) -> [f64; 3] + Sync,
{
    HelmholtzBackend::DirectQuadrature.validate(window)?;
    HelmholtzBackend::SpectralPoisson.validate(periodic)?;
    let (ratio, offset) = node_map(window, periodic)?;
    let origin = window.point(0, 0, 0);
    let hp = periodic.spacing();
    let fp = VectorField::sample(*periodic, |p| {
        // p is i·h on the periodic grid; shift so node `offset` hits the
        // first window centre
        let x = [
            origin[0] + p[0] - offset[0] as f64 * hp[0],
            origin[1] + p[1] - offset[1] as f64 * hp[1],
            origin[2] + p[2] - offset[2] as f64 * hp[2],
        ];
        f(x)
    })?;
    let fw = VectorField::sample(*window, &f)?;

    let t0 = Instant::now();
    let quad = decompose(&fw, HelmholtzBackend::DirectQuadrature)?;
    let quad_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let spec = decompose(&fp, HelmholtzBackend::SpectralPoisson)?;
    let spec_secs = t1.elapsed().as_secs_f64();

    // restrict the spectral parts to the window nodes
    let restrict = |v: &VectorField| {
        VectorField::sample(*window, |_| [0.0; 3]).map(|mut out| {
            for idx in 0..window.len() {
                let (i, j, k) = window.unravel(idx);
                let q = v.at(
                    offset[0] + i * ratio[0],
                    offset[1] + j * ratio[1],
                    offset[2] + k * ratio[2],
                );
                for (c, value) in q.into_iter().enumerate() {
                    out.component_mut(c).data_mut()[idx] = value;
                }
            }
            out
        })
    };
    let spec_curl = restrict(&spec.curl_part)?;
    let spec_grad = restrict(&spec.grad_part)?;

    let mask = interior_mask(window);
    let scale = masked_sup(&fw, &mask);
    let rel = |d: f64| if scale == 0.0 { d } else { d / scale };
    let curl_gap = rel(masked_sup(&(&quad.curl_part - &spec_curl), &mask));
    let grad_gap = rel(masked_sup(&(&quad.grad_part - &spec_grad), &mask));

    let mut report = CheckReport::informational(
        "quadrature_vs_spectral",
        0.0,
        vec![ResidualSample {
            t: 0.0,
            sup: curl_gap,
            l2: grad_gap,
            masked: mask.iter().filter(|m| !**m).count(),
        }],
    )
    .with_series("quadrature_seconds", vec![quad_secs])
    .with_series("spectral_seconds", vec![spec_secs])
    .with_note(format!(
        "window n={:?} L={:?}; periodic n={:?} L={:?}",
        window.n(),
        window.length(),
        periodic.n(),
        periodic.length()
    ));
    if let Some(w) = quad.decay_warning {
        report = report.with_note(format!("decay warning: {w}"));
    }
    Ok(report)
}

/// Relative discrepancy helper for callers that only need the number.
pub fn interior_discrepancy(report: &CheckReport) -> f64 {
    report.residuals.first().map(|r| r.sup.max(r.l2)).unwrap_or(0.0)
}

/// True when the report carries a decay warning.
pub fn has_decay_warning(report: &CheckReport) -> bool {
    report.notes.iter().any(|n| n.starts_with("decay warning"))
}
