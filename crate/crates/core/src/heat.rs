//! Heat kernel, heat-equation propagation `∂_t w = ν△w`, and the Γ and ξ
//! constructions built on it.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{self, DiffBackend};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Boundary, Grid3};
use crate::spectral::SpectralGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatParams {
    pub nu: f64,
    pub t: f64,
}

impl HeatParams {
    pub fn new(nu: f64, t: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be non-negative, got {t}")));
        }
        Ok(Self { nu, t })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatBackend {
    /// Modewise `exp(−ν|k|²t)`; periodic grids.
    Spectral,
    /// Midpoint-rule convolution with `α(·, νt)`; truncated windows.
    Direct,
}

impl HeatBackend {
    pub fn natural_for(grid: &Grid3) -> Self {
        if grid.is_periodic() {
            HeatBackend::Spectral
        } else {
            HeatBackend::Direct
        }
    }

    fn validate(&self, grid: &Grid3) -> Result<()> {
        match (self, grid.boundary()) {
            (HeatBackend::Spectral, Boundary::Periodic) | (HeatBackend::Direct, Boundary::TruncatedWindow) => Ok(()),
            (HeatBackend::Spectral, _) => Err(Error::Config("spectral heat propagation requires a periodic grid".into())),
            (HeatBackend::Direct, _) => Err(Error::Config("direct heat propagation requires a truncated-window grid".into())),
        }
    }
}

/// `α(x, t) = (4πt)^(−3/2) exp(−|x|²/(4t))`.
pub fn kernel_alpha(x: [f64; 3], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("heat kernel needs t > 0, got {t}")));
    }
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    Ok((4.0 * PI * t).powf(-1.5) * (-r2 / (4.0 * t)).exp())
}

/// One-dimensional factor of `α`; `α(x,t) = Π_a g(x_a, t)`.
fn kernel_1d(d: f64, t: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-d * d / (4.0 * t)).exp()
}

/// Convolves along one axis with `g(·, s)·h`. Since `α` factorizes, three
/// passes equal the full three-dimensional midpoint sum.
fn convolve_axis(data: &[f64], g: &Grid3, axis: usize, s: f64) -> Vec<f64> {
    let n = g.n();
    let h = g.spacing()[axis];
    let m = n[axis];
    let weights: Vec<f64> = (0..2 * m - 1)
        .map(|o| kernel_1d((o as f64 - (m - 1) as f64) * h, s) * h)
        .collect();
    let stride = match axis {
        0 => 1,
        1 => n[0],
        _ => n[0] * n[1],
    };
    (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = g.unravel(idx);
            let pos = [i, j, k][axis];
            let base = idx - pos * stride;
            let mut acc = 0.0;
            for q in 0..m {
                acc += weights[q + m - 1 - pos] * data[base + q * stride];
            }
            acc
        })
        .collect()
}

/// Fields the heat semigroup acts on (componentwise for vectors).
pub trait HeatPropagate: Sized {
    fn heat_propagate_with(&self, params: HeatParams, backend: HeatBackend) -> Result<Self>;
}

impl HeatPropagate for ScalarField {
    fn heat_propagate_with(&self, params: HeatParams, backend: HeatBackend) -> Result<Self> {
        let params = HeatParams::new(params.nu, params.t)?;
        let g = *self.grid();
        backend.validate(&g)?;
        if params.t == 0.0 {
            return Ok(self.clone());
        }
        match backend {
            HeatBackend::Spectral => {
                let sg = SpectralGrid::new(&g)?;
                let mut h = sg.forward(self);
                sg.apply_heat(&mut h, params.nu * params.t);
                Ok(sg.inverse(h))
            }
            HeatBackend::Direct => {
                let s = params.nu * params.t;
                let mut data = self.data().to_vec();
                for axis in 0..3 {
                    data = convolve_axis(&data, &g, axis, s);
                }
                Ok(ScalarField::from_vec_unchecked(g, data))
            }
        }
    }
}

impl HeatPropagate for VectorField {
    fn heat_propagate_with(&self, params: HeatParams, backend: HeatBackend) -> Result<Self> {
        let [x, y, z] = self.components();
        Ok(VectorField::from_array([
            x.heat_propagate_with(params, backend)?,
            y.heat_propagate_with(params, backend)?,
            z.heat_propagate_with(params, backend)?,
        ]))
    }
}

/// Solution at time `params.t` of `∂_t w = ν△w` with `w(·,0) = f0`.
pub fn heat_propagate<F: HeatPropagate>(f0: &F, params: HeatParams, backend: HeatBackend) -> Result<F> {
    f0.heat_propagate_with(params, backend)
}

/// `Γ(·,t) = heat_propagate(p0 − ρ·φ0)`.
///
/// `phi0` is the scalar potential in the Newtonian sign convention, i.e. the
/// negative of `HelmholtzParts::phi`.
pub fn gamma(
    pressure0: &ScalarField,
    phi0: &ScalarField,
    rho: f64,
    params: HeatParams,
    backend: HeatBackend,
) -> Result<ScalarField> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    pressure0.grid().ensure_same(phi0.grid(), "gamma")?;
    let mut source = pressure0.clone();
    source.axpy(-rho, phi0);
    heat_propagate(&source, params, backend)
}

/// `ξ` with `ξ_i = heat_propagate((curl^k u0)_i)`.
pub fn xi(u0: &VectorField, k: usize, params: HeatParams, backend: HeatBackend) -> Result<VectorField> {
    let v = calculus::curl_k(u0, k, DiffBackend::natural_for(u0.grid()))?;
    heat_propagate(&v, params, backend)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Norms;
    use crate::grid::make_grid;

    #[test]
    fn kernel_values() {
        assert!((kernel_alpha([0.0; 3], 1.0 / (4.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
        assert!(kernel_alpha([0.0; 3], 0.0).is_err());
        assert!(kernel_alpha([0.0; 3], -1.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let a = kernel_alpha([0.1 * i as f64, 0.0, 0.0], 0.3).unwrap();
            assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn kernel_normalization() {
        // midpoint quadrature over [−10√t, 10√t]³
        let t: f64 = 0.7;
        let half = 10.0 * t.sqrt();
        let n = 60;
        let h = 2.0 * half / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = [-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h, -half + (k as f64 + 0.5) * h];
                    sum += kernel_alpha(x, t).unwrap();
                }
            }
        }
        assert!((sum * h * h * h - 1.0).abs() < 1e-8);
    }

    #[test]
    fn params_validation() {
        assert!(HeatParams::new(0.0, 1.0).is_err());
        assert!(HeatParams::new(0.1, -1.0).is_err());
        assert!(HeatParams::new(0.1, 0.0).is_ok());
    }

    #[test]
    fn zero_time_is_identity() {
        let g = Grid3::periodic_cube(8).unwrap();
        let f = ScalarField::sample(g, |p| p[0].sin() + p[2]).unwrap();
        let p = HeatParams::new(0.1, 0.0).unwrap();
        assert_eq!(heat_propagate(&f, p, HeatBackend::Spectral).unwrap(), f);
    }

    #[test]
    fn single_mode_decay() {
        let g = Grid3::periodic_cube(16).unwrap();
        let f = ScalarField::sample(g, |p| p[0].sin()).unwrap();
        let w = heat_propagate(&f, HeatParams::new(0.1, 1.0).unwrap(), HeatBackend::Spectral).unwrap();
        let want = f.scale((-0.1f64).exp());
        assert!((&w - &want).sup_norm() <= 1e-12 * want.sup_norm());
    }

    #[test]
    fn direct_matches_full_kernel_sum() {
        let g = make_grid([5, 4, 6], [2.0, 1.5, 2.5], Boundary::TruncatedWindow).unwrap();
        let f = ScalarField::sample(g, |p| (p[0] * 1.3).sin() + p[1] * p[2]).unwrap();
        let params = HeatParams::new(0.2, 0.5).unwrap();
        let w = heat_propagate(&f, params, HeatBackend::Direct).unwrap();
        let dv = g.cell_volume();
        for x in 0..g.len() {
            let px = g.point_at(x);
            let naive: f64 = (0..g.len())
                .map(|y| {
                    let py = g.point_at(y);
                    let d = [px[0] - py[0], px[1] - py[1], px[2] - py[2]];
                    kernel_alpha(d, 0.1).unwrap() * f.data()[y] * dv
                })
                .sum();
            assert!((w.data()[x] - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_cases() {
        let g = Grid3::periodic_cube(8).unwrap();
        let p = HeatParams::new(0.1, 1.0).unwrap();
        let phi = ScalarField::sample(g, |x| x[1].cos()).unwrap();
        let z = gamma(&phi.scale(2.0), &phi, 2.0, p, HeatBackend::Spectral).unwrap();
        assert!(z.sup_norm() < 1e-15);
        let c = gamma(&(&phi.scale(2.0) + &ScalarField::constant(g, 3.0)), &phi, 2.0, p, HeatBackend::Spectral).unwrap();
        assert!((&c - &ScalarField::constant(g, 3.0)).sup_norm() < 1e-13);
        assert!(gamma(&phi, &phi, 0.0, p, HeatBackend::Spectral).is_err());
    }

    #[test]
    fn xi_of_taylor_green() {
        let g = Grid3::periodic_cube(16).unwrap();
        let u = VectorField::sample(g, |p| [p[0].cos() * p[1].sin(), -p[0].sin() * p[1].cos(), 0.0]).unwrap();
        let x = xi(&u, 1, HeatParams::new(0.1, 1.0).unwrap(), HeatBackend::Spectral).unwrap();
        let want = VectorField::sample(g, |p| [0.0, 0.0, -2.0 * (-0.2f64).exp() * p[0].cos() * p[1].cos()]).unwrap();
        assert!((&x - &want).sup_norm() < 1e-12);
        let z = xi(&VectorField::zeros(g), 2, HeatParams::new(0.1, 1.0).unwrap(), HeatBackend::Spectral).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn backend_grid_mismatch() {
        let w = make_grid([8; 3], [1.0; 3], Boundary::TruncatedWindow).unwrap();
        let p = HeatParams::new(0.1, 1.0).unwrap();
        assert!(heat_propagate(&ScalarField::zeros(w), p, HeatBackend::Spectral).is_err());
        let g = Grid3::periodic_cube(8).unwrap();
        assert!(heat_propagate(&ScalarField::zeros(g), p, HeatBackend::Direct).is_err());
    }
}
