//! Discrete vector calculus: Grad, Div, Curl, Laplacian, iterated curl and
//! the Navier–Stokes nonlinear term.
//!
//! Two backends share one interface. `Spectral` differentiates in Fourier
//! space (periodic grids only) and is exact for band-limited fields.
//! `FiniteDifference(order)` uses centered stencils of order 2 or 4, wrapping
//! on periodic grids and switching to one-sided stencils of the same order at
//! the faces of a truncated window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid3;
use crate::spectral::{SpectralGrid, Spectrum, ZERO};
use crate::stencil::{apply_axis, GridStencils};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffBackend {
    Spectral,
    FiniteDifference(usize),
}

impl DiffBackend {
    /// Spectral on periodic grids, fourth-order differences otherwise.
    pub fn natural_for(grid: &Grid3) -> Self {
        if grid.is_periodic() {
            DiffBackend::Spectral
        } else {
            DiffBackend::FiniteDifference(4)
        }
    }

    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        match *self {
            DiffBackend::Spectral if !grid.is_periodic() => Err(Error::Config(
                "spectral backend is only valid on periodic grids".into(),
            )),
            DiffBackend::FiniteDifference(order) if order != 2 && order != 4 => Err(
                Error::InvalidArgument(format!("finite-difference order must be 2 or 4, got {order}")),
            ),
            _ => Ok(()),
        }
    }
}

enum Engine {
    Spectral(SpectralGrid),
    Stencil(GridStencils),
}

impl Engine {
    fn new(grid: &Grid3, backend: DiffBackend) -> Result<Self> {
        backend.validate(grid)?;
        Ok(match backend {
            DiffBackend::Spectral => Engine::Spectral(SpectralGrid::new(grid)?),
            DiffBackend::FiniteDifference(order) => Engine::Stencil(GridStencils::new(grid, order)?),
        })
    }

    /// `∂_axis f`
    fn d1(&self, f: &ScalarField, axis: usize) -> ScalarField {
        match self {
            Engine::Spectral(sg) => sg.inverse(sg.derivative(&sg.forward(f), axis)),
            Engine::Stencil(st) => apply_axis(f, axis, &st.first[axis]),
        }
    }

    fn gradient(&self, f: &ScalarField) -> VectorField {
        match self {
            Engine::Spectral(sg) => {
                let fh = sg.forward(f);
                VectorField::from_array([
                    sg.inverse(sg.derivative(&fh, 0)),
                    sg.inverse(sg.derivative(&fh, 1)),
                    sg.inverse(sg.derivative(&fh, 2)),
                ])
            }
            Engine::Stencil(_) => VectorField::from_array([self.d1(f, 0), self.d1(f, 1), self.d1(f, 2)]),
        }
    }

    fn divergence(&self, v: &VectorField) -> ScalarField {
        match self {
            Engine::Spectral(sg) => {
                let mut acc = vec![ZERO; sg.len()];
                for axis in 0..3 {
                    let d = sg.derivative(&sg.forward(v.component(axis)), axis);
                    for (a, b) in acc.iter_mut().zip(d) {
                        *a += b;
                    }
                }
                sg.inverse(acc)
            }
            Engine::Stencil(_) => {
                let mut out = self.d1(v.component(0), 0);
                out += &self.d1(v.component(1), 1);
                out += &self.d1(v.component(2), 2);
                out
            }
        }
    }

    fn curl(&self, v: &VectorField) -> VectorField {
        match self {
            Engine::Spectral(sg) => {
                let h = sg.forward_vector(v);
                let mut out: [Spectrum; 3] = [vec![ZERO; sg.len()], vec![ZERO; sg.len()], vec![ZERO; sg.len()]];
                sg.for_each_mode(|idx, _, k| {
                    let i = crate::spectral::I;
                    out[0][idx] = i * (k[1] * h[2][idx] - k[2] * h[1][idx]);
                    out[1][idx] = i * (k[2] * h[0][idx] - k[0] * h[2][idx]);
                    out[2][idx] = i * (k[0] * h[1][idx] - k[1] * h[0][idx]);
                });
                sg.inverse_vector(out)
            }
            Engine::Stencil(_) => {
                let (x, y, z) = (v.component(0), v.component(1), v.component(2));
                VectorField::from_array([
                    &self.d1(z, 1) - &self.d1(y, 2),
                    &self.d1(x, 2) - &self.d1(z, 0),
                    &self.d1(y, 0) - &self.d1(x, 1),
                ])
            }
        }
    }

    fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        Ok(match self {
            Engine::Spectral(sg) => {
                let mut h = sg.forward(f);
                sg.for_each_mode(|idx, k, _| h[idx] *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
                sg.inverse(h)
            }
            Engine::Stencil(st) => {
                let second = st.second()?;
                let mut out = apply_axis(f, 0, &second[0]);
                out += &apply_axis(f, 1, &second[1]);
                out += &apply_axis(f, 2, &second[2]);
                out
            }
        })
    }

    fn advect(&self, u: &VectorField, f: &VectorField, dealias: bool) -> VectorField {
        match self {
            Engine::Spectral(sg) => {
                let truncate = |mut s: Spectrum| {
                    if dealias {
                        sg.dealias(&mut s);
                    }
                    s
                };
                let uu: Vec<ScalarField> = (0..3)
                    .map(|j| sg.inverse(truncate(sg.forward(u.component(j)))))
                    .collect();
                let comps = (0..3).map(|i| {
                    let fh = truncate(sg.forward(f.component(i)));
                    let mut acc = vec![0.0; sg.len()];
                    for (j, uj) in uu.iter().enumerate() {
                        let d = sg.inverse(sg.derivative(&fh, j));
                        for ((a, &x), &y) in acc.iter_mut().zip(uj.data()).zip(d.data()) {
                            *a += x * y;
                        }
                    }
                    let prod = ScalarField::from_vec_unchecked(*sg.grid(), acc);
                    if dealias {
                        sg.inverse(truncate(sg.forward(&prod)))
                    } else {
                        prod
                    }
                });
                let [a, b, c]: [ScalarField; 3] = comps.collect::<Vec<_>>().try_into().unwrap();
                VectorField::from_array([a, b, c])
            }
            Engine::Stencil(_) => {
                let comps = (0..3).map(|i| {
                    let mut acc = ScalarField::zeros(*u.grid());
                    for j in 0..3 {
                        let d = self.d1(f.component(i), j);
                        acc += &u.component(j).zip_map(&d, |a, b| a * b);
                    }
                    acc
                });
                let [a, b, c]: [ScalarField; 3] = comps.collect::<Vec<_>>().try_into().unwrap();
                VectorField::from_array([a, b, c])
            }
        }
    }
}

pub fn grad(f: &ScalarField, backend: DiffBackend) -> Result<VectorField> {
    Ok(Engine::new(f.grid(), backend)?.gradient(f))
}

/// Single partial derivative `∂f/∂x_axis`.
pub fn partial(f: &ScalarField, axis: usize, backend: DiffBackend) -> Result<ScalarField> {
    Ok(Engine::new(f.grid(), backend)?.d1(f, axis))
}

pub fn div(v: &VectorField, backend: DiffBackend) -> Result<ScalarField> {
    Ok(Engine::new(v.grid(), backend)?.divergence(v))
}

pub fn curl(v: &VectorField, backend: DiffBackend) -> Result<VectorField> {
    Ok(Engine::new(v.grid(), backend)?.curl(v))
}

/// Fields the Laplacian acts on (componentwise for vectors).
pub trait Laplacian: Sized {
    fn laplacian_with(&self, backend: DiffBackend) -> Result<Self>;
}

impl Laplacian for ScalarField {
    fn laplacian_with(&self, backend: DiffBackend) -> Result<Self> {
        Engine::new(self.grid(), backend)?.laplacian(self)
    }
}

impl Laplacian for VectorField {
    fn laplacian_with(&self, backend: DiffBackend) -> Result<Self> {
        let e = Engine::new(self.grid(), backend)?;
        let [x, y, z] = self.components();
        Ok(VectorField::from_array([e.laplacian(x)?, e.laplacian(y)?, e.laplacian(z)?]))
    }
}

pub fn laplacian<F: Laplacian>(f: &F, backend: DiffBackend) -> Result<F> {
    f.laplacian_with(backend)
}

/// `k`-fold literal composition of curl; `k = 0` is rejected.
pub fn curl_k(v: &VectorField, k: usize, backend: DiffBackend) -> Result<VectorField> {
    if k == 0 {
        return Err(Error::InvalidArgument("curl_k needs k >= 1".into()));
    }
    let e = Engine::new(v.grid(), backend)?;
    let mut out = e.curl(v);
    for _ in 1..k {
        out = e.curl(&out);
    }
    Ok(out)
}

/// `(u·∇)F`: component `i` is `Σ_j u_j ∂_j F_i`. The spectral backend applies
/// the 2/3 rule to both factors and to the product.
pub fn advect(u: &VectorField, f: &VectorField, backend: DiffBackend) -> Result<VectorField> {
    advect_with(u, f, backend, true)
}

/// As [`advect`], with dealiasing switchable (it only affects `Spectral`).
pub fn advect_with(u: &VectorField, f: &VectorField, backend: DiffBackend, dealias: bool) -> Result<VectorField> {
    u.grid().ensure_same(f.grid(), "advect")?;
    Ok(Engine::new(u.grid(), backend)?.advect(u, f, dealias))
}

/// `(u·∇)u − ν△u`.
pub fn nonlinear_term(u: &VectorField, nu: f64, backend: DiffBackend) -> Result<VectorField> {
    let e = Engine::new(u.grid(), backend)?;
    let mut out = e.advect(u, u, true);
    if nu != 0.0 {
        for c in 0..3 {
            out.component_mut(c).axpy(-nu, &e.laplacian(u.component(c))?);
        }
    }
    Ok(out)
}
