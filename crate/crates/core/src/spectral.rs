//! Fourier machinery for periodic grids.
//!
//! Wavenumbers follow the usual FFT ordering: index `i` carries integer mode
//! `m = i` for `i <= n/2` and `m = i - n` above, so the represented set is
//! `{-n/2+1, …, n/2}`. First derivatives use `k_odd`, which is `k` with the
//! Nyquist mode zeroed so the discrete derivative stays antisymmetric.
//! Second-order multipliers (Laplacian, heat) use the full `k`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid3;

pub type Spectrum = Vec<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

struct Fft3 {
    n: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

fn plans(n: [usize; 3]) -> Arc<Fft3> {
    static CACHE: OnceLock<Mutex<HashMap<[usize; 3], Arc<Fft3>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let fwd = |p: &mut FftPlanner<f64>, len| p.plan_fft(len, FftDirection::Forward);
            let inv = |p: &mut FftPlanner<f64>, len| p.plan_fft(len, FftDirection::Inverse);
            Arc::new(Fft3 {
                n,
                forward: [
                    fwd(&mut planner, n[0]),
                    fwd(&mut planner, n[1]),
                    fwd(&mut planner, n[2]),
                ],
                inverse: [
                    inv(&mut planner, n[0]),
                    inv(&mut planner, n[1]),
                    inv(&mut planner, n[2]),
                ],
            })
        })
        .clone()
}

fn run_lines(fft: &Arc<dyn Fft<f64>>, lines: &mut [Complex64]) {
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    fft.process_with_scratch(lines, &mut scratch);
}

impl Fft3 {
    /// Unnormalized in-place transform along all three axes.
    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let [nx, ny, nz] = self.n;
        let plans = if inverse { &self.inverse } else { &self.forward };

        // x lines are contiguous
        data.par_chunks_mut(nx * ny)
            .for_each(|slab| run_lines(&plans[0], slab));

        // y lines: transpose each z-slab so y runs fastest
        data.par_chunks_mut(nx * ny).for_each(|slab| {
            let mut buf = vec![ZERO; nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    buf[i * ny + j] = slab[i + nx * j];
                }
            }
            run_lines(&plans[1], &mut buf);
            for j in 0..ny {
                for i in 0..nx {
                    slab[i + nx * j] = buf[i * ny + j];
                }
            }
        });

        // z lines: gather per y-plane, transform, scatter
        let planes: Vec<Vec<Complex64>> = (0..ny)
            .into_par_iter()
            .map(|j| {
                let mut buf = vec![ZERO; nx * nz];
                for k in 0..nz {
                    let row = nx * (j + ny * k);
                    for i in 0..nx {
                        buf[i * nz + k] = data[row + i];
                    }
                }
                run_lines(&plans[2], &mut buf);
                buf
            })
            .collect();
        for (j, buf) in planes.iter().enumerate() {
            for k in 0..nz {
                let row = nx * (j + ny * k);
                for i in 0..nx {
                    data[row + i] = buf[i * nz + k];
                }
            }
        }
    }
}

/// Wavenumbers, dealiasing mask and cached FFT plans for one periodic grid.
pub struct SpectralGrid {
    grid: Grid3,
    fft: Arc<Fft3>,
    k: [Vec<f64>; 3],
    k_odd: [Vec<f64>; 3],
    keep: [Vec<bool>; 3],
}

/// Signed integer mode carried by FFT index `i` on an `n`-point axis.
pub fn mode_number(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralGrid {
    pub fn new(grid: &Grid3) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::Config(
                "spectral operators require a periodic grid".into(),
            ));
        }
        let n = grid.n();
        let length = grid.length();
        let mut k: [Vec<f64>; 3] = Default::default();
        let mut k_odd: [Vec<f64>; 3] = Default::default();
        let mut keep: [Vec<bool>; 3] = Default::default();
        for axis in 0..3 {
            let scale = 2.0 * PI / length[axis];
            for i in 0..n[axis] {
                let m = mode_number(i, n[axis]);
                let kk = scale * m as f64;
                k[axis].push(kk);
                let nyquist = n[axis] % 2 == 0 && i == n[axis] / 2;
                k_odd[axis].push(if nyquist { 0.0 } else { kk });
                // 2/3 rule: keep |m| < n/3
                keep[axis].push(3 * m.unsigned_abs() < n[axis] as u64);
            }
        }
        Ok(Self {
            grid: *grid,
            fft: plans(n),
            k,
            k_odd,
            keep,
        })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        debug_assert_eq!(f.grid(), &self.grid);
        let mut data: Spectrum = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.transform(&mut data, false);
        data
    }

    pub fn forward_vector(&self, f: &VectorField) -> [Spectrum; 3] {
        [
            self.forward(f.component(0)),
            self.forward(f.component(1)),
            self.forward(f.component(2)),
        ]
    }

    /// Inverse transform keeping the real part.
    pub fn inverse(&self, mut spec: Spectrum) -> ScalarField {
        self.fft.transform(&mut spec, true);
        let norm = 1.0 / self.len() as f64;
        let data = spec.iter().map(|c| c.re * norm).collect();
        ScalarField::from_vec_unchecked(self.grid, data)
    }

    pub fn inverse_vector(&self, spec: [Spectrum; 3]) -> VectorField {
        let [x, y, z] = spec;
        VectorField::from_array([self.inverse(x), self.inverse(y), self.inverse(z)])
    }

    /// Calls `f(idx, k, k_odd)` for every mode.
    #[inline]
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3], [f64; 3])) {
        let [nx, ny, nz] = self.grid.n();
        let mut idx = 0;
        for c in 0..nz {
            for b in 0..ny {
                for a in 0..nx {
                    f(
                        idx,
                        [self.k[0][a], self.k[1][b], self.k[2][c]],
                        [self.k_odd[0][a], self.k_odd[1][b], self.k_odd[2][c]],
                    );
                    idx += 1;
                }
            }
        }
    }

    /// `|k|²` for every mode (full wavenumbers).
    pub fn k_squared(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.for_each_mode(|idx, k, _| out[idx] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        out
    }

    pub fn is_kept(&self, idx: usize) -> bool {
        let (a, b, c) = self.grid.unravel(idx);
        self.keep[0][a] && self.keep[1][b] && self.keep[2][c]
    }

    /// Zeroes every mode outside the 2/3-rule band.
    pub fn dealias(&self, spec: &mut [Complex64]) {
        let [nx, ny, nz] = self.grid.n();
        let mut idx = 0;
        for c in 0..nz {
            for b in 0..ny {
                let row = self.keep[2][c] && self.keep[1][b];
                for a in 0..nx {
                    if !(row && self.keep[0][a]) {
                        spec[idx] = ZERO;
                    }
                    idx += 1;
                }
            }
        }
    }

    /// Spectral partial derivative along `axis` of a transformed field.
    pub fn derivative(&self, spec: &[Complex64], axis: usize) -> Spectrum {
        let mut out = vec![ZERO; spec.len()];
        self.for_each_mode(|idx, _, ko| out[idx] = I * ko[axis] * spec[idx]);
        out
    }

    /// `exp(-c |k|²)` applied in place.
    pub fn apply_heat(&self, spec: &mut [Complex64], c: f64) {
        self.for_each_mode(|idx, k, _| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            spec[idx] *= (-c * k2).exp();
        });
    }

    /// Removes the gradient part of a transformed vector field in place.
    /// Modes with no resolvable first derivative are left untouched.
    pub fn leray_project(&self, spec: &mut [Spectrum; 3]) {
        self.for_each_mode(|idx, _, ko| {
            let k2 = ko[0] * ko[0] + ko[1] * ko[1] + ko[2] * ko[2];
            if k2 == 0.0 {
                return;
            }
            let kdot = ko[0] * spec[0][idx] + ko[1] * spec[1][idx] + ko[2] * spec[2][idx];
            for c in 0..3 {
                spec[c][idx] -= kdot * (ko[c] / k2);
            }
        });
    }
}
