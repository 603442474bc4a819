//! Rectangular sampling lattices.
//!
//! Samples are stored x-fastest: the flat index of `(i, j, k)` is
//! `i + nx * (j + ny * k)`. Every operator in the crate assumes this layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest number of samples allowed along any axis.
pub const MIN_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Samples at `i * h`; index `n` wraps to `0`.
    Periodic,
    /// Cell-centered samples at `(i + 1/2) * h` over `[0, L]`, nothing outside.
    TruncatedWindow,
}

impl Boundary {
    pub(crate) fn code(self) -> u8 {
        match self {
            Boundary::Periodic => 0,
            Boundary::TruncatedWindow => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Boundary::Periodic),
            1 => Some(Boundary::TruncatedWindow),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: [usize; 3],
    length: [f64; 3],
    boundary: Boundary,
}

/// Builds a grid, rejecting fewer than [`MIN_POINTS`] samples per axis or
/// non-positive edge lengths.
pub fn make_grid(n: [usize; 3], length: [f64; 3], boundary: Boundary) -> Result<Grid3> {
    Grid3::new(n, length, boundary)
}

impl Grid3 {
    pub fn new(n: [usize; 3], length: [f64; 3], boundary: Boundary) -> Result<Self> {
        for axis in 0..3 {
            if n[axis] < MIN_POINTS {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis} has {} samples, need at least {MIN_POINTS}",
                    n[axis]
                )));
            }
            if !(length[axis].is_finite() && length[axis] > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis} length must be positive and finite, got {}",
                    length[axis]
                )));
            }
        }
        Ok(Self { n, length, boundary })
    }

    /// Cubic periodic box with `n` points per axis and edge `2π`.
    pub fn periodic_cube(n: usize) -> Result<Self> {
        let l = 2.0 * std::f64::consts::PI;
        Self::new([n; 3], [l; 3], Boundary::Periodic)
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn length(&self) -> [f64; 3] {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.length[0] / self.n[0] as f64,
            self.length[1] / self.n[1] as f64,
            self.length[2] / self.n[2] as f64,
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].min(h[1]).min(h[2])
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    pub fn volume(&self) -> f64 {
        self.length[0] * self.length[1] * self.length[2]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.n[0];
        let j = (idx / self.n[0]) % self.n[1];
        let k = idx / (self.n[0] * self.n[1]);
        (i, j, k)
    }

    /// Coordinate of sample `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = self.length[axis] / self.n[axis] as f64;
        match self.boundary {
            Boundary::Periodic => i as f64 * h,
            Boundary::TruncatedWindow => (i as f64 + 0.5) * h,
        }
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    pub fn point_at(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        self.point(i, j, k)
    }

    /// Geometric center of the box.
    pub fn center(&self) -> [f64; 3] {
        [self.length[0] / 2.0, self.length[1] / 2.0, self.length[2] / 2.0]
    }

    /// Same lattice with a different boundary mode.
    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self { boundary, ..*self }
    }

    /// Smallest nonzero angular wavenumber `2π / L_max`.
    pub fn min_wavenumber(&self) -> f64 {
        let lmax = self.length[0].max(self.length[1]).max(self.length[2]);
        2.0 * std::f64::consts::PI / lmax
    }

    pub(crate) fn ensure_same(&self, other: &Grid3, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{what}: {self:?} vs {other:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_spacing() {
        let g = make_grid([32, 32, 32], [2.0 * PI; 3], Boundary::Periodic).unwrap();
        for h in g.spacing() {
            assert_eq!(h, 2.0 * PI / 32.0);
        }
        assert_eq!(g.coord(0, 0), 0.0);
        assert_eq!(g.coord(1, 3), 3.0 * 2.0 * PI / 32.0);
    }

    #[test]
    fn window_is_cell_centered() {
        let g = make_grid([4, 4, 4], [1.0; 3], Boundary::TruncatedWindow).unwrap();
        assert_eq!(g.spacing(), [0.25; 3]);
        assert_eq!(g.coord(0, 0), 0.125);
        assert_eq!(g.coord(2, 3), 0.875);
    }

    #[test]
    fn rejects_small_or_degenerate() {
        assert!(matches!(
            make_grid([2, 4, 4], [1.0; 3], Boundary::Periodic),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_grid([4, 4, 4], [1.0, 0.0, 1.0], Boundary::Periodic).is_err());
        assert!(make_grid([4, 4, 4], [1.0, -2.0, 1.0], Boundary::TruncatedWindow).is_err());
        assert!(make_grid([4, 4, 4], [f64::NAN, 1.0, 1.0], Boundary::Periodic).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = make_grid([5, 6, 7], [1.0; 3], Boundary::Periodic).unwrap();
        for idx in 0..g.len() {
            let (i, j, k) = g.unravel(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        // x fastest
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 5);
        assert_eq!(g.index(0, 0, 1), 30);
    }
}
