//! Scalar and vector fields sampled on a [`Grid3`].

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid3;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

/// Sup, grid-weighted L2 and energy (L2 squared) of a field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FieldNormSet {
    pub sup: f64,
    pub l2: f64,
    pub energy: f64,
}

pub trait Norms {
    fn norms(&self) -> FieldNormSet;

    fn sup_norm(&self) -> f64 {
        self.norms().sup
    }
}

fn first_non_finite(grid: &Grid3, data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(idx) => {
            let (i, j, k) = grid.unravel(idx);
            Err(Error::NonFinite {
                i,
                j,
                k,
                value: data[idx],
            })
        }
    }
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            data: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: Grid3, value: f64) -> Self {
        Self {
            data: vec![value; grid.len()],
            grid,
        }
    }

    /// Wraps raw samples; the length must match the grid and every sample
    /// must be finite.
    pub fn from_vec(grid: Grid3, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        first_non_finite(&grid, &data)?;
        Ok(Self { grid, data })
    }

    /// Used internally where finiteness is guaranteed by construction.
    pub(crate) fn from_vec_unchecked(grid: Grid3, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    /// Evaluates `f` at every grid point.
    pub fn sample<F>(grid: Grid3, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> f64,
    {
        let data: Vec<f64> = (0..grid.len()).map(|idx| f(grid.point_at(idx))).collect();
        first_non_finite(&grid, &data)?;
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.index(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "zip_map on different grids");
        Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &ScalarField) {
        assert_eq!(self.grid, other.grid, "axpy on different grids");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid inner product `Σ a b · dV`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product on different grids");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Norms for ScalarField {
    fn norms(&self) -> FieldNormSet {
        let mut sup = 0.0f64;
        let mut sq = 0.0;
        for &v in &self.data {
            sup = sup.max(v.abs());
            sq += v * v;
        }
        let energy = sq * self.grid.cell_volume();
        FieldNormSet {
            sup,
            l2: energy.sqrt(),
            energy,
        }
    }
}

impl VectorField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_components(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        x.grid.ensure_same(&y.grid, "vector components")?;
        x.grid.ensure_same(&z.grid, "vector components")?;
        Ok(Self {
            components: [x, y, z],
        })
    }

    pub(crate) fn from_array(components: [ScalarField; 3]) -> Self {
        debug_assert!(components[0].grid == components[1].grid);
        debug_assert!(components[0].grid == components[2].grid);
        Self { components }
    }

    pub fn sample<F>(grid: Grid3, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> [f64; 3],
    {
        let mut data = [
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
        ];
        for idx in 0..grid.len() {
            let v = f(grid.point_at(idx));
            for c in 0..3 {
                data[c].push(v[c]);
            }
        }
        let [x, y, z] = data;
        Ok(Self {
            components: [
                ScalarField::from_vec(grid, x)?,
                ScalarField::from_vec(grid, y)?,
                ScalarField::from_vec(grid, z)?,
            ],
        })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.components[0].grid
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut ScalarField {
        &mut self.components[c]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let idx = self.grid().index(i, j, k);
        [
            self.components[0].data[idx],
            self.components[1].data[idx],
            self.components[2].data[idx],
        ]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            components: [
                f(&self.components[0]),
                f(&self.components[1]),
                f(&self.components[2]),
            ],
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_components(|s| s.scale(c))
    }

    pub fn axpy(&mut self, c: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.axpy(c, b);
        }
    }

    /// Pointwise `|F|²`.
    pub fn magnitude_squared(&self) -> ScalarField {
        let [x, y, z] = &self.components;
        let data = x
            .data
            .iter()
            .zip(&y.data)
            .zip(&z.data)
            .map(|((a, b), c)| a * a + b * b + c * c)
            .collect();
        ScalarField::from_vec_unchecked(*self.grid(), data)
    }

    pub fn mean(&self) -> [f64; 3] {
        [
            self.components[0].mean(),
            self.components[1].mean(),
            self.components[2].mean(),
        ]
    }

    /// Grid inner product `Σ F·G dV`.
    pub fn inner(&self, other: &VectorField) -> f64 {
        (0..3)
            .map(|c| self.components[c].inner(&other.components[c]))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }
}

impl Norms for VectorField {
    fn norms(&self) -> FieldNormSet {
        let mag = self.magnitude_squared();
        let mut sup = 0.0f64;
        let mut sq = 0.0;
        for &m in &mag.data {
            sup = sup.max(m);
            sq += m;
        }
        let energy = sq * self.grid().cell_volume();
        FieldNormSet {
            sup: sup.sqrt(),
            l2: energy.sqrt(),
            energy,
        }
    }
}

macro_rules! impl_binary {
    ($ty:ty, $trait:ident, $method:ident, $assign_trait:ident, $assign:ident, $op:tt) => {
        impl $trait<&$ty> for &$ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }

        impl $trait<&$ty> for $ty {
            type Output = $ty;
            fn $method(mut self, rhs: &$ty) -> $ty {
                self.$assign(rhs);
                self
            }
        }

        impl $assign_trait<&$ty> for $ty {
            fn $assign(&mut self, rhs: &$ty) {
                self.zip_assign(rhs, |a, b| *a $op b);
            }
        }
    };
}

trait ZipAssign {
    fn zip_assign(&mut self, rhs: &Self, f: impl Fn(&mut f64, f64));
}

impl ZipAssign for ScalarField {
    fn zip_assign(&mut self, rhs: &Self, f: impl Fn(&mut f64, f64)) {
        assert_eq!(self.grid, rhs.grid, "field arithmetic on different grids");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            f(a, b);
        }
    }
}

impl ZipAssign for VectorField {
    fn zip_assign(&mut self, rhs: &Self, f: impl Fn(&mut f64, f64)) {
        for (a, b) in self.components.iter_mut().zip(&rhs.components) {
            a.zip_assign(b, &f);
        }
    }
}

impl_binary!(ScalarField, Add, add, AddAssign, add_assign, +=);
impl_binary!(ScalarField, Sub, sub, SubAssign, sub_assign, -=);
impl_binary!(VectorField, Add, add, AddAssign, add_assign, +=);
impl_binary!(VectorField, Sub, sub, SubAssign, sub_assign, -=);

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, c: f64) -> ScalarField {
        self.scale(c)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, c: f64) -> VectorField {
        self.scale(c)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.scale(-1.0)
    }
}
