use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{invalid, Error, Result};

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Nodal values of a scalar quantity on a periodic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "scalar field needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite("scalar field", &values)?;
        Ok(Self { grid, values })
    }

    /// Construct without the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite("scalar field", &self.values)
    }

    pub fn integral(&self) -> f64 {
        sum(&self.values) * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Value at `(i, j)` with periodic wrap.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let n = self.grid.n() as isize;
        self.values[(j.rem_euclid(n) * n + i.rem_euclid(n)) as usize]
    }
}

/// Nodal values of a planar vector field on a periodic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.len() || y.len() != grid.len() {
            return Err(invalid("vector field component length does not match grid"));
        }
        check_finite("vector field x-component", &x)?;
        check_finite("vector field y-component", &y)?;
        Ok(Self { grid, x, y })
    }

    pub(crate) fn from_raw(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Self {
        debug_assert!(x.len() == grid.len() && y.len() == grid.len());
        Self { grid, x, y }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, [0.0, 0.0])
    }

    pub fn constant(grid: Grid, c: [f64; 2]) -> Self {
        Self {
            grid,
            x: vec![c[0]; grid.len()],
            y: vec![c[1]; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Self> {
        let (x, y): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .map(|k| {
                let [px, py] = grid.point(k);
                let v = f(px, py);
                (v[0], v[1])
            })
            .unzip();
        Self::new(grid, x, y)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    pub fn components(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn into_components(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }

    pub fn component(&self, axis: Axis) -> ScalarField {
        let v = match axis {
            Axis::X => self.x.clone(),
            Axis::Y => self.y.clone(),
        };
        ScalarField::from_raw(self.grid, v)
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite("vector field x-component", &self.x)?;
        check_finite("vector field y-component", &self.y)
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }

    pub fn integral(&self) -> [f64; 2] {
        let da = self.grid.cell_area();
        [sum(&self.x) * da, sum(&self.y) * da]
    }

    pub fn mean(&self) -> [f64; 2] {
        let m = self.x.len() as f64;
        [sum(&self.x) / m, sum(&self.y) / m]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(
            self.grid,
            self.x.iter().map(|v| v * s).collect(),
            self.y.iter().map(|v| v * s).collect(),
        )
    }

    pub fn shift(&self, c: [f64; 2]) -> Self {
        Self::from_raw(
            self.grid,
            self.x.iter().map(|v| v + c[0]).collect(),
            self.y.iter().map(|v| v + c[1]).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.x
                .iter()
                .zip(&other.x)
                .map(|(p, q)| p + a * q)
                .collect(),
            self.y
                .iter()
                .zip(&other.y)
                .map(|(p, q)| p + a * q)
                .collect(),
        ))
    }

    /// Pointwise product with a scalar weight.
    pub fn weighted(&self, w: &ScalarField) -> Result<Self> {
        if self.grid != *w.grid() {
            return Err(Error::GridMismatch);
        }
        let wv = w.values();
        Ok(Self::from_raw(
            self.grid,
            self.x.iter().zip(wv).map(|(p, q)| p * q).collect(),
            self.y.iter().zip(wv).map(|(p, q)| p * q).collect(),
        ))
    }

    pub fn magnitude(&self) -> ScalarField {
        ScalarField::from_raw(
            self.grid,
            self.x
                .iter()
                .zip(&self.y)
                .map(|(a, b)| (a * a + b * b).sqrt())
                .collect(),
        )
    }

    /// `Σ a·b` over nodes times the cell area (L² pairing).
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s = sum_products(&self.x, &other.x) + sum_products(&self.y, &other.y);
        Ok(s * self.grid.cell_area())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Per-cell boolean region on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    grid: Grid,
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(invalid("mask length does not match grid"));
        }
        Ok(Self { grid, cells })
    }

    pub fn full(grid: Grid) -> Self {
        Self {
            grid,
            cells: vec![true; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> bool) -> Self {
        let cells = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                f(x, y)
            })
            .collect();
        Self { grid, cells }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }
}

/// Order-fixed summation so results do not depend on thread scheduling.
pub(crate) fn sum(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for chunk in v.chunks(1024) {
        acc += chunk.iter().sum::<f64>();
    }
    acc
}

pub(crate) fn sum_products(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (ca, cb) in a.chunks(1024).zip(b.chunks(1024)) {
        acc += ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let g = Grid::new(16, 1.0).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        match ScalarField::new(g, v) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 5),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn constant_integral() {
        let g = Grid::new(32, 3.0).unwrap();
        let f = ScalarField::constant(g, 2.0);
        assert!((f.integral() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = VectorField::zeros(Grid::new(16, 1.0).unwrap());
        let b = VectorField::zeros(Grid::new(16, 2.0).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch)));
    }
}
