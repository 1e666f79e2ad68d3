//! Truncated uniform grids over log-price `x` and log-variance `y`,
//! sampled scalar fields, and trapezoid quadrature.
//!
//! Every integral over the real line is replaced by a trapezoid sum over
//! the truncated domain, so any reported expectation is relative to the
//! grid it was computed on.
//!
//! Two-dimensional fields are stored row-major with `x` as the slow index:
//! `row = ix * ny + iy`.

use crate::error::{Error, Result};

/// Uniform grid `x_min = x_0 < x_1 < ... < x_{n-1} = x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 5;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::InvalidBounds {
                min: x_min,
                max: x_max,
            });
        }
        if n < Self::MIN_POINTS {
            return Err(Error::TooFewPoints(n));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Ok(Self {
            x_min,
            x_max,
            n,
            dx,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of node `i`. Endpoints are reproduced exactly.
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i + 1 == self.n {
            return self.x_max;
        }
        let t = i as f64 / (self.n - 1) as f64;
        self.x_min + (self.x_max - self.x_min) * t
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.x_min) / self.dx).round();
        t.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Tensor-product grid: `gx` over log-price, `gy` over log-variance (`sigma^2 = e^y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub gx: Grid1D,
    pub gy: Grid1D,
}

impl Grid2D {
    pub fn new(gx: Grid1D, gy: Grid1D) -> Self {
        Self { gx, gy }
    }

    pub fn len(&self) -> usize {
        self.gx.len() * self.gy.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, ix: usize, iy: usize) -> usize {
        ix * self.gy.len() + iy
    }
}

/// Either grid shape. One-dimensional grids behave as `nx x 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::One(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::Two(g)
    }
}

impl Grid {
    pub fn x_axis(&self) -> &Grid1D {
        match self {
            Grid::One(g) => g,
            Grid::Two(g) => &g.gx,
        }
    }

    pub fn y_axis(&self) -> Option<&Grid1D> {
        match self {
            Grid::One(_) => None,
            Grid::Two(g) => Some(&g.gy),
        }
    }

    /// `(nx, ny)`, with `ny = 1` for one-dimensional grids.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Grid::One(g) => (g.len(), 1),
            Grid::Two(g) => (g.gx.len(), g.gy.len()),
        }
    }

    pub fn len(&self) -> usize {
        let (nx, ny) = self.shape();
        nx * ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_2d(&self) -> bool {
        matches!(self, Grid::Two(_))
    }

    pub fn split(&self, row: usize) -> (usize, usize) {
        let (_, ny) = self.shape();
        (row / ny, row % ny)
    }

    /// Coordinates `(x, y)` of a row; `y` is zero on 1D grids.
    pub fn coords(&self, row: usize) -> (f64, f64) {
        let (ix, iy) = self.split(row);
        match self {
            Grid::One(g) => (g.point(ix), 0.0),
            Grid::Two(g) => (g.gx.point(ix), g.gy.point(iy)),
        }
    }

    /// Row reached from `row` by moving `(ox, oy)` nodes, if it stays on the grid.
    pub fn neighbor(&self, row: usize, ox: i32, oy: i32) -> Option<usize> {
        let (nx, ny) = self.shape();
        let (ix, iy) = self.split(row);
        let jx = ix as i64 + ox as i64;
        let jy = iy as i64 + oy as i64;
        if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
            return None;
        }
        Some(jx as usize * ny + jy as usize)
    }

    /// True on the outermost nodes, where one-sided stencils apply.
    pub fn is_boundary(&self, row: usize) -> bool {
        !self.is_interior(row, 1)
    }

    /// True when `row` is at least `margin` nodes away from every boundary.
    /// The degenerate `y` axis of a 1D grid has no boundary.
    pub fn is_interior(&self, row: usize, margin: usize) -> bool {
        let (nx, ny) = self.shape();
        let (ix, iy) = self.split(row);
        let inside = |i: usize, n: usize| i >= margin && i + margin < n;
        inside(ix, nx) && (!self.is_2d() || inside(iy, ny))
    }

    /// Fails when `margin` leaves no interior rows on some axis.
    pub fn check_margin(&self, margin: usize) -> Result<()> {
        let (nx, ny) = self.shape();
        let mut axes = vec![nx];
        if self.is_2d() {
            axes.push(ny);
        }
        for points in axes {
            if 2 * margin >= points {
                return Err(Error::MarginExceedsGrid { margin, points });
            }
        }
        Ok(())
    }

    pub fn interior_rows(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&r| self.is_interior(r, margin))
    }

    pub fn weight(&self, row: usize) -> f64 {
        let (ix, iy) = self.split(row);
        match self {
            Grid::One(g) => g.weight(ix),
            Grid::Two(g) => g.gx.weight(ix) * g.gy.weight(iy),
        }
    }
}

/// Scalar field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps precomputed values; fails on length mismatch or non-finite entries.
    pub fn from_values(grid: impl Into<Grid>, values: Vec<f64>) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { row });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: impl Into<Grid>, c: f64) -> Result<Self> {
        let grid = grid.into();
        Self::from_values(grid, vec![c; grid.len()])
    }

    pub fn sample_1d(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.points().map(f).collect())
    }

    pub fn sample_2d(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for x in grid.gx.points() {
            for y in grid.gy.points() {
                values.push(f(x, y));
            }
        }
        Self::from_values(grid, values)
    }

    /// Samples `f(x, y)` on either grid shape (`y = 0` on 1D grids).
    pub fn sample(grid: impl Into<Grid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        match grid.into() {
            Grid::One(g) => Self::sample_1d(g, |x| f(x, 0.0)),
            Grid::Two(g) => Self::sample_2d(g, f),
        }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Field::from_values(self.grid, values)
    }

    /// Max-abs over rows at distance at least `margin` from every boundary.
    pub fn interior_norm(&self, margin: usize) -> Result<f64> {
        self.grid.check_margin(margin)?;
        Ok(self
            .grid
            .interior_rows(margin)
            .map(|r| self.values[r].abs())
            .fold(0.0, f64::max))
    }
}

/// Trapezoid quadrature of `a * b` over the truncated domain.
pub fn inner_product(a: &Field, b: &Field) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let grid = a.grid;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .map(|(row, (u, v))| grid.weight(row) * u * v)
        .sum())
}
