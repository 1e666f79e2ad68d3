//! Banded finite-difference operators on 1D and 2D grids.
//!
//! An operator is stored as a map from stencil offset `(ox, oy)` to one
//! coefficient per grid row, so row `i` applied to `f` computes
//! `sum_k band[k][i] * f[i + k]`. Coefficients are zero wherever `i + k`
//! would leave the grid.
//!
//! Interior rows use second-order central stencils. The outermost rows use
//! second-order one-sided stencils. Those rows, and enough of their
//! neighbours to keep every stencil uniform, are excluded by
//! `interior_margin` from all residual and commutator checks.
//!
//! The momentum generators are plain derivatives: `p = d/dx`, with no
//! factor of `i`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Grid1D, Grid2D};
use crate::params::{BsParams, MgParams};

/// Stencil offset in nodes along `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Offset {
    pub x: i32,
    pub y: i32,
}

impl Offset {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub const CENTER: Offset = Offset::new(0, 0);

    fn reach(&self) -> usize {
        self.x.unsigned_abs().max(self.y.unsigned_abs()) as usize
    }
}

impl std::ops::Add for Offset {
    type Output = Offset;
    fn add(self, o: Offset) -> Offset {
        Offset::new(self.x + o.x, self.y + o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    grid: Grid,
    bands: BTreeMap<Offset, Vec<f64>>,
    bandwidth: usize,
    interior_margin: usize,
}

impl BandedOperator {
    fn empty(grid: Grid, interior_margin: usize) -> Self {
        Self {
            grid,
            bands: BTreeMap::new(),
            bandwidth: 0,
            interior_margin,
        }
    }

    fn add_entry(&mut self, row: usize, offset: Offset, value: f64) {
        debug_assert!(self.grid.neighbor(row, offset.x, offset.y).is_some());
        let n = self.grid.len();
        self.bands.entry(offset).or_insert_with(|| vec![0.0; n])[row] += value;
    }

    /// Drops bands that are identically zero and recomputes the bandwidth.
    fn finish(mut self) -> Self {
        self.bands.retain(|_, c| c.iter().any(|&v| v != 0.0));
        self.bandwidth = self.bands.keys().map(Offset::reach).max().unwrap_or(0);
        debug_assert!(self.interior_margin >= self.bandwidth);
        self
    }

    pub fn zero(grid: impl Into<Grid>) -> Self {
        Self::empty(grid.into(), 0)
    }

    pub fn identity(grid: impl Into<Grid>) -> Self {
        Self::diagonal(grid, |_| 1.0)
    }

    /// Diagonal operator with entry `d(row)`.
    pub fn diagonal(grid: impl Into<Grid>, d: impl Fn(usize) -> f64) -> Self {
        let grid = grid.into();
        let mut op = Self::empty(grid, 0);
        for row in 0..grid.len() {
            op.add_entry(row, Offset::CENTER, d(row));
        }
        op.finish()
    }

    fn first_derivative(grid: Grid, axis: Axis) -> Self {
        Self::axis_stencil(grid, axis, 2, |i, n, h| {
            let s = 0.5 / h;
            if i == 0 {
                vec![(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
            } else if i + 1 == n {
                vec![(0, 3.0 * s), (-1, -4.0 * s), (-2, s)]
            } else {
                vec![(-1, -s), (1, s)]
            }
        })
    }

    fn second_derivative(grid: Grid, axis: Axis) -> Self {
        Self::axis_stencil(grid, axis, 3, |i, n, h| {
            let s = 1.0 / (h * h);
            if i == 0 {
                vec![(0, 2.0 * s), (1, -5.0 * s), (2, 4.0 * s), (3, -s)]
            } else if i + 1 == n {
                vec![(0, 2.0 * s), (-1, -5.0 * s), (-2, 4.0 * s), (-3, -s)]
            } else {
                vec![(-1, s), (0, -2.0 * s), (1, s)]
            }
        })
    }

    fn axis_stencil(
        grid: Grid,
        axis: Axis,
        margin: usize,
        stencil: impl Fn(usize, usize, f64) -> Vec<(i32, f64)>,
    ) -> Self {
        let (line, points) = match (axis, grid.y_axis()) {
            (Axis::X, _) => (grid.x_axis(), grid.shape().0),
            (Axis::Y, Some(gy)) => (gy, grid.shape().1),
            (Axis::Y, None) => unreachable!("y derivative on a 1D grid"),
        };
        let h = line.dx();
        let mut op = Self::empty(grid, margin);
        for row in 0..grid.len() {
            let (ix, iy) = grid.split(row);
            let i = if axis == Axis::X { ix } else { iy };
            for (k, c) in stencil(i, points, h) {
                let offset = match axis {
                    Axis::X => Offset::new(k, 0),
                    Axis::Y => Offset::new(0, k),
                };
                op.add_entry(row, offset, c);
            }
        }
        op.finish()
    }

    /// `d/dx` on either grid shape.
    pub fn d_dx(grid: impl Into<Grid>) -> Self {
        Self::first_derivative(grid.into(), Axis::X)
    }

    pub fn d_dy(grid: Grid2D) -> Self {
        Self::first_derivative(grid.into(), Axis::Y)
    }

    pub fn d2_dx2(grid: impl Into<Grid>) -> Self {
        Self::second_derivative(grid.into(), Axis::X)
    }

    pub fn d2_dy2(grid: Grid2D) -> Self {
        Self::second_derivative(grid.into(), Axis::Y)
    }

    /// Mixed derivative as the composition of the two first-derivative stencils.
    pub fn d2_dxdy(grid: Grid2D) -> Self {
        Self::d_dx(grid)
            .compose(&Self::d_dy(grid))
            .expect("same grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn interior_margin(&self) -> usize {
        self.interior_margin
    }

    pub fn offsets(&self) -> impl Iterator<Item = Offset> + '_ {
        self.bands.keys().copied()
    }

    pub fn band(&self, offset: Offset) -> Option<&[f64]> {
        self.bands.get(&offset).map(Vec::as_slice)
    }

    /// Coefficient multiplying `f[row + offset]` in row `row`.
    pub fn entry(&self, row: usize, offset: Offset) -> f64 {
        self.bands.get(&offset).map_or(0.0, |c| c[row])
    }

    /// Non-zero entries of one row as `(column, coefficient)` pairs.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.bands.iter().filter_map(move |(k, c)| {
            let v = c[row];
            if v == 0.0 {
                return None;
            }
            self.grid.neighbor(row, k.x, k.y).map(|col| (col, v))
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for band in out.bands.values_mut() {
            band.iter_mut().for_each(|v| *v *= c);
        }
        out.finish()
    }

    /// Left multiplication by the diagonal `d(row)`.
    pub fn scale_rows(&self, d: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for band in out.bands.values_mut() {
            for (row, v) in band.iter_mut().enumerate() {
                *v *= d(row);
            }
        }
        out.finish()
    }

    /// Left multiplication by a coefficient that depends on `y` only.
    fn scale_by_y(&self, coef: impl Fn(f64) -> f64) -> Self {
        let grid = self.grid;
        let gy = *grid.y_axis().expect("2D grid");
        let cache: Vec<f64> = gy.points().map(coef).collect();
        self.scale_rows(|row| cache[grid.split(row).1])
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.interior_margin = self.interior_margin.max(other.interior_margin);
        let n = self.grid.len();
        for (k, c) in &other.bands {
            let band = out.bands.entry(*k).or_insert_with(|| vec![0.0; n]);
            for (acc, v) in band.iter_mut().zip(c) {
                *acc += sign * v;
            }
        }
        Ok(out.finish())
    }

    /// `self o other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let grid = self.grid;
        let mut out = Self::empty(grid, self.interior_margin + other.interior_margin);
        for row in 0..grid.len() {
            for (ka, ca) in &self.bands {
                let a = ca[row];
                if a == 0.0 {
                    continue;
                }
                let Some(mid) = grid.neighbor(row, ka.x, ka.y) else {
                    continue;
                };
                for (kb, cb) in &other.bands {
                    let b = cb[mid];
                    if b != 0.0 {
                        out.add_entry(row, *ka + *kb, a * b);
                    }
                }
            }
        }
        Ok(out.finish())
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let input = f.values();
        let mut out = vec![0.0; input.len()];
        for (k, c) in &self.bands {
            for (row, acc) in out.iter_mut().enumerate() {
                let v = c[row];
                if v != 0.0 {
                    if let Some(col) = self.grid.neighbor(row, k.x, k.y) {
                        *acc += v * input[col];
                    }
                }
            }
        }
        Ok(Field::from_raw(self.grid, out))
    }

    /// Max-abs row sum over rows at distance at least `margin` from every boundary.
    pub fn interior_norm(&self, margin: usize) -> Result<f64> {
        if margin < self.bandwidth {
            return Err(Error::MarginBelowBandwidth {
                margin,
                bandwidth: self.bandwidth,
            });
        }
        self.grid.check_margin(margin)?;
        Ok(self
            .grid
            .interior_rows(margin)
            .map(|row| self.bands.values().map(|c| c[row].abs()).sum::<f64>())
            .fold(0.0, f64::max))
    }

    /// Interior norm at the operator's own margin.
    pub fn own_interior_norm(&self) -> Result<f64> {
        self.interior_norm(self.interior_margin)
    }
}

/// `[a, b] = a o b - b o a`; its margin is the sum of both margins.
pub fn commutator(a: &BandedOperator, b: &BandedOperator) -> Result<BandedOperator> {
    let ab = a.compose(b)?;
    let ba = b.compose(a)?;
    ab.sub(&ba)
}

/// `H_BS = -(sigma^2/2) p^2 + (sigma^2/2 - r) p + r` with `p = d/dx`.
pub fn build_bs_hamiltonian(p: &BsParams, grid: Grid1D) -> BandedOperator {
    let kinetic = BandedOperator::d2_dx2(grid).scale(-0.5 * p.sigma2());
    let drift = BandedOperator::d_dx(grid).scale(p.drift());
    let potential = BandedOperator::identity(grid).scale(p.r());
    kinetic
        .add(&drift)
        .and_then(|h| h.add(&potential))
        .expect("same grid")
}

/// Merton-Garman Hamiltonian with `y`-dependent coefficients:
///
/// `-(e^y/2) p_x^2 - (r - e^y/2) p_x - A(y) p_y - rho zeta e^{y(alpha-1/2)} p_x p_y
///  - zeta^2 e^{2y(alpha-1)} p_y^2 + r`.
pub fn build_mg_hamiltonian(p: &MgParams, grid: Grid2D) -> BandedOperator {
    let terms = [
        BandedOperator::d2_dx2(grid).scale_by_y(|y| -0.5 * y.exp()),
        BandedOperator::d_dx(grid).scale_by_y(|y| -p.price_drift(y)),
        BandedOperator::d_dy(grid).scale_by_y(|y| -p.vol_drift(y)),
        BandedOperator::d2_dxdy(grid).scale_by_y(|y| -p.correlation_term(y)),
        BandedOperator::d2_dy2(grid).scale_by_y(|y| -p.vol_diffusion(y)),
        BandedOperator::identity(grid).scale(p.r),
    ];
    let mut h = BandedOperator::zero(grid);
    for t in &terms {
        h = h.add(t).expect("same grid");
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(a: f64, b: f64, n: usize) -> Grid1D {
        Grid1D::new(a, b, n).unwrap()
    }

    fn max_interior_abs(f: &Field, margin: usize) -> f64 {
        f.interior_norm(margin).unwrap()
    }

    #[test]
    fn first_derivative_examples() {
        let g = g1(-1.0, 1.0, 201);
        let d = BandedOperator::d_dx(g);
        assert_eq!(d.bandwidth(), 2);
        let m = d.interior_margin();

        let c = Field::constant(g, 3.7).unwrap();
        assert!(max_interior_abs(&d.apply(&c).unwrap(), m) <= 1e-12);

        let x = Field::sample_1d(g, |x| x).unwrap();
        let dx = d.apply(&x).unwrap();
        for r in g
            .points()
            .enumerate()
            .map(|(i, _)| i)
            .filter(|&i| Grid::from(g).is_interior(i, m))
        {
            assert!((dx.values()[r] - 1.0).abs() <= 1e-12);
        }

        // Taylor remainder: (e^{x+h} - e^{x-h}) / 2h = e^x (1 + h^2/6 + ...)
        let e = Field::sample_1d(g, f64::exp).unwrap();
        let de = d.apply(&e).unwrap();
        let bound = g.dx().powi(2) / 6.0 * 1.1;
        for i in Grid::from(g).interior_rows(m) {
            let delta = de.values()[i] / e.values()[i] - 1.0;
            assert!(delta.abs() <= bound, "row {i}: {delta}");
        }
    }

    #[test]
    fn one_sided_boundary_rows_are_second_order() {
        let g = g1(0.0, 1.0, 11);
        let q = Field::sample_1d(g, |x| x * x + x).unwrap();
        let d = BandedOperator::d_dx(g).apply(&q).unwrap();
        assert!((d.values()[0] - 1.0).abs() < 1e-12);
        assert!((d.values()[10] - 3.0).abs() < 1e-12);
        let c = Field::sample_1d(g, |x| x.powi(3)).unwrap();
        let d2 = BandedOperator::d2_dx2(g).apply(&c).unwrap();
        assert!(d2.values()[0].abs() < 1e-10);
        assert!((d2.values()[10] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn second_derivative_examples() {
        let g = g1(-1.0, 1.0, 41);
        let d2 = BandedOperator::d2_dx2(g);
        let m = d2.interior_margin();
        let sq = d2.apply(&Field::sample_1d(g, |x| x * x).unwrap()).unwrap();
        for i in Grid::from(g).interior_rows(m) {
            assert!((sq.values()[i] - 2.0).abs() <= 1e-10);
        }
        let c = d2.apply(&Field::constant(g, 2.0).unwrap()).unwrap();
        assert!(max_interior_abs(&c, m) <= 1e-10);
    }

    #[test]
    fn mixed_derivative_of_xy_is_one() {
        let g2 = Grid2D::new(g1(-1.0, 1.0, 21), g1(-0.5, 1.5, 17));
        let dxy = BandedOperator::d2_dxdy(g2);
        let f = Field::sample_2d(g2, |x, y| x * y).unwrap();
        let out = dxy.apply(&f).unwrap();
        for r in Grid::from(g2).interior_rows(dxy.interior_margin()) {
            assert!((out.values()[r] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bs_hamiltonian_examples() {
        let p = BsParams::new(0.05, 0.2).unwrap();
        let g = g1(-2.0, 2.0, 401);
        let h = build_bs_hamiltonian(&p, g);
        let m = h.interior_margin();

        let e = Field::sample_1d(g, f64::exp).unwrap();
        let he = h.apply(&e).unwrap();
        for i in Grid::from(g).interior_rows(m) {
            assert!((he.values()[i] / e.values()[i]).abs() <= g.dx().powi(2));
        }

        // constants see only the potential term, everywhere
        let c = Field::constant(g, 2.5).unwrap();
        let hc = h.apply(&c).unwrap();
        for v in hc.values() {
            assert!((v - 0.05 * 2.5).abs() < 1e-9, "{v}");
        }

        let x = Field::sample_1d(g, |x| x).unwrap();
        let hx = h.apply(&x).unwrap();
        for i in Grid::from(g).interior_rows(m) {
            let expected = -0.03 + 0.05 * g.point(i);
            assert!((hx.values()[i] - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn identity_and_zero() {
        let g = g1(0.0, 1.0, 9);
        let f = Field::sample_1d(g, |x| x.sin() + 2.0).unwrap();
        assert_eq!(BandedOperator::identity(g).apply(&f).unwrap(), f);
        let z = BandedOperator::zero(g).apply(&f).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_mismatch() {
        let d = BandedOperator::d_dx(g1(0.0, 1.0, 9));
        let f = Field::constant(g1(0.0, 1.0, 11), 1.0).unwrap();
        assert_eq!(d.apply(&f), Err(Error::GridMismatch));
        let other = BandedOperator::d_dx(g1(0.0, 1.0, 11));
        assert_eq!(commutator(&d, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn self_commutator_vanishes() {
        let d = BandedOperator::d_dx(g1(0.0, 1.0, 15));
        let c = commutator(&d, &d).unwrap();
        assert_eq!(c.offsets().count(), 0);
        assert_eq!(c.interior_margin(), 2 * d.interior_margin());
        let f = Field::sample_1d(*c.grid().x_axis(), f64::exp).unwrap();
        assert!(c.apply(&f).unwrap().values().iter().all(|&v| v == 0.0));
    }

    /// Dense reference: a Toeplitz stencil applied as a full matrix product,
    /// far from the boundary, commutes exactly with another Toeplitz stencil.
    #[test]
    fn bs_hamiltonian_commutes_with_momentum_on_interior() {
        let p = BsParams::new(0.05, 0.2).unwrap();
        let g = g1(-1.0, 1.0, 15);
        let h = build_bs_hamiltonian(&p, g);
        let d = BandedOperator::d_dx(g);
        let c = commutator(&h, &d).unwrap();
        assert!(c.bandwidth() <= h.bandwidth() + d.bandwidth());
        assert_eq!(
            c.interior_margin(),
            h.interior_margin() + d.interior_margin()
        );
        assert!(c.own_interior_norm().unwrap() <= 1e-12);

        // dense products for comparison
        let n = g.len();
        let dense = |op: &BandedOperator| {
            let mut m = vec![vec![0.0; n]; n];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, v) in op.row_entries(i) {
                    row[j] = v;
                }
            }
            m
        };
        let (hm, dm) = (dense(&h), dense(&d));
        let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| {
            let mut out = vec![vec![0.0; n]; n];
            for i in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        out[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            out
        };
        let (hd, dh) = (mul(&hm, &dm), mul(&dm, &hm));
        for i in 0..n {
            for j in 0..n {
                let banded = c.row_entries(i).find(|e| e.0 == j).map_or(0.0, |e| e.1);
                assert!((banded - (hd[i][j] - dh[i][j])).abs() < 1e-9);
            }
        }
        // boundary rows do not commute
        let boundary = (0..n).map(|i| c.row_entries(i).map(|e| e.1.abs()).sum::<f64>());
        assert!(boundary.fold(0.0, f64::max) > 1e-6);
    }

    fn generic_mg() -> MgParams {
        MgParams::new(0.05, 0.01, 0.02, 0.1, 1.0, 0.0).unwrap()
    }

    #[test]
    fn mg_hamiltonian_annihilates_price_only_martingale() {
        let p = MgParams::new(0.05, 0.3, -0.1, 0.4, 0.7, -0.5).unwrap();
        let g2 = Grid2D::new(g1(-1.0, 1.0, 41), g1(-1.0, 1.0, 41));
        let h = build_mg_hamiltonian(&p, g2);
        let e = Field::sample_2d(g2, |x, _| x.exp()).unwrap();
        let he = h.apply(&e).unwrap();
        let dx2 = g2.gx.dx().powi(2);
        for r in Grid::from(g2).interior_rows(h.interior_margin()) {
            // -e^y/2 (dx^2/12) + (r - e^y/2)... bounded by e^y dx^2
            let (_, y) = Grid::from(g2).coords(r);
            let rel = he.values()[r] / e.values()[r];
            assert!(rel.abs() <= (y.exp() + p.r) * dx2, "{rel}");
        }
        let c = h.apply(&Field::constant(g2, 1.5).unwrap()).unwrap();
        for r in Grid::from(g2).interior_rows(h.interior_margin()) {
            assert!((c.values()[r] - 1.5 * p.r).abs() < 1e-10);
        }
    }

    #[test]
    fn mg_hamiltonian_on_extended_martingale() {
        let p = MgParams::new(0.05, 0.3, -0.1, 0.4, 0.7, -0.5).unwrap();
        let g2 = Grid2D::new(g1(-1.0, 1.0, 81), g1(-1.0, 1.0, 81));
        let h = build_mg_hamiltonian(&p, g2);
        let s = Field::sample_2d(g2, |x, y| (x + y).exp()).unwrap();
        let hs = h.apply(&s).unwrap();
        let h2 = g2.gx.dx().powi(2) + g2.gy.dx().powi(2);
        for r in Grid::from(g2).interior_rows(h.interior_margin()) {
            let (_, y) = Grid::from(g2).coords(r);
            let g = p.extended_decay(y);
            let rel = hs.values()[r] / s.values()[r] + g;
            assert!(rel.abs() <= 2.0 * h2, "{rel}");
        }
    }

    #[test]
    fn mg_commutators() {
        let p = generic_mg();
        let g2 = Grid2D::new(g1(-1.0, 1.0, 21), g1(-1.0, 1.0, 21));
        let h = build_mg_hamiltonian(&p, g2);
        let cx = commutator(&h, &BandedOperator::d_dx(g2)).unwrap();
        assert!(cx.own_interior_norm().unwrap() <= 1e-12);
        let cy = commutator(&h, &BandedOperator::d_dy(g2)).unwrap();
        assert!(cy.own_interior_norm().unwrap() > 1e-6);
    }

    #[test]
    fn operator_norm_margins() {
        let g = g1(-1.0, 1.0, 21);
        let d = BandedOperator::d_dx(g);
        assert!(matches!(
            d.interior_norm(1),
            Err(Error::MarginBelowBandwidth { .. })
        ));
        assert!(matches!(
            d.interior_norm(11),
            Err(Error::MarginExceedsGrid { .. })
        ));
        // central row sum is 2 / (2 dx) = 1/dx
        assert!((d.interior_norm(2).unwrap() - 1.0 / g.dx()).abs() < 1e-9);
    }
}
