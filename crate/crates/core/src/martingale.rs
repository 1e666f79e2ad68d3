//! Martingale (vacuum) conditions and spontaneously broken generators.
//!
//! The martingale state `S = e^x` is annihilated by the Black-Scholes
//! Hamiltonian. Under Merton-Garman the extended state `S = e^{x+y}` is
//! annihilated only where the volatility constraint
//! `lambda + e^y (mu + (zeta^2/2) e^{2y(alpha-1)} + rho zeta e^{y(alpha-1/2)}) = 0`
//! holds. A generator is reported broken when it commutes with the
//! Hamiltonian on the interior but does not annihilate the vacuum.

use crate::error::{Error, Result};
use crate::grid::{inner_product, Field, Grid, Grid1D, Grid2D};
use crate::operators::{build_bs_hamiltonian, build_mg_hamiltonian, commutator, BandedOperator};
use crate::params::{BsParams, MgParams};
use crate::roots::{brent, BracketOptions};

/// Relative tolerance for "commutes": `||[H, A]|| <= COMMUTATION_RTOL * ||H|| ||A||`.
pub const COMMUTATION_RTOL: f64 = 1e-10;

/// `A|S> != 0` is read as `||A S|| / ||S|| > BROKEN_THRESHOLD` on interior norms.
pub const BROKEN_THRESHOLD: f64 = 1e-6;

/// Interior max of `|H_BS e^x| / e^x`.
pub fn bs_martingale_residual(p: &BsParams, grid: Grid1D) -> f64 {
    let h = build_bs_hamiltonian(p, grid);
    let s = Field::sample_1d(grid, f64::exp).expect("exp is finite on a finite grid");
    let hs = h.apply(&s).expect("same grid");
    Grid::from(grid)
        .interior_rows(h.interior_margin())
        .map(|i| (hs.values()[i] / s.values()[i]).abs())
        .fold(0.0, f64::max)
}

/// `R(x, y) = [H_MG e^{x+y}] / e^{x+y} + G(y)`.
///
/// `R` vanishes on the interior up to truncation error. Rows where `G(y)`
/// is zero are the rows on which `e^{x+y}` is annihilated.
pub fn extended_martingale_residual(p: &MgParams, grid: Grid2D) -> Result<Field> {
    let h = build_mg_hamiltonian(p, grid);
    let s = Field::sample_2d(grid, |x, y| (x + y).exp())?;
    let hs = h.apply(&s)?;
    let g: Vec<f64> = grid.gy.points().map(|y| p.extended_decay(y)).collect();
    let full = Grid::from(grid);
    let values = hs
        .values()
        .iter()
        .zip(s.values())
        .enumerate()
        .map(|(row, (a, b))| a / b + g[full.split(row).1])
        .collect();
    Field::from_values(grid, values)
}

/// Interior max of the extended residual, at the Hamiltonian's own margin.
pub fn extended_martingale_interior_max(p: &MgParams, grid: Grid2D) -> Result<f64> {
    let margin = build_mg_hamiltonian(p, grid).interior_margin();
    extended_martingale_residual(p, grid)?.interior_norm(margin)
}

/// Residual of the volatility constraint at one value of `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResidual {
    pub y: f64,
    pub residual: f64,
    /// Sum of the magnitudes of the residual's terms.
    pub scale: f64,
}

pub fn martingale_constraint_residual(p: &MgParams, y: f64) -> Result<ConstraintResidual> {
    if !y.is_finite() {
        return Err(Error::InvalidParameter {
            name: "y",
            value: y,
            reason: "must be finite",
        });
    }
    let ey = y.exp();
    let diffusion = 0.5 * p.vol_diffusion(y);
    let correlation = p.correlation_term(y);
    let residual = p.lambda + ey * (p.mu + diffusion + correlation);
    let scale = p.lambda.abs() + ey * (p.mu.abs() + diffusion + correlation.abs());
    if !(residual.is_finite() && scale.is_finite()) {
        return Err(Error::NonFinite("martingale constraint residual"));
    }
    Ok(ConstraintResidual { y, residual, scale })
}

/// Root of the volatility constraint inside `[y_lo, y_hi]`.
///
/// More than one root can exist (e.g. for `alpha < 1`); the bracket picks one.
pub fn solve_constraint_y(p: &MgParams, y_lo: f64, y_hi: f64) -> Result<f64> {
    if !(y_lo.is_finite() && y_hi.is_finite() && y_lo < y_hi) {
        return Err(Error::InvalidBounds {
            min: y_lo,
            max: y_hi,
        });
    }
    brent(
        |y| martingale_constraint_residual(p, y).map(|c| c.residual),
        y_lo,
        y_hi,
        BracketOptions::default(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    generator_name: String,
    commutator_norm: f64,
    commutator_scale: f64,
    commutes_with_h: bool,
    action_norm_ratio: f64,
    broken: bool,
}

impl SymmetryReport {
    fn new(
        generator_name: String,
        commutator_norm: f64,
        commutator_scale: f64,
        action_norm_ratio: f64,
    ) -> Self {
        let commutes_with_h = commutator_norm <= COMMUTATION_RTOL * commutator_scale;
        let broken = commutes_with_h && action_norm_ratio > BROKEN_THRESHOLD;
        Self {
            generator_name,
            commutator_norm,
            commutator_scale,
            commutes_with_h,
            action_norm_ratio,
            broken,
        }
    }

    pub fn generator_name(&self) -> &str {
        &self.generator_name
    }

    /// Interior norm of `[H, A]`.
    pub fn commutator_norm(&self) -> f64 {
        self.commutator_norm
    }

    /// `||H|| ||A||` on the same interior rows.
    pub fn commutator_scale(&self) -> f64 {
        self.commutator_scale
    }

    pub fn commutes_with_h(&self) -> bool {
        self.commutes_with_h
    }

    /// `||A S|| / ||S||` on interior rows.
    pub fn action_norm_ratio(&self) -> f64 {
        self.action_norm_ratio
    }

    pub fn broken(&self) -> bool {
        self.broken
    }
}

/// Checks whether `generator` is a symmetry of `h` that the vacuum breaks.
pub fn broken_generator_report(
    name: impl Into<String>,
    h: &BandedOperator,
    generator: &BandedOperator,
    vacuum: &Field,
) -> Result<SymmetryReport> {
    if vacuum.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let c = commutator(h, generator)?;
    let margin = c.interior_margin();
    let commutator_norm = c.interior_norm(margin)?;
    let scale = h.interior_norm(margin)? * generator.interior_norm(margin)?;

    let action = generator.apply(vacuum)?;
    let vacuum_norm = vacuum.interior_norm(margin)?;
    let ratio = if vacuum_norm > 0.0 {
        action.interior_norm(margin)? / vacuum_norm
    } else {
        0.0
    };
    Ok(SymmetryReport::new(
        name.into(),
        commutator_norm,
        scale,
        ratio,
    ))
}

/// Quadrature form of the commutator expectation `<S|[p, phibar]|S>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorExpectation {
    /// `int S (d phibar / dx)` with the discrete derivative.
    pub i1: f64,
    /// `int S phi` with the supplied analytic derivative `phi`.
    pub i2: f64,
    /// `int S (phibar - shift)`; zero by construction of `shift`.
    pub centered: f64,
    /// S-weighted mean of `phibar`; subtracting it gives the zero-expectation field.
    pub shift: f64,
}

pub fn commutator_expectation(
    s: &Field,
    phibar: &Field,
    phibar_deriv_analytic: &Field,
) -> Result<CommutatorExpectation> {
    if s.grid() != phibar.grid() || s.grid() != phibar_deriv_analytic.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = match s.grid() {
        Grid::One(g) => *g,
        Grid::Two(_) => {
            return Err(Error::InvalidInputs(
                "commutator expectation needs a 1D grid",
            ))
        }
    };
    let dphibar = BandedOperator::d_dx(grid).apply(phibar)?;
    let i1 = inner_product(s, &dphibar)?;
    let i2 = inner_product(s, phibar_deriv_analytic)?;

    let one = Field::constant(grid, 1.0)?;
    let mass = inner_product(s, &one)?;
    let shift = if mass != 0.0 {
        inner_product(s, phibar)? / mass
    } else {
        0.0
    };
    let centered_field = phibar.axpby(1.0, &one, -shift)?;
    let centered = inner_product(s, &centered_field)?;
    Ok(CommutatorExpectation {
        i1,
        i2,
        centered,
        shift,
    })
}
