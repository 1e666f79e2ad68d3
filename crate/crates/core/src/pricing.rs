//! The pricing kernel `exp(-(t* - t) H)` realised by implicit time stepping.
//!
//! Time-stepping schemes implement [`TimeScheme`] and are looked up by name
//! in a [`SchemeRegistry`]; the built-in registry carries `implicit-euler`
//! and `crank-nicolson`. Boundary rows are Dirichlet rows pinned to the
//! terminal field.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Grid1D};
use crate::operators::{build_bs_hamiltonian, BandedOperator};
use crate::params::BsParams;
use crate::solve::{BandedLu, BandedMatrix};

/// One step of size `dt` of `v' = -H v`, with some rows held fixed.
pub trait Stepper {
    fn advance(&self, values: &mut [f64]);
}

pub trait TimeScheme: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Builds the one-step map. `pinned[row]` carries the Dirichlet value of a held row.
    fn prepare(
        &self,
        h: &BandedOperator,
        dt: f64,
        pinned: &[Option<f64>],
    ) -> Result<Box<dyn Stepper>>;
}

/// `(I + dt H)^{-1}` per step.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImplicitEuler;

/// `(I + dt/2 H)^{-1} (I - dt/2 H)` per step.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrankNicolson;

impl TimeScheme for ImplicitEuler {
    fn name(&self) -> &'static str {
        "implicit-euler"
    }

    fn prepare(
        &self,
        h: &BandedOperator,
        dt: f64,
        pinned: &[Option<f64>],
    ) -> Result<Box<dyn Stepper>> {
        Ok(Box::new(ThetaStepper::new(h, dt, 1.0, pinned)?))
    }
}

impl TimeScheme for CrankNicolson {
    fn name(&self) -> &'static str {
        "crank-nicolson"
    }

    fn prepare(
        &self,
        h: &BandedOperator,
        dt: f64,
        pinned: &[Option<f64>],
    ) -> Result<Box<dyn Stepper>> {
        Ok(Box::new(ThetaStepper::new(h, dt, 0.5, pinned)?))
    }
}

/// `(I + theta dt H) v_new = (I - (1 - theta) dt H) v_old` on free rows.
struct ThetaStepper {
    explicit: Option<BandedOperator>,
    lu: BandedLu,
    pinned: Vec<Option<f64>>,
}

impl ThetaStepper {
    fn new(h: &BandedOperator, dt: f64, theta: f64, pinned: &[Option<f64>]) -> Result<Self> {
        let grid = h.grid();
        let n = grid.len();
        assert_eq!(pinned.len(), n);

        let (mut kl, mut ku) = (0usize, 0usize);
        for row in (0..n).filter(|&r| pinned[r].is_none()) {
            for (col, _) in h.row_entries(row) {
                if col < row {
                    kl = kl.max(row - col);
                } else {
                    ku = ku.max(col - row);
                }
            }
        }
        let mut lhs = BandedMatrix::new(n, kl, ku);
        for (row, pin) in pinned.iter().enumerate() {
            lhs.add(row, row, 1.0);
            if pin.is_none() {
                for (col, v) in h.row_entries(row) {
                    lhs.add(row, col, theta * dt * v);
                }
            }
        }
        let explicit = (theta < 1.0).then(|| h.scale(-(1.0 - theta) * dt));
        Ok(Self {
            explicit,
            lu: lhs.factor()?,
            pinned: pinned.to_vec(),
        })
    }
}

impl Stepper for ThetaStepper {
    fn advance(&self, values: &mut [f64]) {
        if let Some(op) = &self.explicit {
            let mut rhs = values.to_vec();
            for (row, acc) in rhs.iter_mut().enumerate() {
                if self.pinned[row].is_none() {
                    *acc += op.row_entries(row).map(|(c, v)| v * values[c]).sum::<f64>();
                }
            }
            values.copy_from_slice(&rhs);
        }
        for (v, pin) in values.iter_mut().zip(&self.pinned) {
            if let Some(p) = pin {
                *v = *p;
            }
        }
        self.lu.solve_in_place(values);
    }
}

/// Time-stepping schemes selectable by name.
#[derive(Debug, Clone, Default)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Arc<dyn TimeScheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(ImplicitEuler));
        reg.register(Arc::new(CrankNicolson));
        reg
    }

    pub fn register(&mut self, scheme: Arc<dyn TimeScheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TimeScheme>> {
        self.schemes
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownScheme(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.schemes.keys().copied()
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    maturity: f64,
    steps: usize,
    scheme: Arc<dyn TimeScheme>,
}

impl EvolutionConfig {
    pub fn new(maturity: f64, steps: usize, scheme: Arc<dyn TimeScheme>) -> Result<Self> {
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(Error::InvalidParameter {
                name: "maturity",
                value: maturity,
                reason: "must be finite and positive",
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            maturity,
            steps,
            scheme,
        })
    }

    /// Looks the scheme up in the built-in registry.
    pub fn named(maturity: f64, steps: usize, scheme: &str) -> Result<Self> {
        Self::new(maturity, steps, SchemeRegistry::builtin().get(scheme)?)
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    pub fn scheme(&self) -> &dyn TimeScheme {
        self.scheme.as_ref()
    }
}

/// Applies `exp(-T H)` to `terminal`, holding boundary rows at their terminal values.
pub fn evolve(h: &BandedOperator, terminal: &Field, cfg: &EvolutionConfig) -> Result<Field> {
    if terminal.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *h.grid();
    let pinned: Vec<Option<f64>> = terminal
        .values()
        .iter()
        .enumerate()
        .map(|(row, &v)| grid.is_boundary(row).then_some(v))
        .collect();
    let stepper = cfg.scheme().prepare(h, cfg.dt(), &pinned)?;
    let mut values = terminal.values().to_vec();
    for step in 1..=cfg.steps() {
        stepper.advance(&mut values);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValues { step });
        }
    }
    Field::from_values(grid, values)
}

/// Interior max of `|evolve(h, S) - S| / |S|`, the fixed-point defect of the vacuum.
pub fn martingale_evolution_check(
    h: &BandedOperator,
    vacuum: &Field,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    let evolved = evolve(h, vacuum, cfg)?;
    let margin = h.interior_margin();
    h.grid().check_margin(margin)?;
    Ok(h.grid()
        .interior_rows(margin)
        .map(|r| {
            let (e, v) = (evolved.values()[r], vacuum.values()[r]);
            let d = (e - v).abs();
            if v != 0.0 {
                d / v.abs()
            } else {
                d
            }
        })
        .fold(0.0, f64::max))
}

/// Standard normal CDF, Abramowitz-Stegun 26.2.17 (absolute error below 7.5e-8).
pub fn norm_cdf(x: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let z = x.abs();
    let t = 1.0 / (1.0 + P * z);
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = density * poly;
    if x >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// Lognormal European call value.
pub fn bs_closed_form(s0: f64, k: f64, p: &BsParams, maturity: f64) -> Result<f64> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(s0) && ok(k) && ok(maturity)) {
        return Err(Error::InvalidInputs("s0, k and maturity must be positive"));
    }
    let vol = p.sigma() * maturity.sqrt();
    let d1 = ((s0 / k).ln() + (p.r() + 0.5 * p.sigma2()) * maturity) / vol;
    let d2 = d1 - vol;
    Ok(s0 * norm_cdf(d1) - k * (-p.r() * maturity).exp() * norm_cdf(d2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub values: Field,
    pub spot_price: f64,
    pub oracle_price: f64,
    pub rel_error: f64,
}

/// Grid `[ln s0 - 10 sigma sqrt(T), ln s0 + 10 sigma sqrt(T)]`, centred on `ln s0`.
pub fn call_grid(p: &BsParams, s0: f64, maturity: f64, n: usize) -> Result<Grid1D> {
    let half = 10.0 * p.sigma() * maturity.sqrt();
    Grid1D::new(s0.ln() - half, s0.ln() + half, n)
}

/// Linear interpolation of a 1D field at `x`.
pub fn interpolate(field: &Field, x: f64) -> Result<f64> {
    let g = match field.grid() {
        Grid::One(g) => *g,
        Grid::Two(_) => return Err(Error::InvalidInputs("interpolation needs a 1D grid")),
    };
    if !g.contains(x) {
        return Err(Error::PointOutsideGrid {
            x,
            x_min: g.x_min(),
            x_max: g.x_max(),
        });
    }
    let i = (((x - g.x_min()) / g.dx()).floor() as usize).min(g.len() - 2);
    let t = ((x - g.point(i)) / g.dx()).clamp(0.0, 1.0);
    let v = field.values();
    Ok(if t == 0.0 {
        v[i]
    } else {
        (1.0 - t) * v[i] + t * v[i + 1]
    })
}

/// Prices a European call by evolving the payoff `max(e^x - k, 0)` under `H_BS`.
pub fn price_european_call(
    p: &BsParams,
    grid: Grid1D,
    k: f64,
    cfg: &EvolutionConfig,
    x0: f64,
) -> Result<PricingResult> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInputs("strike must be positive"));
    }
    if !grid.contains(k.ln()) {
        return Err(Error::StrikeOutsideGrid {
            log_strike: k.ln(),
            x_min: grid.x_min(),
            x_max: grid.x_max(),
        });
    }
    if !grid.contains(x0) {
        return Err(Error::PointOutsideGrid {
            x: x0,
            x_min: grid.x_min(),
            x_max: grid.x_max(),
        });
    }
    let payoff = Field::sample_1d(grid, |x| (x.exp() - k).max(0.0))?;
    let h = build_bs_hamiltonian(p, grid);
    let values = evolve(&h, &payoff, cfg)?;
    let spot_price = interpolate(&values, x0)?;
    let oracle_price = bs_closed_form(x0.exp(), k, p, cfg.maturity())?;
    let rel_error = (spot_price - oracle_price).abs() / oracle_price.abs();
    Ok(PricingResult {
        values,
        spot_price,
        oracle_price,
        rel_error,
    })
}
