//! The analyses behind each subcommand.
//!
//! Each analysis reads what it needs from a [`RunConfig`], calls into
//! `vacuumlab_core`, and returns an [`Outcome`]. Analyses are registered by
//! name in a [`Registry`], which is what the dispatcher consults.

use std::collections::BTreeMap;

use serde_json::json;
use vacuumlab_core::martingale::{
    broken_generator_report, extended_martingale_residual, martingale_constraint_residual,
    solve_constraint_y, SymmetryReport,
};
use vacuumlab_core::operators::{build_bs_hamiltonian, build_mg_hamiltonian};
use vacuumlab_core::potentials::{
    bs_potential, bs_potential_slope, bs_vacuum, lx_symmetry_residual, ly_symmetry_residual,
    mg_potential_gradient, mg_vacuum, quartic_potential, quartic_vacuum, vacuum_manifold,
    QuarticParams, STATIONARITY_TOL,
};
use vacuumlab_core::pricing::{
    call_grid, martingale_evolution_check, price_european_call, EvolutionConfig,
};
use vacuumlab_core::{BandedOperator, BsParams, Field, Grid, Grid1D, Grid2D, MgParams};

use crate::config::{Model, RunConfig};
use crate::error::CliError;
use crate::report::{Outcome, Table};

pub trait Analysis: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError>;
}

pub struct Registry {
    analyses: BTreeMap<&'static str, Box<dyn Analysis>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            analyses: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(BsVacuumCmd));
        reg.register(Box::new(MgVacuumCmd));
        reg.register(Box::new(ExtendedMartingaleCmd));
        reg.register(Box::new(ConstraintRootCmd));
        reg.register(Box::new(SymmetryReportCmd));
        reg.register(Box::new(QuarticVacuumCmd));
        reg.register(Box::new(VacuumManifoldCmd));
        reg.register(Box::new(PriceCmd));
        reg.register(Box::new(MartingaleCheckCmd));
        reg
    }

    pub fn register(&mut self, analysis: Box<dyn Analysis>) {
        self.analyses.insert(analysis.name(), analysis);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Analysis, CliError> {
        self.analyses
            .get(name)
            .map(|a| a.as_ref())
            .ok_or_else(|| CliError::UnknownCommand {
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.analyses.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Analysis> + '_ {
        self.analyses.values().map(|a| a.as_ref())
    }
}

fn bs_params(cfg: &RunConfig) -> Result<BsParams, CliError> {
    let r = cfg.require(cfg.r, "r")?;
    match (cfg.sigma, cfg.sigma2) {
        (Some(_), Some(_)) => Err(CliError::Config("give sigma or sigma2, not both".into())),
        (Some(s), None) => Ok(BsParams::new(r, s)?),
        (None, Some(v)) => Ok(BsParams::from_variance(r, v)?),
        (None, None) => Err(CliError::Missing("sigma2")),
    }
}

/// `r_default` is used by analyses in which the rate cancels.
fn mg_params(cfg: &RunConfig, r_default: Option<f64>) -> Result<MgParams, CliError> {
    Ok(MgParams::new(
        cfg.require(cfg.r.or(r_default), "r")?,
        cfg.require(cfg.lambda, "lambda")?,
        cfg.require(cfg.mu, "mu")?,
        cfg.require(cfg.zeta, "zeta")?,
        cfg.require(cfg.alpha, "alpha")?,
        cfg.require(cfg.rho, "rho")?,
    )?)
}

fn grid_1d(cfg: &RunConfig, (lo, hi, n): (f64, f64, usize)) -> Result<Grid1D, CliError> {
    Ok(Grid1D::new(
        cfg.x_min.unwrap_or(lo),
        cfg.x_max.unwrap_or(hi),
        cfg.n.unwrap_or(n),
    )?)
}

fn grid_2d(cfg: &RunConfig, (lo, hi, n): (f64, f64, usize)) -> Result<Grid2D, CliError> {
    let gx = grid_1d(cfg, (lo, hi, n))?;
    let gy = Grid1D::new(
        cfg.y_min.unwrap_or(lo),
        cfg.y_max.unwrap_or(hi),
        cfg.ny.unwrap_or(n),
    )?;
    Ok(Grid2D::new(gx, gy))
}

fn evolution(cfg: &RunConfig, steps: usize) -> Result<EvolutionConfig, CliError> {
    Ok(EvolutionConfig::named(
        cfg.maturity.unwrap_or(1.0),
        cfg.steps.unwrap_or(steps),
        cfg.scheme.as_deref().unwrap_or("crank-nicolson"),
    )?)
}

fn symmetry_json(s: &SymmetryReport) -> serde_json::Value {
    json!({
        "generator": s.generator_name(),
        "commutator_norm": s.commutator_norm(),
        "commutator_scale": s.commutator_scale(),
        "commutes_with_h": s.commutes_with_h(),
        "action_norm_ratio": s.action_norm_ratio(),
        "broken": s.broken(),
    })
}

struct BsVacuumCmd;

impl Analysis for BsVacuumCmd {
    fn name(&self) -> &'static str {
        "bs-vacuum"
    }

    fn about(&self) -> &'static str {
        "minimum of the Black-Scholes vacuum potential"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let p = bs_params(cfg)?;
        let sol = bs_vacuum(&p)?;
        let phi = sol.value("phi").expect("bs vacuum reports phi");
        let slope = bs_potential_slope(&p, phi);

        let mut o = Outcome::default();
        o.output("phi_vac", phi);
        o.output("classification", sol.classification.to_string());
        o.output("potential", bs_potential(&p, phi));
        o.output("slope", slope);
        o.output("stable", p.stable());
        let tol = cfg.tolerance("stationarity", STATIONARITY_TOL);
        o.at_most("stationarity", slope.abs(), "stationarity", tol);
        Ok(o)
    }
}

struct MgVacuumCmd;

impl Analysis for MgVacuumCmd {
    fn name(&self) -> &'static str {
        "mg-vacuum"
    }

    fn about(&self) -> &'static str {
        "stationary point of the Merton-Garman vacuum potential at fixed y"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let p = mg_params(cfg, None)?;
        let y = cfg.require(cfg.y, "y")?;
        let sol = mg_vacuum(&p, y)?;
        let v = |k: &str| sol.value(k).expect("mg vacuum reports its fields");
        let (a, b, phi_x, phi_y) = (v("A"), v("B"), v("phi_x"), v("phi_y"));
        let grad = mg_potential_gradient(&p, y, phi_x, phi_y);

        let mut o = Outcome::default();
        for (k, val) in &sol.values {
            o.output(k, *val);
        }
        o.output("classification", sol.classification.to_string());
        o.output("gradient", vec![grad[0], grad[1]]);
        o.output("lx_symmetry_residual", lx_symmetry_residual(&p, y));
        o.output("ly_symmetry_residual", ly_symmetry_residual(&p, y));

        let tol = cfg.tolerance("stationarity", STATIONARITY_TOL);
        o.at_most("d-phi-x", grad[0].abs(), "stationarity", tol);
        o.at_most("d-phi-y", grad[1].abs(), "stationarity", tol);
        o.at_most(
            "alignment",
            (b * phi_y - a * phi_x).abs(),
            "stationarity",
            tol,
        );
        Ok(o)
    }
}

struct ExtendedMartingaleCmd;

impl Analysis for ExtendedMartingaleCmd {
    fn name(&self) -> &'static str {
        "mg-extended-martingale"
    }

    fn about(&self) -> &'static str {
        "interior residual of H_MG e^{x+y} + G(y) e^{x+y}, with a per-row table"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let p = mg_params(cfg, Some(0.0))?;
        let grid = grid_2d(cfg, (-1.0, 1.0, 201))?;
        let margin = build_mg_hamiltonian(&p, grid).interior_margin();
        let residual = extended_martingale_residual(&p, grid)?;
        let full = Grid::from(grid);
        full.check_margin(margin)?;

        // Per y row: max |R| and max |H e / e| over interior x.
        let ny = grid.gy.len();
        let mut row_r = vec![0.0f64; ny];
        let mut row_h = vec![0.0f64; ny];
        for row in full.interior_rows(margin) {
            let iy = full.split(row).1;
            let r = residual.values()[row];
            let g = p.extended_decay(grid.gy.point(iy));
            row_r[iy] = row_r[iy].max(r.abs());
            row_h[iy] = row_h[iy].max((r - g).abs());
        }
        let mut table = Table::new(&["y", "decay", "residual_max", "annihilation_max"]);
        for iy in margin..ny - margin {
            let y = grid.gy.point(iy);
            table.push(vec![y, p.extended_decay(y), row_r[iy], row_h[iy]]);
        }
        let interior_max = residual.interior_norm(margin)?;
        let closest = (margin..ny - margin)
            .min_by(|&a, &b| {
                let g = |i| p.extended_decay(grid.gy.point(i)).abs();
                g(a).total_cmp(&g(b))
            })
            .expect("interior is non-empty");

        let mut o = Outcome::default();
        o.output("residual_interior_max", interior_max);
        o.output("min_decay_y", grid.gy.point(closest));
        o.output("min_decay", p.extended_decay(grid.gy.point(closest)));
        o.output("min_decay_annihilation_max", row_h[closest]);
        o.output("dx", grid.gx.dx());
        o.output("dy", grid.gy.dx());
        o.table = Some(table);
        let tol = cfg.tolerance("residual", 1e-3);
        o.at_most("extended-residual", interior_max, "residual", tol);
        Ok(o)
    }
}

struct ConstraintRootCmd;

impl Analysis for ConstraintRootCmd {
    fn name(&self) -> &'static str {
        "constraint-root"
    }

    fn about(&self) -> &'static str {
        "root y* of the volatility martingale constraint inside --bracket"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let p = mg_params(cfg, Some(0.0))?;
        let [lo, hi] = cfg.bracket.ok_or(CliError::Missing("bracket"))?;
        let y_star = solve_constraint_y(&p, lo, hi)?;
        let res = martingale_constraint_residual(&p, y_star)?;
        let rel = if res.scale > 0.0 {
            res.residual.abs() / res.scale
        } else {
            res.residual.abs()
        };

        let mut o = Outcome::default();
        o.output("y_star", y_star);
        o.output("residual", res.residual);
        o.output("residual_scale", res.scale);
        o.output("decay_at_root", p.extended_decay(y_star));
        let tol = cfg.tolerance("root", 1e-10);
        o.at_most("relative-constraint-residual", rel, "root", tol);
        Ok(o)
    }
}

struct SymmetryReportCmd;

impl Analysis for SymmetryReportCmd {
    fn name(&self) -> &'static str {
        "symmetry-report"
    }

    fn about(&self) -> &'static str {
        "commutators of the Hamiltonian with its generators and their action on the vacuum"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let tol_c = cfg.tolerance("commutator", 1e-12);
        let tol_r = cfg.tolerance("ratio", 1e-3);
        let mut o = Outcome::default();
        match cfg.model.unwrap_or(Model::Bs) {
            Model::Bs => {
                let p = bs_params(cfg)?;
                let grid = grid_1d(cfg, (-2.0, 2.0, 401))?;
                let h = build_bs_hamiltonian(&p, grid);
                let vacuum = Field::sample_1d(grid, f64::exp)?;
                let rep = broken_generator_report("p", &h, &BandedOperator::d_dx(grid), &vacuum)?;
                o.output("generators", vec![symmetry_json(&rep)]);
                o.at_most("p-commutator", rep.commutator_norm(), "commutator", tol_c);
                o.at_most(
                    "p-action-ratio",
                    (rep.action_norm_ratio() - 1.0).abs(),
                    "ratio",
                    tol_r,
                );
                o.holds("p-broken", rep.broken());
            }
            Model::Mg => {
                let p = mg_params(cfg, None)?;
                let grid = grid_2d(cfg, (-1.0, 1.0, 101))?;
                let h = build_mg_hamiltonian(&p, grid);
                let extended = Field::sample_2d(grid, |x, y| (x + y).exp())?;
                let standard = Field::sample_2d(grid, |x, _| x.exp())?;
                let px = BandedOperator::d_dx(grid);
                let py = BandedOperator::d_dy(grid);
                let rx = broken_generator_report("p_x", &h, &px, &extended)?;
                let ry = broken_generator_report("p_y", &h, &py, &extended)?;
                let py_standard = py.apply(&standard)?.interior_norm(py.interior_margin())?;

                o.output("generators", vec![symmetry_json(&rx), symmetry_json(&ry)]);
                o.output("p_y_standard_vacuum_norm", py_standard);
                o.at_most("p_x-commutator", rx.commutator_norm(), "commutator", tol_c);
                o.at_most(
                    "p_x-action-ratio",
                    (rx.action_norm_ratio() - 1.0).abs(),
                    "ratio",
                    tol_r,
                );
                o.at_most(
                    "p_y-action-ratio",
                    (ry.action_norm_ratio() - 1.0).abs(),
                    "ratio",
                    tol_r,
                );
                o.at_most("p_y-standard-vacuum", py_standard, "commutator", tol_c);
                o.holds("p_x-broken", rx.broken());
            }
        }
        Ok(o)
    }
}

struct QuarticVacuumCmd;

impl Analysis for QuarticVacuumCmd {
    fn name(&self) -> &'static str {
        "quartic-vacuum"
    }

    fn about(&self) -> &'static str {
        "roots of the quartic fixed-norm condition"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let q = QuarticParams::new(cfg.require(cfg.mu2, "mu2")?, cfg.require(cfg.lam4, "lam4")?)?;
        let sol = quartic_vacuum(&q)?;
        let s = sol.value("S").expect("quartic vacuum reports S");
        let mut table = Table::new(&["value", "admissible"]);
        let mut worst = 0.0f64;
        for root in &sol.roots {
            table.push(vec![root.value, if root.admissible { 1.0 } else { 0.0 }]);
            let s2 = root.value * root.value;
            let scale = q.mu2 * s2 + q.lam4.abs() * s2 * s2;
            let v = quartic_potential(&q, root.value).abs();
            worst = worst.max(if scale > 0.0 { v / scale } else { v });
        }

        let mut o = Outcome::default();
        o.output("S", s);
        o.output("classification", sol.classification.to_string());
        o.output("nontrivial", q.nontrivial_vacuum());
        o.output(
            "roots",
            sol.roots
                .iter()
                .map(|r| json!({"value": r.value, "admissible": r.admissible}))
                .collect::<Vec<_>>(),
        );
        o.table = Some(table);
        let tol = cfg.tolerance("stationarity", STATIONARITY_TOL);
        o.at_most("fixed-norm-condition", worst, "stationarity", tol);
        Ok(o)
    }
}

struct VacuumManifoldCmd;

impl Analysis for VacuumManifoldCmd {
    fn name(&self) -> &'static str {
        "vacuum-manifold"
    }

    fn about(&self) -> &'static str {
        "points (y, x) on the curve e^{x+y} = sqrt(-mu2/lam4)"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let q = QuarticParams::new(cfg.require(cfg.mu2, "mu2")?, cfg.require(cfg.lam4, "lam4")?)?;
        let ys = cfg.ys.as_deref().ok_or(CliError::Missing("ys"))?;
        let points = vacuum_manifold(&q, ys)?;

        let mut table = Table::new(&["y", "x", "s_norm", "price_vol_product"]);
        let mut norm_err = 0.0f64;
        for pt in &points {
            let prod = (pt.x + pt.y).exp();
            norm_err = norm_err.max((prod - pt.s_norm).abs() / pt.s_norm);
            table.push(vec![pt.y, pt.x, pt.s_norm, prod]);
        }
        let slope_err = points
            .windows(2)
            .filter(|w| w[1].y != w[0].y)
            .map(|w| ((w[1].x - w[0].x) / (w[1].y - w[0].y) + 1.0).abs())
            .fold(0.0, f64::max);

        let mut o = Outcome::default();
        o.output("s_norm", q.vacuum_norm().expect("manifold requires a norm"));
        o.output("points", points.len());
        o.table = Some(table);
        let tol = cfg.tolerance("manifold", 1e-12);
        o.at_most("fixed-norm", norm_err, "manifold", tol);
        o.at_most("unit-negative-slope", slope_err, "manifold", tol);
        Ok(o)
    }
}

struct PriceCmd;

impl Analysis for PriceCmd {
    fn name(&self) -> &'static str {
        "price"
    }

    fn about(&self) -> &'static str {
        "European call by evolving the payoff under H_BS"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let p = bs_params(cfg)?;
        let strike = cfg.require(cfg.strike, "strike")?;
        let spot = cfg.require(cfg.spot, "spot")?;
        if !(spot.is_finite() && spot > 0.0) {
            return Err(vacuumlab_core::Error::InvalidInputs("spot must be positive").into());
        }
        let ev = evolution(cfg, 400)?;
        let grid = call_grid(&p, spot, ev.maturity(), cfg.n.unwrap_or(801))?;
        let res = price_european_call(&p, grid, strike, &ev, spot.ln())?;

        let mut table = Table::new(&["x", "spot", "value"]);
        for (x, v) in grid.points().zip(res.values.values()) {
            table.push(vec![x, x.exp(), *v]);
        }
        let values = res.values.values();
        let monotone = values[1..values.len() - 1].windows(2).all(|w| w[1] >= w[0]);

        let mut o = Outcome::default();
        o.output("spot_price", res.spot_price);
        o.output("oracle_price", res.oracle_price);
        o.output("rel_error", res.rel_error);
        o.output("dx", grid.dx());
        o.output("dt", ev.dt());
        o.output("scheme", ev.scheme().name());
        o.table = Some(table);
        let tol = cfg.tolerance("price", 1e-2);
        o.at_most("relative-price-error", res.rel_error, "price", tol);
        o.holds("monotone-in-spot", monotone);
        Ok(o)
    }
}

struct MartingaleCheckCmd;

impl Analysis for MartingaleCheckCmd {
    fn name(&self) -> &'static str {
        "martingale-check"
    }

    fn about(&self) -> &'static str {
        "fixed-point defect of the vacuum under time evolution"
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        let ev = evolution(cfg, 200)?;
        let (deviation, dx) = match cfg.model.unwrap_or(Model::Bs) {
            Model::Bs => {
                let p = bs_params(cfg)?;
                let grid = grid_1d(cfg, (-2.0, 2.0, 401))?;
                let h = build_bs_hamiltonian(&p, grid);
                let vacuum = Field::sample_1d(grid, f64::exp)?;
                (martingale_evolution_check(&h, &vacuum, &ev)?, grid.dx())
            }
            Model::Mg => {
                let p = mg_params(cfg, None)?;
                let grid = grid_2d(cfg, (-1.0, 1.0, 41))?;
                let h = build_mg_hamiltonian(&p, grid);
                let vacuum = Field::sample_2d(grid, |x, y| (x + y).exp())?;
                (martingale_evolution_check(&h, &vacuum, &ev)?, grid.gx.dx())
            }
        };

        let mut o = Outcome::default();
        o.output("deviation", deviation);
        o.output("dx", dx);
        o.output("dt", ev.dt());
        o.output("scheme", ev.scheme().name());
        let tol = cfg.tolerance("martingale", 5e-3);
        o.at_most("vacuum-deviation", deviation, "martingale", tol);
        Ok(o)
    }
}
