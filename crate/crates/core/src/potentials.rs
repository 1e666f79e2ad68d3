//! Field-space potentials and their vacua.
//!
//! All potentials are the second-order truncations of the series
//! `e^x = sum phi^n`: the Black-Scholes quadratic in `phi`, the
//! Merton-Garman polynomial in `(phi_x, phi_y)`, and the quartic
//! extension `mu2 S^2 + lam4 S^4` whose zero set fixes the vacuum norm.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::params::{BsParams, MgParams};

/// Relative size below which a drift coefficient is treated as vanishing.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// Required size of both partial derivatives at an MG stationary point.
pub const STATIONARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VacuumKind {
    BsQuadratic,
    MgStationary,
    QuarticFixedNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Trivial,
    NonTrivial,
    /// `r = e^y / 2`: `phi_x = 0` with arbitrary volatility.
    PriceTrivial,
    /// `A(y) = 0`: `phi_y = 0`, constant volatility for any price.
    VolTrivial,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Trivial => "Trivial",
            Classification::NonTrivial => "NonTrivial",
            Classification::PriceTrivial => "PriceTrivial",
            Classification::VolTrivial => "VolTrivial",
        })
    }
}

impl fmt::Display for VacuumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VacuumKind::BsQuadratic => "BsQuadratic",
            VacuumKind::MgStationary => "MgStationary",
            VacuumKind::QuarticFixedNorm => "QuarticFixedNorm",
        })
    }
}

/// One root of the fixed-norm condition. Only `S > 0` is a price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateRoot {
    pub value: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumSolution {
    pub kind: VacuumKind,
    pub values: BTreeMap<&'static str, f64>,
    pub classification: Classification,
    /// Every root for the quartic vacuum; empty otherwise.
    pub roots: Vec<CandidateRoot>,
}

impl VacuumSolution {
    fn new(
        kind: VacuumKind,
        values: impl IntoIterator<Item = (&'static str, f64)>,
        classification: Classification,
    ) -> Self {
        let values: BTreeMap<_, _> = values.into_iter().collect();
        debug_assert!(values.values().all(|v| v.is_finite()));
        Self {
            kind,
            values,
            classification,
            roots: Vec::new(),
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// `V(phi) = 2 (sigma^2/2 - r) phi + r phi^2`.
pub fn bs_potential(p: &BsParams, phi: f64) -> f64 {
    2.0 * p.drift() * phi + p.r() * phi * phi
}

/// `dV/dphi = 2 (sigma^2/2 - r) + 2 r phi`.
pub fn bs_potential_slope(p: &BsParams, phi: f64) -> f64 {
    2.0 * p.drift() + 2.0 * p.r() * phi
}

/// Minimum of the quadratic potential, `phi_vac = 1 - sigma^2 / (2r)`.
pub fn bs_vacuum(p: &BsParams) -> Result<VacuumSolution> {
    if p.r() == 0.0 {
        return Err(Error::ZeroRate);
    }
    let phi = 1.0 - p.sigma2() / (2.0 * p.r());
    let class = if phi == 0.0 {
        Classification::Trivial
    } else {
        Classification::NonTrivial
    };
    Ok(VacuumSolution::new(
        VacuumKind::BsQuadratic,
        [("phi", phi)],
        class,
    ))
}

/// `V = -2B phi_x phi_y^2 - 2A phi_x^2 phi_y + r phi_x^2 phi_y^2` with
/// `B = r - e^y/2` and `A = lambda e^{-y} + mu - (zeta^2/2) e^{2y(alpha-1)}`.
pub fn mg_potential(p: &MgParams, y: f64, phi_x: f64, phi_y: f64) -> f64 {
    let (a, b) = (p.vol_drift(y), p.price_drift(y));
    -2.0 * b * phi_x * phi_y * phi_y - 2.0 * a * phi_x * phi_x * phi_y
        + p.r * phi_x * phi_x * phi_y * phi_y
}

/// `(dV/dphi_x, dV/dphi_y)`.
pub fn mg_potential_gradient(p: &MgParams, y: f64, phi_x: f64, phi_y: f64) -> [f64; 2] {
    let (a, b, r) = (p.vol_drift(y), p.price_drift(y), p.r);
    [
        -2.0 * b * phi_y * phi_y - 4.0 * a * phi_x * phi_y + 2.0 * r * phi_x * phi_y * phi_y,
        -4.0 * b * phi_x * phi_y - 2.0 * a * phi_x * phi_x + 2.0 * r * phi_x * phi_x * phi_y,
    ]
}

/// Stationary point of [`mg_potential`] at fixed `y`.
///
/// Away from the triviality conditions the non-trivial stationary point is
/// found by damped Newton iteration and checked against both partial
/// derivatives. It satisfies `phi_y = (A/B) phi_x`. The point is not
/// claimed to be a global minimum; the cubic terms leave the potential
/// unbounded below in some directions.
pub fn mg_vacuum(p: &MgParams, y: f64) -> Result<VacuumSolution> {
    if p.r == 0.0 {
        return Err(Error::ZeroRate);
    }
    if !y.is_finite() {
        return Err(Error::InvalidParameter {
            name: "y",
            value: y,
            reason: "must be finite",
        });
    }
    let a = p.vol_drift(y);
    let b = p.price_drift(y);
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("MG drift coefficients"));
    }
    let a_zero = a.abs() <= DEGENERACY_RTOL * vol_drift_scale(p, y);
    let b_zero = b.abs() <= DEGENERACY_RTOL * (p.r + 0.5 * y.exp());

    // On the flat directions the representative point is the limit of the
    // generic solution (3B/r, 3A/r).
    let (phi_x, phi_y, class) = match (b_zero, a_zero) {
        (true, true) => (0.0, 0.0, Classification::Trivial),
        (true, false) => (0.0, 3.0 * a / p.r, Classification::PriceTrivial),
        (false, true) => (3.0 * b / p.r, 0.0, Classification::VolTrivial),
        (false, false) => {
            let (fx, fy) = newton_stationary(a, b, p.r)?;
            (fx, fy, Classification::NonTrivial)
        }
    };

    let grad = mg_potential_gradient(p, y, phi_x, phi_y);
    if grad.iter().any(|g| g.is_nan() || g.abs() > STATIONARITY_TOL) {
        return Err(Error::NoStationaryPoint);
    }

    let mut values = vec![
        ("A", a),
        ("B", b),
        ("phi_x", phi_x),
        ("phi_y", phi_y),
        ("S", phi_x * phi_y),
    ];
    if !b_zero {
        values.push(("ratio", a / b));
    }
    Ok(VacuumSolution::new(VacuumKind::MgStationary, values, class))
}

fn vol_drift_scale(p: &MgParams, y: f64) -> f64 {
    p.lambda.abs() * (-y).exp() + p.mu.abs() + 0.5 * p.vol_diffusion(y)
}

/// Newton iteration on the stationarity conditions with the trivial
/// factors `phi_y` and `phi_x` divided out:
///
/// `-2B phi_y - 4A phi_x + 2r phi_x phi_y = 0`
/// `-4B phi_y - 2A phi_x + 2r phi_x phi_y = 0`
///
/// Starts at `(1, 1)`; falls back to a coarse grid of starts scaled by
/// `max(|A|, |B|) / r`. Roots at the origin are rejected.
fn newton_stationary(a: f64, b: f64, r: f64) -> Result<(f64, f64)> {
    let residual = |x: f64, y: f64| {
        [
            -2.0 * b * y - 4.0 * a * x + 2.0 * r * x * y,
            -4.0 * b * y - 2.0 * a * x + 2.0 * r * x * y,
        ]
    };
    let norm = |f: [f64; 2]| f[0].hypot(f[1]);
    let length = a.abs().max(b.abs()) / r;

    let solve_from = |mut x: f64, mut y: f64| -> Option<(f64, f64)> {
        let mut f = residual(x, y);
        for _ in 0..100 {
            let j = [
                [-4.0 * a + 2.0 * r * y, -2.0 * b + 2.0 * r * x],
                [-2.0 * a + 2.0 * r * y, -4.0 * b + 2.0 * r * x],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dx = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
            let dy = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;

            let current = norm(f);
            let mut t = 1.0;
            let (mut nx, mut ny, mut nf) = (x + dx, y + dy, residual(x + dx, y + dy));
            while norm(nf) >= current && t > 1e-6 {
                t *= 0.5;
                nx = x + t * dx;
                ny = y + t * dy;
                nf = residual(nx, ny);
            }
            let moved = (nx - x).abs().max((ny - y).abs());
            x = nx;
            y = ny;
            f = nf;
            if !(x.is_finite() && y.is_finite()) {
                return None;
            }
            if norm(f) == 0.0 || moved <= 4.0 * f64::EPSILON * x.abs().max(y.abs()) {
                break;
            }
        }
        let tiny = 1e-6 * length;
        (x.abs() > tiny && y.abs() > tiny).then_some((x, y))
    };

    if let Some(root) = solve_from(1.0, 1.0) {
        return Ok(root);
    }
    let steps = [-10.0, -3.0, -1.0, -0.3, 0.3, 1.0, 3.0, 10.0];
    for sx in steps {
        for sy in steps {
            if let Some(root) = solve_from(sx * length, sy * length) {
                return Ok(root);
            }
        }
    }
    Err(Error::NoStationaryPoint)
}

/// Quartic extension `mu2 S^2 + lam4 S^4`.
///
/// `mu2` and `lam4` are named apart from the MG drift parameters `mu` and
/// `lambda`. `mu2` is a squared mass and must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticParams {
    pub mu2: f64,
    pub lam4: f64,
}

impl QuarticParams {
    pub fn new(mu2: f64, lam4: f64) -> Result<Self> {
        if !(mu2.is_finite() && mu2 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu2",
                value: mu2,
                reason: "must be finite and non-negative",
            });
        }
        if !lam4.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lam4",
                value: lam4,
                reason: "must be finite",
            });
        }
        Ok(Self { mu2, lam4 })
    }

    pub fn nontrivial_vacuum(&self) -> bool {
        self.lam4 < 0.0
    }

    /// `sqrt(-mu2 / lam4)`, when the flag holds and `mu2 > 0`.
    pub fn vacuum_norm(&self) -> Option<f64> {
        (self.nontrivial_vacuum() && self.mu2 > 0.0).then(|| (-self.mu2 / self.lam4).sqrt())
    }
}

pub fn quartic_potential(q: &QuarticParams, s: f64) -> f64 {
    let s2 = s * s;
    q.mu2 * s2 + q.lam4 * s2 * s2
}

/// Vacuum of the fixed-norm condition `mu2 S^2 + lam4 S^4 = 0`.
pub fn quartic_vacuum(q: &QuarticParams) -> Result<VacuumSolution> {
    if q.lam4 == 0.0 && q.mu2 != 0.0 {
        return Err(Error::DegeneratePotential { mu2: q.mu2 });
    }
    let mut sol = match q.vacuum_norm() {
        Some(s) => {
            let mut sol = VacuumSolution::new(
                VacuumKind::QuarticFixedNorm,
                [("S", s)],
                Classification::NonTrivial,
            );
            sol.roots = vec![
                CandidateRoot {
                    value: s,
                    admissible: true,
                },
                CandidateRoot {
                    value: -s,
                    admissible: false,
                },
            ];
            sol
        }
        None => VacuumSolution::new(
            VacuumKind::QuarticFixedNorm,
            [("S", 0.0)],
            Classification::Trivial,
        ),
    };
    if sol.roots.is_empty() {
        sol.roots.push(CandidateRoot {
            value: 0.0,
            admissible: true,
        });
    }
    Ok(sol)
}

/// Point on the price-volatility vacuum manifold `e^{x+y} = sqrt(-mu2/lam4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumManifoldPoint {
    pub y: f64,
    pub x: f64,
    pub s_norm: f64,
}

/// Positive branch `x = ln sqrt(-mu2/lam4) - y` for each `y`.
pub fn vacuum_manifold(q: &QuarticParams, ys: &[f64]) -> Result<Vec<VacuumManifoldPoint>> {
    let s_norm = q.vacuum_norm().ok_or(Error::NontrivialVacuumRequired)?;
    let log_norm = s_norm.ln();
    ys.iter()
        .map(|&y| {
            if !y.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "y",
                    value: y,
                    reason: "must be finite",
                });
            }
            Ok(VacuumManifoldPoint {
                y,
                x: log_norm - y,
                s_norm,
            })
        })
        .collect()
}

/// `A(y)`: zero when `L_x` commutes with `H_MG` (the `p_y` drift vanishes).
pub fn lx_symmetry_residual(p: &MgParams, y: f64) -> f64 {
    p.vol_drift(y)
}

/// `r - e^y/2`: zero when `L_y` commutes with `H_MG` (the `p_x` drift vanishes).
pub fn ly_symmetry_residual(p: &MgParams, y: f64) -> f64 {
    p.price_drift(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bs_potential_examples() {
        let p = BsParams::new(0.05, 0.2).unwrap();
        assert_eq!(bs_potential(&p, 0.0), 0.0);
        assert!((bs_potential(&p, 1.0) + 0.01).abs() < 1e-15);
        let q = BsParams::from_variance(0.05, 0.1).unwrap();
        for phi in [-1.5, 0.3, 2.0] {
            assert_eq!(bs_potential(&q, phi), 0.05 * phi * phi);
        }
    }

    #[test]
    fn bs_vacuum_examples() {
        let p = BsParams::from_variance(0.025, 0.05).unwrap();
        let v = bs_vacuum(&p).unwrap();
        assert_eq!(v.value("phi"), Some(0.0));
        assert_eq!(v.classification, Classification::Trivial);

        let p = BsParams::from_variance(0.05, 1e-12).unwrap();
        assert!((bs_vacuum(&p).unwrap().value("phi").unwrap() - 1.0).abs() < 1e-10);

        let p = BsParams::from_variance(0.05, 0.05).unwrap();
        let v = bs_vacuum(&p).unwrap();
        let phi = v.value("phi").unwrap();
        assert!((phi - 0.5).abs() < 1e-15);
        assert_eq!(v.classification, Classification::NonTrivial);
        assert!(bs_potential_slope(&p, phi).abs() <= 1e-12);

        let zero = BsParams::from_variance(0.0, 0.05).unwrap();
        assert_eq!(bs_vacuum(&zero), Err(Error::ZeroRate));
    }

    fn documented_mg() -> (MgParams, f64) {
        (
            MgParams::new(0.1, 0.01, 0.02, 0.1, 1.0, 0.0).unwrap(),
            0.1f64.ln(),
        )
    }

    #[test]
    fn mg_potential_examples() {
        let (p, y) = documented_mg();
        assert!((mg_potential(&p, y, 1.0, 1.0) + 0.23).abs() < 1e-14);
        assert_eq!(mg_potential(&p, y, 0.0, 3.0), 0.0);
        assert_eq!(mg_potential(&p, y, 3.0, 0.0), 0.0);

        // cubic terms scale by t^3, the quartic term by t^4
        let (a, b) = (p.vol_drift(y), p.price_drift(y));
        let (fx, fy, t) = (0.7, -1.3, 2.0);
        let cubic = -2.0 * b * fx * fy * fy - 2.0 * a * fx * fx * fy;
        let quartic = p.r * fx * fx * fy * fy;
        let scaled = mg_potential(&p, y, t * fx, t * fy);
        assert!((scaled - (t.powi(3) * cubic + t.powi(4) * quartic)).abs() < 1e-13);
    }

    #[test]
    fn mg_vacuum_documented_example() {
        let (p, y) = documented_mg();
        let v = mg_vacuum(&p, y).unwrap();
        assert_eq!(v.classification, Classification::NonTrivial);
        assert!((v.value("ratio").unwrap() - 2.3).abs() <= 1e-12);
        let (fx, fy) = (v.value("phi_x").unwrap(), v.value("phi_y").unwrap());
        // closed form of the non-trivial solution: (3B/r, 3A/r)
        assert!((fx - 1.5).abs() < 1e-12, "{fx}");
        assert!((fy - 3.45).abs() < 1e-12, "{fy}");
        assert!((fy - 2.3 * fx).abs() < 1e-12);
        for g in mg_potential_gradient(&p, y, fx, fy) {
            assert!(g.abs() <= STATIONARITY_TOL);
        }
    }

    #[test]
    fn mg_triviality() {
        let r: f64 = 0.05;
        let y = (2.0 * r).ln();
        let p = MgParams::new(r, 0.01, 0.02, 0.1, 1.0, 0.0).unwrap();
        assert!(ly_symmetry_residual(&p, y).abs() <= 1e-15);
        assert_eq!(
            mg_vacuum(&p, y).unwrap().classification,
            Classification::PriceTrivial
        );

        let (y, zeta, alpha, mu) = (-0.4f64, 0.3, 1.2, 0.01);
        let lambda = y.exp() * (0.5 * zeta * zeta * (2.0 * y * (alpha - 1.0)).exp() - mu);
        let q = MgParams::new(0.1, lambda, mu, zeta, alpha, 0.2).unwrap();
        assert!(lx_symmetry_residual(&q, y).abs() <= 1e-15);
        let v = mg_vacuum(&q, y).unwrap();
        assert_eq!(v.classification, Classification::VolTrivial);
        assert_eq!(v.value("phi_y"), Some(0.0));
        assert!(v.value("phi_x").unwrap() != 0.0);

        let none = MgParams::new(0.0, 0.01, 0.02, 0.1, 1.0, 0.0).unwrap();
        assert_eq!(mg_vacuum(&none, 0.0), Err(Error::ZeroRate));
    }

    #[test]
    fn symmetry_residual_examples() {
        let p = MgParams::new(0.05, 0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(ly_symmetry_residual(&p, 0.1f64.ln()).abs() <= 1e-15);
        let q = MgParams::new(0.05, 0.0, 0.005, 0.1, 1.0, 0.0).unwrap();
        assert!(lx_symmetry_residual(&q, 0.0).abs() <= 1e-15);
        let s = MgParams::new(0.05, 0.0, 0.37, 0.0, 1.7, 0.0).unwrap();
        for y in [-3.0, 0.0, 2.0] {
            assert_eq!(lx_symmetry_residual(&s, y), 0.37);
        }
    }

    #[test]
    fn quartic_examples() {
        let q = QuarticParams::new(0.04, -0.01).unwrap();
        let v = quartic_vacuum(&q).unwrap();
        assert_eq!(v.classification, Classification::NonTrivial);
        assert_eq!(v.value("S"), Some(2.0));
        assert_eq!(v.roots.len(), 2);
        assert!(v.roots[0].admissible && v.roots[0].value == 2.0);
        assert!(!v.roots[1].admissible && v.roots[1].value == -2.0);

        let v = quartic_vacuum(&QuarticParams::new(0.04, 0.01).unwrap()).unwrap();
        assert_eq!(v.value("S"), Some(0.0));
        assert_eq!(v.classification, Classification::Trivial);

        for lam4 in [-0.3, 0.3, 0.0] {
            let v = quartic_vacuum(&QuarticParams::new(0.0, lam4).unwrap()).unwrap();
            assert_eq!(v.value("S"), Some(0.0));
        }
        assert_eq!(
            quartic_vacuum(&QuarticParams::new(0.04, 0.0).unwrap()),
            Err(Error::DegeneratePotential { mu2: 0.04 })
        );
        assert!(QuarticParams::new(-0.04, -0.01).is_err());
    }

    #[test]
    fn manifold_examples() {
        let q = QuarticParams::new(0.04, -0.01).unwrap();
        let pts = vacuum_manifold(&q, &[2f64.ln(), 0.0]).unwrap();
        assert!(pts[0].x.abs() < 1e-15);
        assert!((pts[1].x - 2f64.ln()).abs() < 1e-15);
        assert_eq!(
            vacuum_manifold(&QuarticParams::new(0.04, 0.01).unwrap(), &[0.0]),
            Err(Error::NontrivialVacuumRequired)
        );
    }

    proptest! {
        #[test]
        fn bs_vacuum_is_stationary(r in 1e-3f64..0.5, s2 in 1e-4f64..1.0) {
            let p = BsParams::from_variance(r, s2).unwrap();
            let phi = bs_vacuum(&p).unwrap().value("phi").unwrap();
            prop_assert!(bs_potential_slope(&p, phi).abs() <= 1e-12);
        }

        #[test]
        fn quartic_roots_zero_the_potential(mu2 in 1e-4f64..10.0, lam4 in -10.0f64..-1e-4) {
            let q = QuarticParams::new(mu2, lam4).unwrap();
            for root in quartic_vacuum(&q).unwrap().roots {
                let scale = mu2 * root.value * root.value;
                prop_assert!(quartic_potential(&q, root.value).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn manifold_is_a_flat_line_of_slope_minus_one(
            mu2 in 1e-3f64..5.0,
            lam4 in -5.0f64..-1e-3,
            ys in proptest::collection::vec(-5.0f64..5.0, 2..8),
        ) {
            let q = QuarticParams::new(mu2, lam4).unwrap();
            let pts = vacuum_manifold(&q, &ys).unwrap();
            let v0 = quartic_potential(&q, (pts[0].x + pts[0].y).exp());
            for w in pts.windows(2) {
                if w[0].y != w[1].y {
                    let slope = (w[1].x - w[0].x) / (w[1].y - w[0].y);
                    prop_assert!((slope + 1.0).abs() <= 1e-12);
                }
            }
            for pt in &pts {
                let s = (pt.x + pt.y).exp();
                prop_assert!((s - pt.s_norm).abs() <= 1e-12 * pt.s_norm);
                let v = quartic_potential(&q, s);
                prop_assert!((v - v0).abs() <= 1e-12 * mu2 * pt.s_norm * pt.s_norm);
            }
        }

        #[test]
        fn mg_vacuum_satisfies_ratio_relation(
            r in 0.02f64..0.2,
            y in -3.0f64..-0.5,
            lambda in 0.0f64..0.02,
            mu in -0.05f64..0.05,
            zeta in 0.0f64..0.3,
            alpha in 0.5f64..1.5,
        ) {
            let p = MgParams::new(r, lambda, mu, zeta, alpha, 0.0).unwrap();
            let (a, b) = (p.vol_drift(y), p.price_drift(y));
            prop_assume!(b.abs() > 1e-3 && a.abs() > 1e-3);
            let v = mg_vacuum(&p, y).unwrap();
            let (fx, fy) = (v.value("phi_x").unwrap(), v.value("phi_y").unwrap());
            prop_assert!((b * fy - a * fx).abs() <= 1e-10);
            prop_assert!((fx - 3.0 * b / r).abs() <= 1e-9 * (1.0 + fx.abs()));
            prop_assert!((fy - 3.0 * a / r).abs() <= 1e-9 * (1.0 + fy.abs()));
        }
    }
}
