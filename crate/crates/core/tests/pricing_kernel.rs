//! Evolution under H_BS against an independent quadrature of the lognormal density.

use vacuumlab_core::pricing::{bs_closed_form, call_grid, price_european_call, EvolutionConfig};
use vacuumlab_core::BsParams;

/// Composite Simpson quadrature of the discounted call payoff against the
/// standard normal density, over `z` in `[z*, z* + 16]`.
fn quadrature_call(s0: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    let vol = sigma * t.sqrt();
    let drift = (r - 0.5 * sigma * sigma) * t;
    let z_star = ((k / s0).ln() - drift) / vol;
    let payoff = |z: f64| {
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        (s0 * (drift + vol * z).exp() - k).max(0.0) * density
    };
    let (a, b, panels) = (z_star, z_star + 16.0, 200_000);
    let h = (b - a) / panels as f64;
    let mut sum = payoff(a) + payoff(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * payoff(a + i as f64 * h);
    }
    (-r * t).exp() * sum * h / 3.0
}

// Frozen from `quadrature_call(100, 100, 0.05, 0.2, 1)`.
const ATM_CALL: f64 = 10.450_583_572_185_565;

#[test]
fn quadrature_oracle_is_frozen() {
    let q = quadrature_call(100.0, 100.0, 0.05, 0.2, 1.0);
    assert!((q - ATM_CALL).abs() < 1e-9, "{q:.15}");
}

#[test]
fn closed_form_matches_quadrature() {
    let p = BsParams::new(0.05, 0.2).unwrap();
    let cf = bs_closed_form(100.0, 100.0, &p, 1.0).unwrap();
    assert!((cf - ATM_CALL).abs() < 1e-5, "{cf}");
    for (s0, k, r, sigma, t) in [(90.0, 100.0, 0.02, 0.3, 0.5), (120.0, 80.0, 0.1, 0.15, 2.0)] {
        let p = BsParams::new(r, sigma).unwrap();
        let cf = bs_closed_form(s0, k, &p, t).unwrap();
        let q = quadrature_call(s0, k, r, sigma, t);
        assert!((cf - q).abs() < 1e-5 * s0, "{cf} vs {q}");
    }
}

fn price(n: usize, steps: usize, scheme: &str) -> (f64, Vec<f64>) {
    let p = BsParams::new(0.05, 0.2).unwrap();
    let grid = call_grid(&p, 100.0, 1.0, n).unwrap();
    let cfg = EvolutionConfig::named(1.0, steps, scheme).unwrap();
    let res = price_european_call(&p, grid, 100.0, &cfg, 100f64.ln()).unwrap();
    (res.spot_price, res.values.into_values())
}

fn rel_error(v: f64) -> f64 {
    (v - ATM_CALL).abs() / ATM_CALL
}

#[test]
fn call_price_matches_quadrature_and_converges() {
    let (coarse, _) = price(801, 400, "crank-nicolson");
    let (fine, _) = price(1601, 800, "crank-nicolson");
    assert!(rel_error(coarse) <= 1e-2, "{coarse}");
    assert!(rel_error(coarse) / rel_error(fine) >= 2.0);
}

#[test]
fn implicit_euler_converges_at_first_order() {
    let (coarse, _) = price(401, 200, "implicit-euler");
    let (fine, _) = price(801, 400, "implicit-euler");
    assert!(rel_error(coarse) <= 1e-2);
    let ratio = rel_error(coarse) / rel_error(fine);
    assert!((1.6..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn call_values_are_monotone_in_spot() {
    for scheme in ["crank-nicolson", "implicit-euler"] {
        let (_, values) = price(801, 400, scheme);
        let interior = &values[3..values.len() - 3];
        for w in interior.windows(2) {
            assert!(w[1] >= w[0], "{scheme}: {} < {}", w[1], w[0]);
        }
    }
}
