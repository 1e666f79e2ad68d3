use proptest::prelude::*;
use vacuumlab_core::operators::{build_mg_hamiltonian, commutator};
use vacuumlab_core::{BandedOperator, Field, Grid1D, Grid2D, MgParams};

fn grid() -> Grid2D {
    Grid2D::new(
        Grid1D::new(-1.0, 1.0, 17).unwrap(),
        Grid1D::new(-0.5, 0.5, 13).unwrap(),
    )
}

proptest! {
    #[test]
    fn hamiltonian_is_linear(
        r in 0.0f64..0.2,
        lambda in -1.0f64..1.0,
        zeta in 0.0f64..1.0,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        kx in -2.0f64..2.0,
    ) {
        let g = grid();
        let h = build_mg_hamiltonian(&MgParams::new(r, lambda, 0.1, zeta, 0.8, 0.3).unwrap(), g);
        let f = Field::sample_2d(g, |x, y| (kx * x).sin() + y * y).unwrap();
        let u = Field::sample_2d(g, |x, y| (x - y).exp()).unwrap();
        let lhs = h.apply(&f.axpby(a, &u, b).unwrap()).unwrap();
        let rhs = h.apply(&f).unwrap().axpby(a, &h.apply(&u).unwrap(), b).unwrap();
        for (l, r) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn commutator_is_antisymmetric(c in -2.0f64..2.0) {
        let g = grid();
        let a = BandedOperator::d2_dx2(g).add(&BandedOperator::d_dy(g).scale(c)).unwrap();
        let b = BandedOperator::d_dx(g);
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        let f = Field::sample_2d(g, |x, y| (x * y).cos() + x).unwrap();
        let (u, v) = (ab.apply(&f).unwrap(), ba.apply(&f).unwrap());
        for (p, q) in u.values().iter().zip(v.values()) {
            prop_assert!((p + q).abs() <= 1e-9 * (1.0 + p.abs()));
        }
    }
}

#[test]
fn composition_matches_sequential_application() {
    let g = grid();
    let dx = BandedOperator::d_dx(g);
    let dy = BandedOperator::d_dy(g);
    let f = Field::sample_2d(g, |x, y| (x + 2.0 * y).sin()).unwrap();
    let composed = dx.compose(&dy).unwrap().apply(&f).unwrap();
    let sequential = dx.apply(&dy.apply(&f).unwrap()).unwrap();
    for (a, b) in composed.values().iter().zip(sequential.values()) {
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}
