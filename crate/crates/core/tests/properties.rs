use std::sync::Arc;

use proptest::prelude::*;
use wentropy::entropy::boltzmann_entropy;
use wentropy::flows::{make_canonical, make_shrinking_sphere, CanonicalKind, FlowClass, FlowFamily};
use wentropy::heat::{HeatState, Stepper};
use wentropy::space::build_operators;
use wentropy::transport::wasserstein2;
use wentropy::verify::refinement_order;
use wentropy::Dim;

const CELLS: usize = 64;

fn family(which: usize) -> FlowFamily<f64> {
    match which % 5 {
        0 => make_canonical(CanonicalKind::FlatCircle { length: 3.0 }, CELLS),
        1 => make_canonical(CanonicalKind::OuLine { a: -4.0, b: 4.0 }, CELLS),
        2 => make_canonical(CanonicalKind::Cone { n_dim: 2.5, radius: 3.0 }, CELLS),
        3 => make_canonical(CanonicalKind::WeightedSphere { n: 3 }, CELLS),
        _ => make_shrinking_sphere(2, 0.7, CELLS),
    }
    .unwrap()
}

fn positive() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..5.0, CELLS)
}

fn signed() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, CELLS)
}

fn dim() -> impl Strategy<Value = Dim<f64>> {
    prop_oneof![(1.0f64..20.0).prop_map(Dim::Finite), Just(Dim::Infinite)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crank_nicolson_conserves_mass(which in 0usize..5, u in positive(), dt in 1e-4f64..0.05) {
        let flow = Arc::new(family(which));
        let geom = flow.geometry_at(0.0).unwrap();
        let before = geom.integrate(&u);
        let mut stepper = Stepper::new(flow.clone());
        let v = stepper.step(&u, 0.0, dt).unwrap();
        let after = flow.geometry_at(dt).unwrap().integrate(&v);
        prop_assert!((after - before).abs() <= 1e-11 * before);
    }

    #[test]
    fn backward_euler_keeps_the_range(which in 0usize..4, u in positive(), dt in 1e-4f64..1.0) {
        let flow = Arc::new(family(which));
        let v = Stepper::new(flow).implicit_step(&u, 0.0, dt).unwrap();
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in v {
            prop_assert!(x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn carre_du_champ_is_symmetric_and_nonnegative(which in 0usize..5, f in signed(), g in signed()) {
        let geom = family(which).geometry_at(0.0).unwrap();
        let ops = build_operators(&geom);
        let (fg, gf) = (ops.gamma(&f, &g), ops.gamma(&g, &f));
        for (a, b) in fg.iter().zip(&gf) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        prop_assert!(ops.gamma(&f, &f).iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn generator_is_self_adjoint(which in 0usize..5, f in signed(), g in signed()) {
        let geom = family(which).geometry_at(0.0).unwrap();
        let ops = build_operators(&geom);
        let a = ops.inner(&ops.apply_l(&f), &g);
        let b = ops.inner(&f, &ops.apply_l(&g));
        let c = -ops.dirichlet(&f, &g);
        let scale = 1.0 + a.abs();
        prop_assert!((a - b).abs() <= 1e-9 * scale);
        prop_assert!((a - c).abs() <= 1e-9 * scale);
    }

    #[test]
    fn entropy_is_at_most_log_volume(which in 0usize..4, u in positive()) {
        let geom = family(which).geometry_at(0.0).unwrap();
        let state = HeatState::normalized(0.0, u, &geom).unwrap();
        prop_assert!(boltzmann_entropy(&state, &geom) <= geom.total_measure().ln() + 1e-12);
    }

    #[test]
    fn wasserstein_is_a_metric(which in 0usize..4, a in positive(), b in positive(), c in positive()) {
        let geom = family(which).geometry_at(0.0).unwrap();
        let ab = wasserstein2(&geom, &a, &b).unwrap();
        let ba = wasserstein2(&geom, &b, &a).unwrap();
        let bc = wasserstein2(&geom, &b, &c).unwrap();
        let ac = wasserstein2(&geom, &a, &c).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(wasserstein2(&geom, &a, &a).unwrap() <= 1e-7);
    }

    #[test]
    fn class_implication_is_monotone(k in -2.0f64..2.0, n in dim(), dk in 0.0f64..2.0, dn in 0.0f64..5.0) {
        let class = FlowClass::new(k, n);
        prop_assert!(class.implies(k, n));
        prop_assert!(class.implies(k - dk, n));
        let wider = match n {
            Dim::Finite(x) => Dim::Finite(x + dn),
            Dim::Infinite => Dim::Infinite,
        };
        prop_assert!(class.implies(k, wider));
        prop_assert!(class.implies(k - dk, Dim::Infinite));
    }

    #[test]
    fn refinement_order_recovers_the_exponent(c in 1e-6f64..1.0, p in 0.5f64..4.0) {
        let order = refinement_order(c * 2f64.powf(p), c).unwrap();
        prop_assert!((order - p).abs() <= 1e-10);
    }

    #[test]
    fn single_precision_tracks_double(which in 0usize..4, u in positive(), dt in 1e-3f64..0.05) {
        let f64_flow = Arc::new(family(which));
        let f32_flow: Arc<FlowFamily<f32>> = Arc::new(match which % 4 {
            0 => make_canonical(CanonicalKind::FlatCircle { length: 3.0f32 }, CELLS),
            1 => make_canonical(CanonicalKind::OuLine { a: -4.0f32, b: 4.0 }, CELLS),
            2 => make_canonical(CanonicalKind::Cone { n_dim: 2.5f32, radius: 3.0 }, CELLS),
            _ => make_canonical(CanonicalKind::WeightedSphere { n: 3 }, CELLS),
        }.unwrap());
        let u32: Vec<f32> = u.iter().map(|x| *x as f32).collect();
        let a = Stepper::new(f64_flow).step(&u, 0.0, dt).unwrap();
        let b = Stepper::new(f32_flow).step(&u32, 0.0, dt as f32).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - *y as f64).abs() <= 1e-3 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn refinement_order_needs_positive_inputs() {
    assert!(refinement_order(0.0f64, 1.0).is_none());
    assert!(refinement_order(1.0f64, -1.0).is_none());
}
