//! Structural properties of the finite-volume update.

use ader_core::models::{euler_system, leveque_yee_system, linear_system, Euler, PrimitiveState};
use ader_core::reconstruction::{Boundary, CellField, WenoParams, WenoReconstructor};
use ader_core::scheme::{max_wave_speed, project_initial, rusanov_flux, Scheme, SchemeConfig};
use ader_core::{BalanceLaw, State};
use proptest::prelude::*;
use std::f64::consts::PI;

fn smooth_euler_field(euler: &Euler, n: usize) -> CellField<3> {
    project_initial(n, 0.0, 1.0, Boundary::Periodic, |x| {
        euler
            .primitive_to_conserved(&PrimitiveState::new(1.0 + 0.2 * (2.0 * PI * x).sin(), 1.0, 2.0))
            .unwrap()
    })
    .unwrap()
}

#[test]
fn periodic_zero_source_runs_conserve_totals() {
    let euler = euler_system(1.4).unwrap();
    for order in 2..=5 {
        let scheme = Scheme::new(&euler, SchemeConfig::with_order(order, 0.9)).unwrap();
        let field = smooth_euler_field(&euler, 32);
        let before = field.total() * field.dx;
        let out = scheme.run(field, 0.25).unwrap();
        let after = out.field.total() * out.field.dx;
        let drift = (after - before).amax();
        assert!(drift < 1e-12, "order {order}: drift {drift:e} over {} steps", out.steps);
    }
}

#[test]
fn every_step_conserves_totals() {
    let euler = euler_system(1.4).unwrap();
    let scheme = Scheme::new(&euler, SchemeConfig::with_order(4, 0.9)).unwrap();
    let mut field = smooth_euler_field(&euler, 24);
    let dt = 0.9 * field.dx / max_wave_speed(&field, &euler);
    for _ in 0..10 {
        let before = field.total() * field.dx;
        field = scheme.step(&field, dt).unwrap().0;
        let after = field.total() * field.dx;
        assert!((after - before).amax() < 1e-12);
    }
}

fn assert_fixed_point<const N: usize, S: BalanceLaw<N>>(system: &S, q: State<N>, boundary: Boundary, label: &str) {
    for order in 2..=5 {
        let scheme = Scheme::new(system, SchemeConfig::with_order(order, 0.5)).unwrap();
        let mut field = CellField::new(0.0, 0.05, vec![q; 20], boundary).unwrap();
        let dt = 0.5 * field.dx / max_wave_speed(&field, system);
        for _ in 0..5 {
            field = scheme.step(&field, dt).unwrap().0;
        }
        let dev = field.averages.iter().map(|v| (v - q).amax()).fold(0.0, f64::max);
        assert!(dev < 1e-14, "{label}, order {order}: deviation {dev:e}");
    }
}

#[test]
fn equilibria_are_fixed_points() {
    let stiff = leveque_yee_system(-10000.0);
    for v in [0.0, 0.5, 1.0] {
        assert_fixed_point(&stiff, State::<1>::new(v), Boundary::Transmissive, &format!("q = {v}"));
    }
    let linear = linear_system(1.0, -1.0);
    assert_fixed_point(&linear, State::<2>::zeros(), Boundary::Periodic, "linear rest state");
    let euler = euler_system(1.4).unwrap();
    let q = euler.primitive_to_conserved(&PrimitiveState::new(1.3, -0.6, 0.8)).unwrap();
    assert_fixed_point(&euler, q, Boundary::Periodic, "uniform Euler flow");
    assert_fixed_point(&euler, q, Boundary::Transmissive, "uniform Euler flow, transmissive");
}

#[test]
fn euler_wave_speed_of_smooth_field() {
    let euler = euler_system(1.4).unwrap();
    let field = smooth_euler_field(&euler, 50);
    let expected = field
        .averages
        .iter()
        .map(|q| {
            let w = euler.conserved_to_primitive(q).unwrap();
            w.u.abs() + (1.4 * w.p / w.rho).sqrt()
        })
        .fold(0.0, f64::max);
    assert!((max_wave_speed(&field, &euler) - expected).abs() < 1e-14);
    // the densest cell is slowest, the lightest one sets the bound
    assert!(expected > 1.0 + (2.8f64 / 1.2).sqrt() - 1e-3);
}

#[test]
fn single_second_order_step_error_scales_with_step_squared() {
    let sys = linear_system(1.0, -1.0);
    let mut errors = Vec::new();
    for n in [32, 64, 128] {
        let exact = |t: f64| {
            project_initial(n, 0.0, 1.0, Boundary::Periodic, |x| sys.exact_solution(x, t).unwrap()).unwrap()
        };
        let field = exact(0.0);
        let dt = 0.9 * field.dx;
        let scheme = Scheme::new(&sys, SchemeConfig::with_order(2, 0.9)).unwrap();
        let stepped = scheme.step(&field, dt).unwrap().0;
        let target = exact(dt);
        let err = stepped
            .averages
            .iter()
            .zip(&target.averages)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for pair in errors.windows(2) {
        let rate = (pair[0] / pair[1]).log2();
        assert!(rate > 1.8, "one-step rate {rate}, errors {errors:?}");
    }
}

fn euler_state() -> impl Strategy<Value = State<3>> {
    (0.1..5.0f64, -3.0..3.0f64, 0.1..10.0f64).prop_map(|(rho, u, p)| {
        euler_system(1.4)
            .unwrap()
            .primitive_to_conserved(&PrimitiveState::new(rho, u, p))
            .unwrap()
    })
}

proptest! {
    #[test]
    fn rusanov_is_consistent(q in euler_state()) {
        let euler = euler_system(1.4).unwrap();
        let f = rusanov_flux(&q, &q, &euler);
        prop_assert!((f - euler.flux(&q)).amax() <= 1e-12 * euler.flux(&q).amax().max(1.0));
    }

    #[test]
    fn rusanov_is_antisymmetric_under_reflection(ql in euler_state(), qr in euler_state()) {
        // mirroring x swaps the states and flips the momentum and the flux sign
        let euler = euler_system(1.4).unwrap();
        let mirror = |q: &State<3>| State::<3>::new(q[0], -q[1], q[2]);
        let f = rusanov_flux(&ql, &qr, &euler);
        let g = rusanov_flux(&mirror(&qr), &mirror(&ql), &euler);
        let expected = State::<3>::new(-f[0], f[1], -f[2]);
        prop_assert!((g - expected).amax() <= 1e-12 * f.amax().max(1.0));
    }

    #[test]
    fn reconstruction_preserves_cell_means(
        data in prop::collection::vec(-5.0..5.0f64, 12),
        degree in 1usize..=4,
    ) {
        let avg: Vec<State<1>> = data.iter().map(|v| State::<1>::new(*v)).collect();
        let field = CellField::new(0.0, 0.1, avg, Boundary::Periodic).unwrap();
        let weno = WenoReconstructor::new(degree, WenoParams::default()).unwrap();
        for i in 0..12 {
            let p = weno.reconstruct_cell(&field, i);
            prop_assert!((p.mean() - field.get(i)).amax() < 1e-12);
        }
    }

    #[test]
    fn uniform_flow_is_stationary(q in euler_state(), order in 2usize..=5) {
        let euler = euler_system(1.4).unwrap();
        let scheme = Scheme::new(&euler, SchemeConfig::with_order(order, 0.9)).unwrap();
        let field = CellField::new(0.0, 0.1, vec![q; 10], Boundary::Periodic).unwrap();
        let dt = 0.9 * field.dx / max_wave_speed(&field, &euler);
        let next = scheme.step(&field, dt).unwrap().0;
        for v in &next.averages {
            prop_assert!((v - q).amax() <= 1e-13 * q.amax().max(1.0));
        }
    }
}
