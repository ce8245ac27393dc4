//! Cross-checks against independently derived reference values.

use std::f64::consts::PI;

use num_complex::Complex64;
use qtraj_core::quadrature;
use qtraj_core::{
    build_action, derive_initial_state, fiqnl_lhs, floyd_time_numeric, free_trajectory, integrate_fiqnl,
    integrate_quadrature, microstate_to_trajectory_constants, solve_basis, velocity_law, ActionField, Convention,
    FreeTrajectoryParams, Grid, Microstate, Potential, StepControl, Stencil, TrajectoryState, Units,
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// integral of exp(u^2) from 0 to x, composite 20-point Gauss-Legendre.
fn dawson_like(x: f64, rule: &[(f64, f64)]) -> f64 {
    let panels = 40;
    let h = x / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = (p as f64 + 0.5) * h;
            rule.iter().map(|(t, w)| w * (mid + 0.5 * h * t).powi(2).exp()).sum::<f64>() * 0.5 * h
        })
        .sum()
}

#[test]
fn harmonic_basis_matches_reduction_of_order() {
    // g1 = exp(-x^2/2), g2 = exp(-x^2/2) * int_0^x exp(u^2) du solve the k = 1, E = 1/2 equation.
    let rule = gauss_legendre(20);
    let g = |x: f64| {
        let e = (-0.5 * x * x).exp();
        let integral = dawson_like(x, &rule);
        let g1 = e;
        let g2 = e * integral;
        let d1 = -x * g1;
        let d2 = -x * g2 + (0.5 * x * x).exp();
        [g1, d1, g2, d2]
    };
    for x_min in [0.0, -2.0] {
        let grid = Grid::new(x_min, 3.0, 1001).unwrap();
        let pair = solve_basis(&Potential::harmonic(1.0).unwrap(), 0.5, grid, Units::default(), Convention::SlopeOne).unwrap();
        // express theta1, theta2 in the (g1, g2) basis from their initial data
        let [g1, d1, g2, d2] = g(x_min);
        let det = g1 * d2 - d1 * g2;
        let coeffs = |value: f64, slope: f64| ((value * d2 - slope * g2) / det, (g1 * slope - d1 * value) / det);
        let (p1, q1) = coeffs(0.0, 1.0);
        let (p2, q2) = coeffs(1.0, 0.0);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in (0..grid.len()).step_by(5) {
            let x = grid.x(i);
            let [g1, d1, g2, d2] = g(x);
            let node = pair.node(i);
            let expect = [p1 * g1 + q1 * g2, p1 * d1 + q1 * d2, p2 * g1 + q2 * g2, p2 * d1 + q2 * d2];
            let got = [node.theta1, node.theta1_prime, node.theta2, node.theta2_prime];
            for (e, v) in expect.iter().zip(got) {
                worst = worst.max((e - v).abs());
                scale = scale.max(e.abs());
            }
        }
        assert!(worst <= 1e-6 * scale.max(1.0), "x_min {x_min}: {worst:e} (scale {scale})");
    }
}

fn free_field(a: f64, b: f64) -> ActionField {
    let grid = Grid::new(0.0, 6.0, 6001).unwrap();
    let pair = solve_basis(&Potential::Free, 0.5, grid, Units::default(), Convention::SlopeOne).unwrap();
    build_action(&pair, Microstate::new(0.5, a, b).unwrap()).unwrap()
}

#[test]
fn free_routes_agree_with_closed_form() {
    let units = Units::default();
    for (a, b) in [(1.0, 0.0), (2.0, 0.0), (1.0, 1.0), (0.5, -0.3)] {
        let field = free_field(a, b);
        let quad = integrate_quadrature(&field, 0.0, 5.0, 0.0, 1e-10).unwrap();
        let s0 = derive_initial_state(&field, 0.0).unwrap();
        let fiq = integrate_fiqnl(s0, &Potential::Free, 0.5, units, 3.0, StepControl::adaptive(1e-9), Some(&field)).unwrap();
        let (a_t, b_t) = microstate_to_trajectory_constants(a, b).unwrap();
        let closed = FreeTrajectoryParams::from_microstate(a, b, 0.5, units, 0.0, 0.0).unwrap();
        assert_eq!((closed.a_t, closed.b_t), (a_t, b_t));
        for i in 0..=300 {
            let t = 0.01 * i as f64;
            let x = free_trajectory(&closed, units, t);
            // inverse check: the action law arctan(a tan x + b) - arctan(b) = t, branch-continued
            let n = (x / PI).round();
            let back = (a * (x - n * PI).tan() + b).atan() + n * PI - b.atan();
            assert!((back - t).abs() < 1e-9, "({a},{b}) closed form off at t = {t}");
            assert!((quad.position_at(t).unwrap() - x).abs() < 1e-6, "({a},{b}) quadrature at t = {t}");
            assert!((fiq.position_at(t).unwrap() - x).abs() < 1e-6, "({a},{b}) fiqnl at t = {t}");
        }
    }
}

fn harmonic_field(a: f64, b: f64) -> ActionField {
    let grid = Grid::new(-1.5, 1.5, 3001).unwrap();
    let pair = solve_basis(&Potential::harmonic(1.0).unwrap(), 0.5, grid, Units::default(), Convention::SlopeOne).unwrap();
    build_action(&pair, Microstate::new(0.5, a, b).unwrap()).unwrap()
}

#[test]
fn second_and_third_action_derivatives_from_kinematics() {
    // S0'' = -(2y / v^3)(acc + v^2 V' / y) and
    // S0''' = -2V''/v + 6 y acc^2 / v^5 + 4 acc V' / v^3 - 2 y jerk / v^4, with y = E - V
    let field = harmonic_field(1.3, -0.4);
    let pot = field.potential().clone();
    let s0 = derive_initial_state(&field, -0.9).unwrap();
    let fiq = integrate_fiqnl(s0, &pot, 0.5, Units::default(), 1.0, StepControl::adaptive(1e-11), Some(&field)).unwrap();
    for s in &fiq.states {
        let y = 0.5 - pot.v(s.x);
        let (dv, d2v) = (pot.dv(s.x), pot.d2v(s.x));
        let jerk = s.jerk.unwrap();
        let d2 = -(2.0 * y / s.v.powi(3)) * (s.acc + s.v * s.v * dv / y);
        let d3 = -2.0 * d2v / s.v + 6.0 * y * s.acc * s.acc / s.v.powi(5) + 4.0 * s.acc * dv / s.v.powi(3)
            - 2.0 * y * jerk / s.v.powi(4);
        let pt = field.at(s.x).unwrap();
        assert!((pt.p_d1 - d2).abs() <= 1e-7 * pt.p_d1.abs().max(pt.p.abs()), "x = {}", s.x);
        assert!((pt.p_d2 - d3).abs() <= 1e-7 * pt.p_d2.abs().max(pt.p.abs()), "x = {}", s.x);
    }
}

#[test]
fn lagrangian_integral_matches_action_minus_energy_time() {
    // L = E - 2V on shell, so the time integral equals S0(x) - S0(x0) - E (t - t0)
    let field = harmonic_field(2.0, 0.0);
    let quad = integrate_quadrature(&field, -0.8, 0.8, 0.0, 1e-12).unwrap();
    let integral = quadrature::integrate(
        |x| {
            let v = velocity_law(&field, x).unwrap();
            field.lagrangian(x, v).unwrap() / v
        },
        -0.8,
        0.8,
        1e-13,
        1e-13,
    )
    .unwrap()
    .value;
    let ds = field.at(0.8).unwrap().s0 - field.at(-0.8).unwrap().s0;
    let expect = ds - 0.5 * quad.end().t;
    assert!((integral - expect).abs() <= 1e-8 * expect.abs(), "{integral} vs {expect}");
}

#[test]
fn quantum_coordinate_derivative_squared_is_f() {
    let field = harmonic_field(1.5, 0.7);
    let h = 1e-3;
    for x in [-0.7, -0.2, 0.35, 0.8] {
        let xh = |y: f64| field.quantum_coordinate(-0.9, y, 1e-14).unwrap();
        let d = (xh(x - 2.0 * h) - 8.0 * xh(x - h) + 8.0 * xh(x + h) - xh(x + 2.0 * h)) / (12.0 * h);
        let f = field.f_factor(x).unwrap();
        assert!((d * d - f).abs() <= 1e-8 * f.abs(), "x = {x}: {} vs {f}", d * d);
    }
}

#[test]
fn wavefunction_residual_shrinks_under_refinement() {
    let residual = |n: usize| {
        let grid = Grid::new(-2.0, 2.0, n).unwrap();
        let pair = solve_basis(&Potential::harmonic(1.0).unwrap(), 0.8, grid, Units::default(), Convention::SlopeOne).unwrap();
        let field = build_action(&pair, Microstate::new(0.8, 1.2, 0.3).unwrap()).unwrap();
        field.reconstruct_wavefunction(Complex64::new(0.6, 0.1), Complex64::new(-0.2, 0.9)).max_residual
    };
    let (r1, r2, r3) = (residual(201), residual(401), residual(801));
    assert!(r2 < r1 && r3 < r2, "{r1:e} {r2:e} {r3:e}");
    assert!(r1 / r2 > 3.0 && r2 / r3 > 3.0, "{r1:e} {r2:e} {r3:e}");
}

#[test]
fn harmonic_floyd_time_is_stencil_consistent() {
    let factory = |e: f64| {
        solve_basis(&Potential::harmonic(1.0).unwrap(), e, Grid::new(-1.2, 1.2, 1201).unwrap(), Units::default(), Convention::FloydWave)
    };
    let ms = Microstate::new(0.5, 1.7, 0.4).unwrap();
    for x in [-0.8, -0.1, 0.5, 1.0] {
        let three = floyd_time_numeric(factory, ms, x, None, Stencil::ThreePoint).unwrap();
        let five = floyd_time_numeric(factory, ms, x, Some(1e-4 * 0.5), Stencil::FivePoint).unwrap();
        assert!(three.is_finite());
        assert!((three - five).abs() <= 1e-3 * five.abs(), "x = {x}: {three} vs {five}");
    }
}

#[test]
fn classical_microstate_is_hbar_independent() {
    for hbar in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        let units = Units::new(hbar, 1.0).unwrap();
        let grid = Grid::new(0.0, 4.0, 4001).unwrap();
        let pair = solve_basis(&Potential::Free, 0.5, grid, units, Convention::FloydWave).unwrap();
        let field = build_action(&pair, Microstate::classical(0.5)).unwrap();
        for x in [0.3, 1.7, 3.9] {
            assert!((field.f_factor(x).unwrap() - 1.0).abs() < 1e-12);
        }
        let quad = integrate_quadrature(&field, 0.0, 3.5, 0.0, 1e-12).unwrap();
        for s in &quad.states {
            assert!((s.x - s.t).abs() < 1e-10);
        }
    }
}

#[test]
fn quantum_terms_scale_as_hbar_squared() {
    let pot = Potential::harmonic(1.0).unwrap();
    let s = TrajectoryState { t: 0.0, x: 0.3, v: 0.8, acc: -0.2, jerk: Some(0.5) };
    let lhs = |hbar: f64| fiqnl_lhs(s.x, s.v, s.acc, s.jerk.unwrap(), &pot, 0.5, 1.0, hbar);
    let classical = lhs(0.0);
    let q1 = lhs(0.4) - classical;
    let q2 = lhs(0.2) - classical;
    assert!((q1 / q2 - 4.0).abs() < 1e-10, "{}", q1 / q2);
}
