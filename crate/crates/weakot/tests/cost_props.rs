//! Convex-analysis invariants of cost specifications: Fenchel-Young,
//! derivative inversion, strict midpoint convexity, and split additivity.

mod common;

use common::rng;
use rand::Rng;
use weakot::costs::{make_custom_cost, make_power_cost, split_proportional, CostSpec, CostSplit};

fn cost_family() -> Vec<CostSpec<f64>> {
    vec![
        make_power_cost(2.0, 1.0).unwrap(),
        make_power_cost(2.0, 0.5).unwrap(),
        make_power_cost(4.0, 0.25).unwrap(),
        make_power_cost(1.5, 2.0).unwrap(),
        make_custom_cost(
            |u: f64| u * u / 2.0 + u.powi(4) / 4.0,
            |u: f64| u + u.powi(3),
            true,
            true,
        )
        .unwrap(),
    ]
}

#[test]
fn fenchel_young_inequality_and_equality_case() {
    let mut r = rng(21);
    for theta in cost_family() {
        for _ in 0..200 {
            let x = r.gen_range(-4.0..4.0);
            let s = r.gen_range(-6.0..6.0);
            if let Ok(conj) = theta.conjugate(s) {
                assert!(
                    theta.eval(x) + conj >= x * s - 1e-9,
                    "Fenchel-Young violated at x={x}, s={s}"
                );
            }
            // equality at s = θ'(x)
            let s_star = theta.deriv(x);
            let conj = theta.conjugate(s_star).unwrap();
            let gap = theta.eval(x) + conj - x * s_star;
            assert!(gap.abs() < 1e-7, "tight case off by {gap} at x={x}");
        }
    }
}

#[test]
fn inverse_derivative_round_trip() {
    let mut r = rng(22);
    for theta in cost_family() {
        for _ in 0..200 {
            let x = r.gen_range(-4.0..4.0);
            let back = theta.inv_deriv(theta.deriv(x)).unwrap();
            assert!((back - x).abs() < 1e-9, "θ'⁻¹∘θ' failed at {x}: {back}");
        }
    }
}

#[test]
fn midpoint_convexity_with_strict_margin() {
    let mut r = rng(23);
    for theta in cost_family() {
        for _ in 0..200 {
            let x = r.gen_range(-4.0..4.0);
            let y = r.gen_range(-4.0..4.0);
            let mid = theta.eval((x + y) / 2.0);
            let avg = (theta.eval(x) + theta.eval(y)) / 2.0;
            assert!(mid <= avg + 1e-12);
            if theta.strictly_convex() && (x - y).abs() > 0.1 {
                assert!(mid < avg, "no strict margin at x={x}, y={y}");
            }
        }
    }
}

#[test]
fn split_derivative_additivity() {
    let mut r = rng(24);
    for theta in cost_family() {
        for _ in 0..20 {
            let lam = r.gen_range(0.05..0.95);
            let split = split_proportional(&theta, lam).unwrap();
            for _ in 0..20 {
                let x: f64 = r.gen_range(-4.0..4.0);
                let gap = split.alpha.deriv(x) + split.beta.deriv(x) - theta.deriv(x);
                assert!(gap.abs() < 1e-9);
            }
        }
    }
    // non-proportional split
    let split = CostSplit::from_parts(
        make_power_cost(2.0, 1.0).unwrap(),
        make_power_cost(4.0, 1.0).unwrap(),
    );
    for _ in 0..50 {
        let x: f64 = r.gen_range(-4.0..4.0);
        let gap = split.alpha.deriv(x) + split.beta.deriv(x) - split.theta.deriv(x);
        assert!(gap.abs() < 1e-9);
    }
}
