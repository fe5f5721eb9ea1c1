//! Invariants of the gradient-eigenvector family: equivalence of the
//! symmetry and eigen-alignment residuals, path independence and convexity
//! of built potentials, closure under reshaping, and the splitting identity
//! in the plane checked with grid oracles.

mod common;

use common::rng;
use rand::Rng;
use weakot::classf::{
    build_potential, class_f_test, curl_residual, eigen_residual, grid_infconv_nd, BoxGrid,
    MonotoneMap, SmoothFunctionND, VectorFieldND,
};
use weakot::costs::{make_power_cost, split_proportional};

fn member_family() -> Vec<SmoothFunctionND<f64>> {
    vec![
        SmoothFunctionND::linear_form(vec![2.0, -1.0]),
        SmoothFunctionND::radial(2, |s: f64| s * s, |s| 2.0 * s, |_| 2.0),
        SmoothFunctionND::radial(
            2,
            |s: f64| s.cosh() - 1.0,
            |s: f64| s.sinh(),
            |s: f64| s.cosh(),
        ),
        SmoothFunctionND::quad_plus_linear(1.0, vec![1.0, 0.0]),
    ]
}

fn random_points(seed: u64, count: usize, half_width: f64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            vec![
                r.gen_range(-half_width..half_width),
                r.gen_range(-half_width..half_width),
            ]
        })
        .collect()
}

#[test]
fn symmetry_and_eigen_residuals_agree_in_verdict() {
    let pts = random_points(51, 60, 2.0);
    let bad = SmoothFunctionND::quadratic_form(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let mut funcs = member_family();
    funcs.push(bad);
    for f in &funcs {
        for p in &pts {
            let grad = f.gradient(p);
            let u: f64 = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if u <= 1e-6 {
                continue;
            }
            let sym = class_f_test(f, std::slice::from_ref(p), 1e-6)
                .unwrap()
                .max_symmetry_residual;
            let eig = eigen_residual(f, p).unwrap();
            // same verdict at a common threshold with a wide margin band
            let tol = 1e-6;
            if sym <= tol * 0.1 {
                assert!(
                    eig <= 40.0 * tol,
                    "eigen residual {eig} large where symmetry {sym} small"
                );
            }
            if sym > 0.05 {
                assert!(
                    eig > tol,
                    "eigen residual {eig} small where symmetry {sym} large"
                );
            }
        }
    }
}

#[test]
fn built_potentials_are_path_independent() {
    let pts = random_points(52, 12, 1.5);
    for f in member_family() {
        for g_map in [MonotoneMap::identity(), MonotoneMap::power(3.0)] {
            let phi = match build_potential(&f, &g_map, &[0.0, 0.0]) {
                Ok(p) => p,
                Err(e) => panic!("potential construction failed: {e}"),
            };
            for p in &pts {
                // straight-segment value vs axis-parallel staircase value
                let direct = phi.eval(p);
                let staircase = {
                    let legs = 800usize;
                    let mut acc = 0.0;
                    // leg 1: (0,0) → (pms[0], 0)
                    for k in 0..legs {
                        let s = (k as f64 + 0.5) / legs as f64;
                        let x = [p[0] * s, 0.0];
                        acc += phi.gradient(&x)[0] * p[0] / legs as f64;
                    }
                    // leg 2: (p[0], 0) → (p[0], p[1])
                    for k in 0..legs {
                        let s = (k as f64 + 0.5) / legs as f64;
                        let x = [p[0], p[1] * s];
                        acc += phi.gradient(&x)[1] * p[1] / legs as f64;
                    }
                    acc
                };
                assert!(
                    (direct - staircase).abs() < 1e-4,
                    "path dependence detected: {direct} vs {staircase}"
                );
            }
        }
    }
}

#[test]
fn built_potentials_stay_convex_and_in_class() {
    let pts = random_points(53, 40, 1.8);
    for f in member_family() {
        for g_map in [MonotoneMap::identity(), MonotoneMap::power(3.0)] {
            let phi = build_potential(&f, &g_map, &[0.0, 0.0]).unwrap();
            let report = class_f_test(&phi, &pts, 1e-6).unwrap();
            assert_eq!(
                report.convexity_violations, 0,
                "built potential lost convexity"
            );
            assert!(
                report.in_class,
                "closure property failed: residual {}",
                report.max_symmetry_residual
            );
            // its gradient field is curl-free
            let field = VectorFieldND::gradient_of(&phi);
            assert!(curl_residual(&field, &pts).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn splitting_identity_in_the_plane_via_grid_oracles() {
    // f = ‖x‖²/2, θ = u², proportional splits: Q^θ f = Q^α φ + Q^β ψ
    let f = SmoothFunctionND::quad_plus_linear(0.5, vec![0.0, 0.0]);
    let theta = make_power_cost(2.0, 1.0).unwrap();
    let h = 0.05;
    let grid = BoxGrid {
        lo: -2.0,
        hi: 2.0,
        step: h,
        dim: 2,
    };

    for lam in [0.5, 0.3] {
        let split = split_proportional(&theta, lam).unwrap();
        // G = α'∘θ'⁻¹ reshapes f into the α-part potential
        let alpha = split.alpha.clone();
        let theta_c = theta.clone();
        let g_alpha = MonotoneMap::from_fn(move |s| alpha.deriv(theta_c.inv_deriv(s).unwrap()));
        let beta = split.beta.clone();
        let theta_c = theta.clone();
        let g_beta = MonotoneMap::from_fn(move |s| beta.deriv(theta_c.inv_deriv(s).unwrap()));

        let phi = build_potential(&f, &g_alpha, &[0.0, 0.0]).unwrap();
        let psi = build_potential(&f, &g_beta, &[0.0, 0.0]).unwrap();

        let n = grid.node_count();
        let f_vals: Vec<f64> = (0..n).map(|i| f.eval(&grid.node(i))).collect();
        let phi_vals: Vec<f64> = (0..n).map(|i| phi.eval(&grid.node(i))).collect();
        let psi_vals: Vec<f64> = (0..n).map(|i| psi.eval(&grid.node(i))).collect();

        for z in random_points(54, 8, 0.8) {
            let total = grid_infconv_nd(&f_vals, &grid, &split.theta, 1.0, &z);
            let a = grid_infconv_nd(&phi_vals, &grid, &split.alpha, 1.0, &z);
            let b = grid_infconv_nd(&psi_vals, &grid, &split.beta, 1.0, &z);
            assert!(
                (total - a - b).abs() <= 10.0 * h,
                "plane splitting identity broke at {z:?}: {total} vs {}",
                a + b
            );
        }
    }
}

#[test]
fn smooth_function_invariants_hold_on_samples() {
    let pts = random_points(55, 25, 1.5);
    for f in member_family() {
        for p in &pts {
            // gradient matches finite differences of eval
            let grad = f.gradient(p);
            for i in 0..2 {
                let h = 1e-6;
                let mut up = p.clone();
                up[i] += h;
                let mut dn = p.clone();
                dn[i] -= h;
                let fd = (f.eval(&up) - f.eval(&dn)) / (2.0 * h);
                assert!(
                    (fd - grad[i]).abs() < 1e-5,
                    "gradient mismatch {fd} vs {}",
                    grad[i]
                );
            }
            // hessian symmetric
            let hess = f.hessian(p);
            assert!((hess[0][1] - hess[1][0]).abs() < 1e-6);
        }
    }
}
