//! Acceptance suite: every criterion prints one PASS/FAIL line (run with
//! `--nocapture` to see them) and asserts at its stated tolerance.

use rand::prelude::*;
use weakot::classf::{
    build_potential, class_f_test, curl_residual, BoxGrid, MonotoneMap, SmoothFunctionND,
    VectorFieldND,
};
use weakot::costs::{make_custom_cost, make_power_cost, CostSpec, CostSplit};
use weakot::hopflax::{forward_map, hj_residual, hopf_lax, split_cost, ConvexFunction1D, Grid};
use weakot::measures::DiscreteMeasure;
use weakot::transport::{brute_force_weak, classical_cost, equality_certificate, weak_cost};
use weakot_cli::ic::ic_check;

fn verdict(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} {name} failed: {detail}");
}

fn random_measure(rng: &mut StdRng, max_atoms: usize) -> DiscreteMeasure<f64> {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::new(atoms, weights).unwrap()
}

/// All sorted vectors of length `n` with entries in {-2, ..., 2}.
fn sorted_integer_vectors(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(n: usize, lo: i32, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in lo..=2 {
            cur.push(v as f64);
            rec(n, v, cur, out);
            cur.pop();
        }
    }
    rec(n, -2, &mut cur, &mut out);
    out
}

fn quartic_mix_cost() -> CostSpec<f64> {
    // θ = u²/2 + u⁴/4 through the custom route (inverse by bisection)
    make_custom_cost(
        |u: f64| u * u / 2.0 + u.powi(4) / 4.0,
        |u: f64| u + u * u * u,
        true,
        true,
    )
    .unwrap()
}

fn acceptance_data() -> Vec<ConvexFunction1D<f64>> {
    vec![
        ConvexFunction1D::power_abs(2.0, 0.5).unwrap(),
        ConvexFunction1D::softplus(),
        ConvexFunction1D::power_abs(4.0, 0.25).unwrap(),
    ]
}

#[test]
fn criterion_01_jensen_domination() {
    let mut rng = StdRng::seed_from_u64(101);
    let costs = [
        make_power_cost(2.0, 1.0).unwrap(),
        make_power_cost(4.0, 1.0).unwrap(),
    ];
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..500 {
        let mu = random_measure(&mut rng, 8);
        let nu = random_measure(&mut rng, 8);
        for theta in &costs {
            let gap = weak_cost(&mu, &nu, theta).cost - classical_cost(&mu, &nu, theta).cost;
            worst = worst.max(gap);
        }
    }
    verdict(
        1,
        "jensen-domination",
        worst <= 1e-9,
        &format!("max weak−classical = {worst:.3e}"),
    );
}

#[test]
fn criterion_02_additivity_under_splits() {
    let mut rng = StdRng::seed_from_u64(102);
    let theta = make_custom_cost(
        |u: f64| u * u + u.powi(4),
        |u: f64| 2.0 * u + 4.0 * u * u * u,
        true,
        true,
    )
    .unwrap();
    let sq = make_power_cost(2.0, 1.0).unwrap();
    let quart = make_power_cost(4.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let mu =
            DiscreteMeasure::uniform((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let nu =
            DiscreteMeasure::uniform((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let total = weak_cost(&mu, &nu, &theta).cost;
        for lam in [0.5, 1.0 / 3.0] {
            let a = theta.scaled(lam).unwrap();
            let b = theta.scaled(1.0 - lam).unwrap();
            let gap = (total - weak_cost(&mu, &nu, &a).cost - weak_cost(&mu, &nu, &b).cost).abs();
            worst = worst.max(gap);
        }
        let gap = (total - weak_cost(&mu, &nu, &sq).cost - weak_cost(&mu, &nu, &quart).cost).abs();
        worst = worst.max(gap);
    }
    verdict(
        2,
        "split-additivity",
        worst <= 1e-6,
        &format!("max |T̄θ−T̄α−T̄β| = {worst:.3e}"),
    );
}

#[test]
fn criterion_03_equality_criterion_exhaustive() {
    let sq = make_power_cost(2.0, 1.0).unwrap();
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    let mut worst_brute_gap: f64 = 0.0;
    for n in 1..=4usize {
        let vectors = sorted_integer_vectors(n);
        for x in &vectors {
            let mu = DiscreteMeasure::uniform(x.clone()).unwrap();
            for y in &vectors {
                let nu = DiscreteMeasure::uniform(y.clone()).unwrap();
                let cert = equality_certificate(&mu, &nu);
                let weak = weak_cost(&mu, &nu, &sq).cost;
                let classical = classical_cost(&mu, &nu, &sq).cost;
                let equal = (weak - classical).abs() <= 1e-6;
                if cert.holds != equal {
                    mismatches += 1;
                }
                checked += 1;
                if n <= 3 {
                    let brute = brute_force_weak(&mu, &nu, &sq, 0.01).unwrap();
                    worst_brute_gap = worst_brute_gap.max((weak - brute).abs());
                }
            }
        }
    }
    let pass = mismatches == 0 && worst_brute_gap <= 5e-2;
    verdict(
        3,
        "equality-criterion",
        pass,
        &format!(
            "{checked} instances, {mismatches} mismatches, max |weak−brute| = {worst_brute_gap:.3e}"
        ),
    );
}

#[test]
fn criterion_04_nu1_cost_independence() {
    let quart = make_power_cost(4.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for n in 1..=3usize {
        let vectors = sorted_integer_vectors(n);
        for x in &vectors {
            let mu = DiscreteMeasure::uniform(x.clone()).unwrap();
            for y in &vectors {
                let nu = DiscreteMeasure::uniform(y.clone()).unwrap();
                let rescored = weak_cost(&mu, &nu, &quart).cost;
                let brute = brute_force_weak(&mu, &nu, &quart, 0.01).unwrap();
                worst = worst.max((rescored - brute).abs());
                checked += 1;
            }
        }
    }
    verdict(
        4,
        "nu1-cost-independence",
        worst <= 5e-2,
        &format!("{checked} instances, max |rescored−brute| = {worst:.3e}"),
    );
}

#[test]
fn criterion_05_hopf_lax_splitting() {
    let theta = quartic_mix_cost();
    let alpha_np = make_power_cost(2.0, 0.5).unwrap();
    let beta_np = make_power_cost(4.0, 0.25).unwrap();
    let mut worst: f64 = 0.0;
    for f in acceptance_data() {
        let mut splits: Vec<CostSplit<f64>> = vec![
            weakot::costs::split_proportional(&theta, 0.5).unwrap(),
            weakot::costs::split_proportional(&theta, 1.0 / 3.0).unwrap(),
            CostSplit::new(alpha_np.clone(), beta_np.clone(), theta.clone()).unwrap(),
        ];
        for split in splits.drain(..) {
            let (f1, f2) = split_cost(&f, &split).unwrap();
            for t in [0.5, 1.0, 2.0] {
                let mut x = -2.0;
                while x <= 2.0 + 1e-12 {
                    let total = hopf_lax(&f, &split.theta, t, x).unwrap().value;
                    let a = hopf_lax(&f1, &split.alpha, t, x).unwrap().value;
                    let b = hopf_lax(&f2, &split.beta, t, x).unwrap().value;
                    worst = worst.max((total - a - b).abs());
                    x += 0.1;
                }
            }
        }
    }
    verdict(
        5,
        "hopf-lax-splitting",
        worst <= 1e-5,
        &format!("max residual = {worst:.3e}"),
    );
}

#[test]
fn criterion_06_minimizer_monotonicity_and_round_trip() {
    let theta = quartic_mix_cost();
    let mut monotone_ok = true;
    let mut worst_round: f64 = 0.0;
    for f in acceptance_data() {
        for t in [0.5, 1.0, 2.0] {
            let mut prev: Option<(f64, f64)> = None;
            for k in 0..400 {
                let x = -2.0 + 4.0 * k as f64 / 399.0;
                let m = hopf_lax(&f, &theta, t, x).unwrap().minimizer;
                if let Some((px, pm)) = prev {
                    if m <= pm - 1e-9 {
                        monotone_ok = false;
                    }
                    if (m - x) > (pm - px) + 1e-9 {
                        monotone_ok = false;
                    }
                }
                prev = Some((x, m));
            }
            for k in 0..40 {
                let x = -2.0 + 4.0 * k as f64 / 39.0;
                let fw = forward_map(&f, &theta, t, x).unwrap();
                let back = hopf_lax(&f, &theta, t, fw).unwrap().minimizer;
                worst_round = worst_round.max((back - x).abs());
            }
        }
    }
    let pass = monotone_ok && worst_round <= 1e-7;
    verdict(
        6,
        "minimizer-monotonicity",
        pass,
        &format!("monotone = {monotone_ok}, max round-trip error = {worst_round:.3e}"),
    );
}

#[test]
fn criterion_07_hj_residual_and_refinement() {
    let f = ConvexFunction1D::power_abs(2.0, 0.5).unwrap();
    let theta = make_power_cost(2.0, 0.5).unwrap();
    let coarse = hj_residual(
        &f,
        &theta,
        &Grid::from_range(0.5, 1.5, 1e-2).unwrap(),
        &Grid::from_range(-2.0, 2.0, 1e-2).unwrap(),
    )
    .unwrap();
    let fine = hj_residual(
        &f,
        &theta,
        &Grid::from_range(0.5, 1.5, 5e-3).unwrap(),
        &Grid::from_range(-2.0, 2.0, 5e-3).unwrap(),
    )
    .unwrap();
    let ratio = coarse / fine;
    let pass = coarse <= 1e-3 && ratio >= 1.8;
    verdict(
        7,
        "hj-residual",
        pass,
        &format!("residual(h=1e-2) = {coarse:.3e}, refinement ratio = {ratio:.2}"),
    );
}

#[test]
fn criterion_08_class_membership_and_potentials() {
    let mut rng = StdRng::seed_from_u64(108);
    let points: Vec<Vec<f64>> = (0..100)
        .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();

    let members: Vec<(&str, SmoothFunctionND<f64>)> = vec![
        ("linear", SmoothFunctionND::linear_form(vec![1.0, -2.0])),
        (
            "radial-square",
            SmoothFunctionND::radial(2, |s: f64| s * s, |s| 2.0 * s, |_| 2.0),
        ),
        (
            "radial-cosh",
            SmoothFunctionND::radial(
                2,
                |s: f64| s.cosh() - 1.0,
                |s: f64| s.sinh(),
                |s: f64| s.cosh(),
            ),
        ),
        (
            "quad-plus-linear",
            SmoothFunctionND::quad_plus_linear(1.0, vec![1.0, 0.0]),
        ),
    ];

    let mut all_pass = true;
    let mut details = Vec::new();
    for (name, f) in &members {
        let r = class_f_test(f, &points, 1e-6).unwrap();
        if !r.in_class {
            all_pass = false;
            details.push(format!(
                "{name} rejected (residual {:.2e})",
                r.max_symmetry_residual
            ));
        }
    }

    let counter = SmoothFunctionND::quadratic_form(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let mut counter_points = points.clone();
    counter_points.push(vec![1.0, 1.0]);
    let cr = class_f_test(&counter, &counter_points, 1e-6).unwrap();
    if cr.in_class || cr.max_symmetry_residual <= 0.1 {
        all_pass = false;
        details.push(format!(
            "counterexample residual {:.2e}",
            cr.max_symmetry_residual
        ));
    }

    // potentials from the quadratic member under G ∈ {id, s³}
    let f = SmoothFunctionND::quad_plus_linear(0.5, vec![0.0, 0.0]);
    let mut worst_curl: f64 = 0.0;
    for g in [MonotoneMap::identity(), MonotoneMap::power(3.0)] {
        let phi = build_potential(&f, &g, &[0.0, 0.0]).unwrap();
        let curl = curl_residual(&VectorFieldND::gradient_of(&phi), &points).unwrap();
        worst_curl = worst_curl.max(curl);
        let closure = class_f_test(&phi, &points, 1e-6).unwrap();
        if !closure.in_class {
            all_pass = false;
            details.push(format!(
                "closure failed (residual {:.2e})",
                closure.max_symmetry_residual
            ));
        }
    }
    if worst_curl > 1e-6 {
        all_pass = false;
        details.push(format!("curl {worst_curl:.2e}"));
    }

    let detail = if details.is_empty() {
        format!(
            "members pass, counterexample residual {:.2}, max curl {worst_curl:.2e}",
            cr.max_symmetry_residual
        )
    } else {
        details.join("; ")
    };
    verdict(8, "class-membership", all_pass, &detail);
}

#[test]
fn criterion_09_map_cost_independence_in_the_plane() {
    let contraction = VectorFieldND::from_fn(2, |x: &[f64]| vec![x[0] / 2.0, x[1] / 2.0]);
    let costs = [
        make_power_cost(2.0, 1.0).unwrap(),
        make_power_cost(4.0, 1.0).unwrap(),
    ];
    let grid = BoxGrid {
        lo: -1.0,
        hi: 1.0,
        step: 0.02,
        dim: 2,
    };
    // deterministic samples well inside the box (margin = displacement + 3h)
    let mut samples = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            samples.push(vec![-0.5 + 0.25 * i as f64, -0.5 + 0.25 * j as f64]);
        }
    }
    let report =
        weakot::classf::verify_map_optimality(&contraction, &costs, &samples, &grid).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, dev) in report.per_cost.iter().enumerate() {
        if dev.worst_deviation > 5e-2 || dev.samples_checked == 0 {
            pass = false;
        }
        detail.push(format!(
            "cost{i}: dev {:.3e} over {} samples",
            dev.worst_deviation, dev.samples_checked
        ));
    }
    verdict(9, "map-cost-independence", pass, &detail.join(", "));
}

#[test]
fn criterion_10_ic_sanity() {
    let theta = make_power_cost(2.0, 1.0).unwrap();

    // margin for f ≡ 0 is exactly zero for several measures and costs
    let mut exact_zero = true;
    let family = vec![("zero".to_string(), ConvexFunction1D::constant(0.0))];
    let quart = make_power_cost(4.0, 1.0).unwrap();
    for atoms in [vec![0.0], vec![-1.0, 1.0], vec![-2.0, 0.3, 4.0]] {
        let mu = DiscreteMeasure::uniform(atoms).unwrap();
        for th in [&theta, &quart] {
            let rep = ic_check(&mu, &family, th, 1.0).unwrap();
            if rep.margin != 0.0 {
                exact_zero = false;
            }
        }
    }

    // μ uniform on {−1, 1}, f = x²: margin = 1 − e^{−1/2}
    let mu = DiscreteMeasure::uniform(vec![-1.0, 1.0]).unwrap();
    let fam = vec![(
        "square".to_string(),
        ConvexFunction1D::power_abs(2.0, 1.0).unwrap(),
    )];
    let rep = ic_check(&mu, &fam, &theta, 1.0).unwrap();
    let expected = 1.0 - (-0.5f64).exp();
    let gap = (rep.margin - expected).abs();

    let pass = exact_zero && gap <= 1e-9;
    verdict(
        10,
        "ic-sanity",
        pass,
        &format!("zero-margin exact = {exact_zero}, closed-form gap = {gap:.3e}"),
    );
}
