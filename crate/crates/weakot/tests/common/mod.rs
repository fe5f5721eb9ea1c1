#![allow(dead_code)]

use rand::prelude::*;
use weakot::measures::DiscreteMeasure;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random measure with up to `max_atoms` atoms in [-5, 5] and random weights.
pub fn random_measure(rng: &mut StdRng, max_atoms: usize) -> DiscreteMeasure<f64> {
    let n = rng.gen_range(1..=max_atoms);
    let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::new(atoms, weights).unwrap()
}

/// Random equal-weight measure with exactly `n` atoms in [-5, 5].
pub fn random_uniform_measure(rng: &mut StdRng, n: usize) -> DiscreteMeasure<f64> {
    let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    DiscreteMeasure::uniform(atoms).unwrap()
}

/// Applies `steps` random pairwise averagings (a doubly stochastic mix), so
/// the result is majorized by the input.
pub fn robin_hood_mix(rng: &mut StdRng, v: &[f64], steps: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    let n = out.len();
    if n < 2 {
        return out;
    }
    for _ in 0..steps {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        if i == j {
            j = (j + 1) % n;
        }
        let lam = rng.gen_range(0.0..=0.5);
        let (a, b) = (out[i], out[j]);
        out[i] = (1.0 - lam) * a + lam * b;
        out[j] = lam * a + (1.0 - lam) * b;
    }
    out
}

/// A random convex piecewise-linear function: non-decreasing slopes over
/// fixed kinks. Returns a closure.
pub fn random_convex_pl(rng: &mut StdRng, kinks: &[f64]) -> impl Fn(f64) -> f64 {
    let kinks = kinks.to_vec();
    let mut slopes: Vec<f64> = (0..=kinks.len())
        .map(|_| rng.gen_range(-3.0..3.0))
        .collect();
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    move |y: f64| {
        if kinks.is_empty() {
            return slopes[0] * y;
        }
        let anchor = kinks[0];
        if y <= anchor {
            return slopes[0] * (y - anchor);
        }
        let mut val = 0.0;
        let mut prev = anchor;
        for (k, &kink) in kinks.iter().enumerate().skip(1) {
            if y <= kink {
                return val + slopes[k] * (y - prev);
            }
            val += slopes[k] * (kink - prev);
            prev = kink;
        }
        val + slopes[kinks.len()] * (y - prev)
    }
}
