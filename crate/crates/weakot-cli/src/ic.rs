//! The infimum-convolution inequality checker:
//! `∫ e^{Q_t f} dμ · ∫ e^{−f} dμ <= 1` over a supplied family of convex
//! functions. Verification only — a finite family cannot certify the
//! inequality over all bounded-below functions.

use serde::Serialize;
use weakot::hopflax::hopf_lax;
use weakot::{ConvexFunction64, CostSpec64, DiscreteMeasure64};

/// Exponents are clipped here to dodge overflow; clipping is flagged.
const EXP_CLIP: f64 = 700.0;

/// Per-function outcome.
#[derive(Debug, Clone, Serialize)]
pub struct IcEntry {
    /// Family member label.
    pub label: String,
    /// `∫ e^{Q_t f} dμ · ∫ e^{−f} dμ`.
    pub lhs_product: f64,
    /// `1 − lhs_product`.
    pub margin: f64,
    /// Whether any exponent hit the clip guard.
    pub clipped: bool,
}

/// Worst-margin report over the family.
#[derive(Debug, Clone, Serialize)]
pub struct IcReport {
    /// Product for the worst family member.
    pub lhs_product: f64,
    /// `1 − lhs_product` for the worst member.
    pub margin: f64,
    /// `margin >= -1e-9`.
    pub satisfied: bool,
    /// True when any exponent was clipped at ±700.
    pub clipped: bool,
    /// Per-function breakdown.
    pub per_function: Vec<IcEntry>,
}

/// Evaluates the inequality for each `f` in the family: both integrals are
/// exact finite sums over the atoms of μ, with `Q_t f` computed by the
/// Hopf-Lax solver.
pub fn ic_check(
    mu: &DiscreteMeasure64,
    family: &[(String, ConvexFunction64)],
    theta: &CostSpec64,
    t: f64,
) -> weakot::Result<IcReport> {
    if family.is_empty() {
        return Err(weakot::Error::Parameter(
            "the test family must not be empty".into(),
        ));
    }
    let mut per_function = Vec::with_capacity(family.len());
    for (label, f) in family {
        let mut clipped = false;
        let mut clip = |e: f64| {
            if e > EXP_CLIP {
                clipped = true;
                EXP_CLIP
            } else {
                e
            }
        };
        let mut gain = 0.0;
        for (&a, &w) in mu.atoms().iter().zip(mu.weights()) {
            let q = hopf_lax(f, theta, t, a)?.value;
            gain += w * clip(q).exp();
        }
        let mut pay = 0.0;
        for (&a, &w) in mu.atoms().iter().zip(mu.weights()) {
            pay += w * clip(-f.eval(a)).exp();
        }
        let lhs_product = gain * pay;
        per_function.push(IcEntry {
            label: label.clone(),
            lhs_product,
            margin: 1.0 - lhs_product,
            clipped,
        });
    }
    let worst = per_function
        .iter()
        .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap())
        .expect("family is non-empty");
    Ok(IcReport {
        lhs_product: worst.lhs_product,
        margin: worst.margin,
        satisfied: worst.margin >= -1e-9,
        clipped: per_function.iter().any(|e| e.clipped),
        per_function,
    })
}

/// The default convex test family: the zero function, smoothed absolute
/// values and squared hinges kinked at every atom of μ, and `x²/2` — the
/// shapes that appear in one-dimensional convex duality arguments.
pub fn default_family(mu: &DiscreteMeasure64) -> Vec<(String, ConvexFunction64)> {
    let mut family: Vec<(String, ConvexFunction64)> = Vec::new();
    family.push(("zero".into(), ConvexFunction64::constant(0.0)));
    family.push((
        "half_square".into(),
        ConvexFunction64::power_abs(2.0, 0.5).expect("valid power datum"),
    ));
    let eps = 0.1;
    for &k in mu.atoms() {
        family.push((
            format!("smooth_abs@{k}"),
            ConvexFunction64::from_fns(
                move |x: f64| ((x - k) * (x - k) + eps * eps).sqrt() - eps,
                move |x: f64| (x - k) / ((x - k) * (x - k) + eps * eps).sqrt(),
                0.0,
            )
            .expect("smoothed absolute value is convex"),
        ));
        family.push((
            format!("hinge_sq@{k}"),
            ConvexFunction64::from_fns(
                move |x: f64| {
                    let h = (x - k).max(0.0);
                    h * h
                },
                move |x: f64| 2.0 * (x - k).max(0.0),
                0.0,
            )
            .expect("squared hinge is convex"),
        ));
    }
    family
}
