//! Convex cost functions θ with θ(0) = 0.
//!
//! A [`CostSpec`] packages evaluation, the first derivative, the (partial)
//! inverse derivative, and the Legendre conjugate, together with strictness
//! and growth metadata. The built-in power family `scale·|x|^p` carries
//! closed forms; custom costs fall back to bisection on the monotone
//! derivative.

use std::sync::Arc;

use crate::numerics::{bisect_monotone, bracket_monotone_root};
use crate::scalar::{cst, RealFn, Scalar};
use crate::{Error, Result};

/// Bisection tolerance for inverse derivatives of custom costs.
const INV_DERIV_TOL: f64 = 1e-12;
/// Iteration cap for the bisection.
const INV_DERIV_ITERS: usize = 200;
/// Doubling cap for bracket expansion.
const BRACKET_DOUBLINGS: usize = 60;

#[derive(Clone)]
enum Kind<S: Scalar> {
    Power {
        p: S,
        scale: S,
    },
    Custom {
        eval: RealFn<S>,
        deriv: RealFn<S>,
        strictly_convex: bool,
        superlinear: bool,
    },
}

/// A convex cost function θ: ℝ → ℝ, positive and vanishing at 0.
#[derive(Clone)]
pub struct CostSpec<S: Scalar> {
    kind: Kind<S>,
}

impl<S: Scalar> std::fmt::Debug for CostSpec<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Power { p, scale } => write!(f, "CostSpec(pow: p={p}, scale={scale})"),
            Kind::Custom {
                strictly_convex,
                superlinear,
                ..
            } => write!(
                f,
                "CostSpec(custom: strictly_convex={strictly_convex}, superlinear={superlinear})"
            ),
        }
    }
}

/// `θ(x) = scale · |x|^p` with exact derivative and inverse derivative.
/// Requires `p > 1` (so the cost is strictly convex) and `scale > 0`.
pub fn make_power_cost<S: Scalar>(p: S, scale: S) -> Result<CostSpec<S>> {
    if !(p > S::one()) || !p.is_finite() {
        return Err(Error::Parameter(format!(
            "power cost needs p > 1 (p = 1 is not strictly convex; use make_custom_cost), got {p}"
        )));
    }
    if !(scale > S::zero()) || !scale.is_finite() {
        return Err(Error::Parameter(format!(
            "power cost needs scale > 0, got {scale}"
        )));
    }
    Ok(CostSpec {
        kind: Kind::Power { p, scale },
    })
}

/// Wraps user-supplied `eval`/`deriv` closures as a cost.
///
/// The constructor spot-checks θ(0) = 0, θ >= 0, and a non-decreasing
/// derivative on a coarse grid; θ'⁻¹ defaults to bisection on `deriv`.
/// Non-smooth convex costs (e.g. |x|) are accepted with
/// `strictly_convex = false`; operations requiring θ'⁻¹ reject them.
pub fn make_custom_cost<S: Scalar>(
    eval: impl Fn(S) -> S + Send + Sync + 'static,
    deriv: impl Fn(S) -> S + Send + Sync + 'static,
    strictly_convex: bool,
    superlinear: bool,
) -> Result<CostSpec<S>> {
    if eval(S::zero()).abs() > cst::<S>(1e-9) {
        return Err(Error::Parameter("cost must vanish at 0".into()));
    }
    let mut prev = S::neg_infinity();
    for i in 0..=32 {
        let x = cst::<S>(-8.0 + 0.5 * i as f64);
        if eval(x) < -cst::<S>(1e-9) {
            return Err(Error::Parameter(format!(
                "cost must be nonnegative, θ({x}) < 0"
            )));
        }
        let d = deriv(x);
        if d + cst::<S>(1e-9) < prev {
            return Err(Error::Parameter(format!(
                "cost derivative must be non-decreasing, decrease detected at {x}"
            )));
        }
        prev = d;
    }
    Ok(CostSpec {
        kind: Kind::Custom {
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            strictly_convex,
            superlinear,
        },
    })
}

impl<S: Scalar> CostSpec<S> {
    /// θ(x).
    pub fn eval(&self, x: S) -> S {
        match &self.kind {
            Kind::Power { p, scale } => {
                let a = x.abs();
                let two = cst::<S>(2.0);
                let three = cst::<S>(3.0);
                let four = cst::<S>(4.0);
                // exact-integer fast paths keep grid oracles cheap
                let pow = if *p == two {
                    a * a
                } else if *p == three {
                    a * a * a
                } else if *p == four {
                    let s = a * a;
                    s * s
                } else {
                    a.powf(*p)
                };
                *scale * pow
            }
            Kind::Custom { eval, .. } => eval(x),
        }
    }

    /// θ'(x); odd and strictly increasing for the power family.
    pub fn deriv(&self, x: S) -> S {
        match &self.kind {
            Kind::Power { p, scale } => {
                let a = x.abs();
                let two = cst::<S>(2.0);
                let three = cst::<S>(3.0);
                let four = cst::<S>(4.0);
                let pow = if *p == two {
                    a
                } else if *p == three {
                    a * a
                } else if *p == four {
                    a * a * a
                } else {
                    a.powf(*p - S::one())
                };
                *scale * *p * pow * x.signum()
            }
            Kind::Custom { deriv, .. } => deriv(x),
        }
    }

    /// θ'⁻¹(s) on the closure of θ'(ℝ).
    ///
    /// Closed form for the power family; bisection with bracket expansion
    /// (tolerance 1e-12, 200 iterations) for custom costs.
    pub fn inv_deriv(&self, s: S) -> Result<S> {
        match &self.kind {
            Kind::Power { p, scale } => {
                let base = s.abs() / (*scale * *p);
                Ok(base.powf(S::one() / (*p - S::one())) * s.signum())
            }
            Kind::Custom {
                deriv,
                strictly_convex,
                ..
            } => {
                if !strictly_convex {
                    return Err(Error::Capability(
                        "θ'⁻¹ requires a strictly convex cost".into(),
                    ));
                }
                let g = |y: S| deriv(y) - s;
                match bracket_monotone_root(g, S::zero(), S::one(), BRACKET_DOUBLINGS) {
                    Some((lo, hi)) => Ok(bisect_monotone(
                        g,
                        lo,
                        hi,
                        cst::<S>(INV_DERIV_TOL),
                        INV_DERIV_ITERS,
                    )),
                    None => Err(Error::Domain(format!(
                        "slope {s} lies outside the range of θ'"
                    ))),
                }
            }
        }
    }

    /// Like [`Self::inv_deriv`] but clamps slopes outside θ'(ℝ) to the last
    /// reachable point of the bracket search instead of failing.
    pub(crate) fn inv_deriv_clamped(&self, s: S) -> Result<S> {
        match self.inv_deriv(s) {
            Ok(x) => Ok(x),
            Err(Error::Domain(_)) => {
                // the range is an interval around 0; clamp to the furthest
                // bracket endpoint on the correct side
                let reach = cst::<S>(2.0).powi(BRACKET_DOUBLINGS as i32);
                Ok(if s >= S::zero() { reach } else { -reach })
            }
            Err(e) => Err(e),
        }
    }

    /// Legendre conjugate `θ*(s) = sup_x (s·x − θ(x))`.
    ///
    /// Closed form for the power family; monotone root-finding of
    /// `s = θ'(x)` otherwise. For non-superlinear costs, `s` must lie in the
    /// finite-conjugate domain.
    pub fn conjugate(&self, s: S) -> Result<S> {
        match &self.kind {
            Kind::Power { p, scale } => {
                // sup at |x| = (|s| / (p·scale))^(1/(p-1))
                let q = *p / (*p - S::one());
                let base = s.abs() / (*p * *scale);
                Ok((*p - S::one()) * *scale * base.powf(q))
            }
            Kind::Custom { eval, .. } => {
                let x = self.inv_deriv(s)?;
                Ok(s * x - eval(x))
            }
        }
    }

    /// Whether θ is strictly convex.
    pub fn strictly_convex(&self) -> bool {
        match &self.kind {
            Kind::Power { .. } => true,
            Kind::Custom {
                strictly_convex, ..
            } => *strictly_convex,
        }
    }

    /// Whether θ' is unbounded (superlinear growth).
    pub fn superlinear(&self) -> bool {
        match &self.kind {
            Kind::Power { .. } => true,
            Kind::Custom { superlinear, .. } => *superlinear,
        }
    }

    /// `c · θ` for `c > 0`.
    pub fn scaled(&self, c: S) -> Result<CostSpec<S>> {
        if !(c > S::zero()) || !c.is_finite() {
            return Err(Error::Parameter(format!(
                "cost scaling must be positive, got {c}"
            )));
        }
        Ok(match &self.kind {
            Kind::Power { p, scale } => CostSpec {
                kind: Kind::Power {
                    p: *p,
                    scale: *scale * c,
                },
            },
            Kind::Custom {
                eval,
                deriv,
                strictly_convex,
                superlinear,
            } => {
                let (e, d) = (eval.clone(), deriv.clone());
                CostSpec {
                    kind: Kind::Custom {
                        eval: Arc::new(move |x| c * e(x)),
                        deriv: Arc::new(move |x| c * d(x)),
                        strictly_convex: *strictly_convex,
                        superlinear: *superlinear,
                    },
                }
            }
        })
    }

    /// Pointwise sum of two costs.
    pub fn sum(a: &CostSpec<S>, b: &CostSpec<S>) -> CostSpec<S> {
        let (a1, b1) = (a.clone(), b.clone());
        let (a2, b2) = (a.clone(), b.clone());
        CostSpec {
            kind: Kind::Custom {
                eval: Arc::new(move |x| a1.eval(x) + b1.eval(x)),
                deriv: Arc::new(move |x| a2.deriv(x) + b2.deriv(x)),
                strictly_convex: a.strictly_convex() || b.strictly_convex(),
                superlinear: a.superlinear() || b.superlinear(),
            },
        }
    }
}

/// A decomposition α + β = θ of a cost into two convex costs.
#[derive(Debug, Clone)]
pub struct CostSplit<S: Scalar> {
    /// First summand.
    pub alpha: CostSpec<S>,
    /// Second summand.
    pub beta: CostSpec<S>,
    /// The total cost θ = α + β.
    pub theta: CostSpec<S>,
}

impl<S: Scalar> CostSplit<S> {
    /// Builds a split from all three costs, checking α + β = θ on a sampled
    /// grid within 1e-9.
    pub fn new(alpha: CostSpec<S>, beta: CostSpec<S>, theta: CostSpec<S>) -> Result<Self> {
        for i in 0..=32 {
            let x = cst::<S>(-4.0 + 0.25 * i as f64);
            let gap = (alpha.eval(x) + beta.eval(x) - theta.eval(x)).abs();
            if gap > cst::<S>(1e-9) {
                return Err(Error::Parameter(format!(
                    "α + β differs from θ by {gap} at {x}"
                )));
            }
        }
        Ok(Self { alpha, beta, theta })
    }

    /// Builds a split from the two summands; θ is their pointwise sum, so the
    /// split identity holds exactly.
    pub fn from_parts(alpha: CostSpec<S>, beta: CostSpec<S>) -> Self {
        let theta = CostSpec::sum(&alpha, &beta);
        Self { alpha, beta, theta }
    }
}

/// Proportional split `α = λ·θ`, `β = (1 − λ)·θ` for `λ ∈ (0, 1)`.
pub fn split_proportional<S: Scalar>(theta: &CostSpec<S>, lambda: S) -> Result<CostSplit<S>> {
    if !(lambda > S::zero() && lambda < S::one()) {
        return Err(Error::Parameter(format!(
            "proportional split needs λ in (0, 1), got {lambda}"
        )));
    }
    Ok(CostSplit {
        alpha: theta.scaled(lambda)?,
        beta: theta.scaled(S::one() - lambda)?,
        theta: theta.clone(),
    })
}
