//! The Hopf-Lax (inf-convolution) operator
//! `Q_t f(x) = inf_y { f(y) + t θ((y − x)/t) }` for convex one-dimensional
//! data.
//!
//! For strictly convex θ and convex C¹ `f` the infimum is attained at the
//! unique root of the stationarity condition `f'(y) + θ'((y − x)/t) = 0`,
//! which this module solves by bracketed bisection. An exhaustive grid
//! oracle arbitrates the solver, and [`split_cost`] realizes the
//! decomposition `f = f₁ + f₂` with `Q_t^θ f = Q_t^α f₁ + Q_t^β f₂` for any
//! cost split α + β = θ.

use std::sync::Arc;

use crate::costs::{CostSpec, CostSplit};
use crate::numerics::{adaptive_simpson, golden_section_min, par_map_indexed};
use crate::scalar::{cst, RealFn, Scalar};
use crate::{Error, Result};

/// Smallest admissible time; the operator degenerates as t → 0⁺ and the
/// initial condition is `f` itself.
const MIN_TIME: f64 = 1e-8;
/// Quadrature tolerance for antiderivatives built by [`split_cost`].
const SPLIT_QUAD_TOL: f64 = 1e-10;

/// How the function is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    /// Closed-form evaluation.
    Analytic,
    /// Values obtained by quadrature of a derivative.
    Quadrature,
}

/// A convex function ℝ → ℝ with derivative access, bounded below by
/// `lower_bound` (possibly −∞ for affine data).
#[derive(Clone)]
pub struct ConvexFunction1D<S: Scalar> {
    eval: RealFn<S>,
    deriv: RealFn<S>,
    lower_bound: S,
    repr: Repr,
}

impl<S: Scalar> std::fmt::Debug for ConvexFunction1D<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ConvexFunction1D(repr={:?}, lower_bound={})",
            self.repr, self.lower_bound
        )
    }
}

impl<S: Scalar> ConvexFunction1D<S> {
    /// Wraps `eval`/`deriv` closures, spot-checking convexity (derivative
    /// monotone, subgradient inequality) on a coarse grid.
    pub fn from_fns(
        eval: impl Fn(S) -> S + Send + Sync + 'static,
        deriv: impl Fn(S) -> S + Send + Sync + 'static,
        lower_bound: S,
    ) -> Result<Self> {
        let slack = cst::<S>(1e-9);
        let mut prev = S::neg_infinity();
        let grid: Vec<S> = (0..=16).map(|i| cst::<S>(-4.0 + 0.5 * i as f64)).collect();
        for &x in &grid {
            let d = deriv(x);
            if d + slack < prev {
                return Err(Error::Parameter(format!(
                    "derivative must be non-decreasing, decrease detected at {x}"
                )));
            }
            prev = d;
            if eval(x) + slack < lower_bound {
                return Err(Error::Parameter(format!(
                    "f({x}) lies below the stated lower bound"
                )));
            }
        }
        for &x in &grid {
            for &y in &[cst::<S>(-3.3), cst::<S>(0.7), cst::<S>(2.9)] {
                if eval(y) + slack < eval(x) + deriv(x) * (y - x) {
                    return Err(Error::Parameter(
                        "subgradient inequality fails; function is not convex".into(),
                    ));
                }
            }
        }
        Ok(Self {
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            lower_bound,
            repr: Repr::Analytic,
        })
    }

    /// Internal constructor for quadrature-defined functions; the convexity
    /// of these is established by the calling code, so no sampling is done.
    pub(crate) fn from_parts_unchecked(
        eval: RealFn<S>,
        deriv: RealFn<S>,
        lower_bound: S,
        repr: Repr,
    ) -> Self {
        Self {
            eval,
            deriv,
            lower_bound,
            repr,
        }
    }

    /// `scale · |x|^p` for `p >= 1`, `scale > 0` (C¹ for `p > 1`).
    pub fn power_abs(p: S, scale: S) -> Result<Self> {
        if !(p >= S::one()) || !(scale > S::zero()) {
            return Err(Error::Parameter(format!(
                "power function needs p >= 1 and scale > 0, got p={p}, scale={scale}"
            )));
        }
        let (p1, s1) = (p, scale);
        let (p2, s2) = (p, scale);
        Ok(Self {
            eval: Arc::new(move |x: S| s1 * x.abs().powf(p1)),
            deriv: Arc::new(move |x: S| s2 * p2 * x.abs().powf(p2 - S::one()) * x.signum()),
            lower_bound: S::zero(),
            repr: Repr::Analytic,
        })
    }

    /// Affine function `slope·x + intercept`.
    pub fn linear(slope: S, intercept: S) -> Self {
        let lb = if slope == S::zero() {
            intercept
        } else {
            S::neg_infinity()
        };
        Self {
            eval: Arc::new(move |x: S| slope * x + intercept),
            deriv: Arc::new(move |_| slope),
            lower_bound: lb,
            repr: Repr::Analytic,
        }
    }

    /// Constant function.
    pub fn constant(c: S) -> Self {
        Self::linear(S::zero(), c)
    }

    /// `log(1 + e^x)`, evaluated in an overflow-safe form.
    pub fn softplus() -> Self {
        Self {
            eval: Arc::new(|x: S| {
                if x > cst::<S>(30.0) {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }),
            deriv: Arc::new(|x: S| {
                if x >= S::zero() {
                    S::one() / (S::one() + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (S::one() + e)
                }
            }),
            lower_bound: S::zero(),
            repr: Repr::Analytic,
        }
    }

    /// f(x).
    pub fn eval(&self, x: S) -> S {
        (self.eval)(x)
    }

    /// f'(x), non-decreasing.
    pub fn deriv(&self, x: S) -> S {
        (self.deriv)(x)
    }

    /// A lower bound for f (−∞ when none is known).
    pub fn lower_bound(&self) -> S {
        self.lower_bound
    }

    /// Representation tag.
    pub fn repr(&self) -> Repr {
        self.repr
    }
}

/// Result of one Hopf-Lax evaluation.
#[derive(Debug, Clone, Copy)]
pub struct HopfLaxResult<S> {
    /// `Q_t f(x)`.
    pub value: S,
    /// The minimizing point `T_t(x)`.
    pub minimizer: S,
    /// `|f'(T_t) + θ'((T_t − x)/t)|` at the reported minimizer.
    pub stationarity_residual: S,
}

/// Evaluates `Q_t f(x) = inf_y { f(y) + t θ((y − x)/t) }` through the
/// stationarity condition `f'(y) + θ'((y − x)/t) = 0`.
///
/// Requires strictly convex θ (the objective then has a unique minimum) and
/// `t >= 1e-8`. When the stationarity equation has no root in the expanded
/// search bracket, falls back to golden-section minimization of the strictly
/// convex objective.
pub fn hopf_lax<S: Scalar>(
    f: &ConvexFunction1D<S>,
    theta: &CostSpec<S>,
    t: S,
    x: S,
) -> Result<HopfLaxResult<S>> {
    if !theta.strictly_convex() {
        return Err(Error::Capability(
            "hopf_lax requires a strictly convex cost; use grid_infconv_oracle for general convex costs"
                .into(),
        ));
    }
    if !(t >= cst::<S>(MIN_TIME)) || !t.is_finite() {
        return Err(Error::Parameter(format!(
            "time must satisfy t >= {MIN_TIME}, got {t}"
        )));
    }

    let station = |y: S| f.deriv(y) + theta.deriv((y - x) / t);
    let objective = |y: S| f.eval(y) + t * theta.eval((y - x) / t);

    // Initial half-width from the inverse derivative at the local slope
    // scale; the stationarity function is monotone, so expansion is safe.
    let slope_scale = f.deriv(x).abs().max(S::one());
    let mut w = match theta.inv_deriv(slope_scale) {
        Ok(d) => (t * d.abs()).max(cst::<S>(1e-6)),
        Err(_) => S::one(),
    };
    let two = cst::<S>(2.0);
    let mut lo = x - w;
    let mut hi = x + w;
    let mut bracketed = false;
    for _ in 0..60 {
        let (glo, ghi) = (station(lo), station(hi));
        if glo <= S::zero() && ghi >= S::zero() {
            bracketed = true;
            break;
        }
        w = w * two;
        if glo > S::zero() {
            lo = x - w;
        }
        if ghi < S::zero() {
            hi = x + w;
        }
        if !lo.is_finite() || !hi.is_finite() {
            break;
        }
    }

    let scale = S::one().max(lo.abs()).max(hi.abs());
    let minimizer = if bracketed {
        crate::numerics::bisect_monotone(station, lo, hi, cst::<S>(1e-13) * scale, 200)
    } else {
        golden_section_min(objective, lo, hi, cst::<S>(1e-11) * scale, 300)
    };

    Ok(HopfLaxResult {
        value: objective(minimizer),
        minimizer,
        stationarity_residual: station(minimizer).abs(),
    })
}

/// The forward map `U_t` inverse to the Hopf-Lax minimizer map `T_t`:
/// `U_t(x) = x − t·θ'⁻¹(−f'(x))`, which for even costs is the familiar
/// `x + t·θ'⁻¹(f'(x))`.
///
/// Round trip: `hopf_lax(f, θ, t, U_t(x)).minimizer == x` up to solver
/// tolerance. Errors with a domain error when `f'(x)` lies outside the
/// closure of θ'(ℝ).
pub fn forward_map<S: Scalar>(
    f: &ConvexFunction1D<S>,
    theta: &CostSpec<S>,
    t: S,
    x: S,
) -> Result<S> {
    if !theta.strictly_convex() {
        return Err(Error::Capability(
            "forward_map requires a strictly convex cost".into(),
        ));
    }
    if !(t >= cst::<S>(MIN_TIME)) || !t.is_finite() {
        return Err(Error::Parameter(format!(
            "time must satisfy t >= {MIN_TIME}, got {t}"
        )));
    }
    let d = theta.inv_deriv(-f.deriv(x))?;
    Ok(x - t * d)
}

/// Splits `f` into `f₁ + f₂` along a cost split α + β = θ so that
/// `Q_t^θ f = Q_t^α f₁ + Q_t^β f₂` for every t > 0.
///
/// `f₁' = α' ∘ θ'⁻¹ ∘ f'` where θ'⁻¹ is defined, extended affinely (slope
/// clamped at the last reachable point) outside; `f₁` itself is the adaptive
/// Simpson antiderivative from 0 and `f₂ = f − f₁`. Both returned functions
/// are convex.
pub fn split_cost<S: Scalar>(
    f: &ConvexFunction1D<S>,
    split: &CostSplit<S>,
) -> Result<(ConvexFunction1D<S>, ConvexFunction1D<S>)> {
    if !split.theta.strictly_convex() {
        return Err(Error::Capability(
            "split_cost requires θ'⁻¹, so θ must be strictly convex".into(),
        ));
    }

    let alpha = split.alpha.clone();
    let theta = split.theta.clone();
    let fd = f.clone();
    let f1_deriv: RealFn<S> = Arc::new(move |u: S| {
        let x = theta
            .inv_deriv_clamped(fd.deriv(u))
            .expect("strict convexity checked at entry");
        alpha.deriv(x)
    });

    let f1d = f1_deriv.clone();
    let f1_eval: RealFn<S> =
        Arc::new(move |x: S| adaptive_simpson(&|u| f1d(u), S::zero(), x, cst::<S>(SPLIT_QUAD_TOL)));

    let f1 = ConvexFunction1D::from_parts_unchecked(
        f1_eval.clone(),
        f1_deriv.clone(),
        S::neg_infinity(),
        Repr::Quadrature,
    );

    let fe = f.clone();
    let f2_eval: RealFn<S> = Arc::new(move |x: S| fe.eval(x) - f1_eval(x));
    let fd2 = f.clone();
    let f2_deriv: RealFn<S> = Arc::new(move |x: S| fd2.deriv(x) - f1_deriv(x));
    let f2 = ConvexFunction1D::from_parts_unchecked(
        f2_eval,
        f2_deriv,
        S::neg_infinity(),
        Repr::Quadrature,
    );

    Ok((f1, f2))
}

/// A uniformly spaced grid `start, start + step, …` with `len` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<S> {
    start: S,
    step: S,
    len: usize,
}

impl<S: Scalar> Grid<S> {
    /// Builds a grid from its first node, spacing, and node count.
    pub fn new(start: S, step: S, len: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() || !(step > S::zero()) {
            return Err(Error::Parameter(format!(
                "grid needs finite start and positive step, got start={start}, step={step}"
            )));
        }
        if len == 0 {
            return Err(Error::Parameter("grid needs at least one node".into()));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering `[a, b]` with spacing `step` (the last node is the
    /// largest `a + k·step <= b + step/2`).
    pub fn from_range(a: S, b: S, step: S) -> Result<Self> {
        if !(b >= a) {
            return Err(Error::Parameter(format!("empty range [{a}, {b}]")));
        }
        if !(step > S::zero()) {
            return Err(Error::Parameter(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let n = ((b - a) / step + cst::<S>(0.5)).floor();
        let len = n.to_usize().unwrap_or(0) + 1;
        Self::new(a, step, len)
    }

    /// Node `start + step · i`.
    pub fn at(&self, i: usize) -> S {
        self.start + self.step * S::from_usize(i).unwrap()
    }

    /// First node.
    pub fn start(&self) -> S {
        self.start
    }

    /// Spacing between nodes.
    pub fn step(&self) -> S {
        self.step
    }

    /// Node count.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Whether the grid is empty (never true for constructed grids).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Iterator over the nodes.
    pub fn points(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }
}

/// Real values sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridFunction<S: Scalar> {
    /// The sampling grid.
    pub grid: Grid<S>,
    /// One value per node.
    pub values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    /// Wraps explicit values; their count must match the grid and all must
    /// be finite.
    pub fn new(grid: Grid<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "value count {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("grid values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples a function on the grid.
    pub fn sample(grid: Grid<S>, f: impl Fn(S) -> S) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values)
    }
}

/// Exhaustive inf-convolution on the grid:
/// `g_i = min_j [ f_j + t θ((x_j − x_i)/t) ]`.
///
/// O(m²), any convex θ. This is the arbitration oracle for [`hopf_lax`] and
/// [`split_cost`].
pub fn grid_infconv_oracle<S: Scalar>(
    f: &GridFunction<S>,
    theta: &CostSpec<S>,
    t: S,
) -> GridFunction<S> {
    let m = f.grid.len();
    let step = f.grid.step();
    // θ evaluated on the signed difference lattice once:
    // x_j − x_i = (j − i)·h, offset by m−1 (costs may be asymmetric).
    let theta_tab: Vec<S> = (0..2 * m - 1)
        .map(|k| {
            let d = S::from_isize(k as isize - (m as isize - 1)).unwrap();
            t * theta.eval(step * d / t)
        })
        .collect();
    let values = par_map_indexed(m, |i| {
        let mut best = S::infinity();
        for (j, fj) in f.values.iter().enumerate() {
            let c = *fj + theta_tab[j + m - 1 - i];
            if c < best {
                best = c;
            }
        }
        best
    });
    GridFunction {
        grid: f.grid,
        values,
    }
}

/// Sup over interior product-grid nodes of the Hamilton-Jacobi residual
/// `|∂_t v + θ*(∂_x v)|` where `v(x, t) = Q_t f(x)` and the partial
/// derivatives are central differences.
///
/// Requires strictly convex, superlinear θ (so the conjugate is finite
/// everywhere) and at least three nodes per axis. The residual vanishes at
/// first order as the spacings shrink.
pub fn hj_residual<S: Scalar>(
    f: &ConvexFunction1D<S>,
    theta: &CostSpec<S>,
    t_grid: &Grid<S>,
    x_grid: &Grid<S>,
) -> Result<S> {
    if !theta.strictly_convex() || !theta.superlinear() {
        return Err(Error::Capability(
            "hj_residual needs the conjugate θ*, so θ must be strictly convex and superlinear"
                .into(),
        ));
    }
    if t_grid.len() < 3 || x_grid.len() < 3 {
        return Err(Error::Parameter(
            "hj_residual needs at least 3 nodes per axis".into(),
        ));
    }
    if !(t_grid.start() >= cst::<S>(MIN_TIME)) {
        return Err(Error::Parameter(format!("times must be >= {MIN_TIME}")));
    }

    let (nt, nx) = (t_grid.len(), x_grid.len());
    let v = par_map_indexed(nt * nx, |k| {
        let (i, j) = (k / nx, k % nx);
        hopf_lax(f, theta, t_grid.at(i), x_grid.at(j))
            .map(|r| r.value)
            .unwrap_or(S::nan())
    });
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Parameter(
            "Hopf-Lax evaluation failed on the grid".into(),
        ));
    }

    let two = cst::<S>(2.0);
    let (dt, dx) = (t_grid.step(), x_grid.step());
    let mut worst = S::zero();
    for i in 1..nt - 1 {
        for j in 1..nx - 1 {
            let v_t = (v[(i + 1) * nx + j] - v[(i - 1) * nx + j]) / (two * dt);
            let v_x = (v[i * nx + j + 1] - v[i * nx + j - 1]) / (two * dx);
            let r = (v_t + theta.conjugate(v_x)?).abs();
            if r > worst {
                worst = r;
            }
        }
    }
    Ok(worst)
}
