//! Convex C² functions on ℝⁿ whose gradient is everywhere an eigenvector of
//! their Hessian.
//!
//! On the line every convex C² function has this property; in higher
//! dimension the family is exactly the class for which the symmetry
//! condition `∂_i u ∂_j f = ∂_j u ∂_i f` holds with `u = ‖∇f‖`. Members are
//! closed under the radial reshaping `∇φ = G(‖∇f‖)·∇f/‖∇f‖` for increasing
//! `G` with `G(0) = 0`; the field is curl-free precisely on the family,
//! which is what [`build_potential`] exploits and [`curl_residual`]
//! verifies. [`verify_map_optimality`] uses those potentials to certify that
//! a monotone map transports optimally for every convex cost.

use std::sync::Arc;

use crate::costs::CostSpec;
use crate::numerics::{gauss_legendre_integrate, par_map_indexed, symmetric_eigenvalues};
use crate::scalar::{cst, Scalar};
use crate::{Error, Result};

/// Finite-difference step for gradients of scalar functions.
const GRAD_STEP: f64 = 1e-6;
/// Finite-difference step for Hessians and curls.
const HESS_STEP: f64 = 1e-5;
/// Gradient norms at or below this are treated as zero.
const ZERO_GRAD: f64 = 1e-10;
/// Eigenvalue slack in the convexity check.
const PSD_SLACK: f64 = 1e-7;

type PointFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
type GradFn<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;
type HessFn<S> = Arc<dyn Fn(&[S]) -> Vec<Vec<S>> + Send + Sync>;

/// A scalar function on ℝⁿ with gradient and Hessian access (analytic for
/// the built-in families, central-difference fallback for custom ones).
#[derive(Clone)]
pub struct SmoothFunctionND<S: Scalar> {
    dim: usize,
    eval: PointFn<S>,
    gradient: GradFn<S>,
    hessian: HessFn<S>,
}

impl<S: Scalar> std::fmt::Debug for SmoothFunctionND<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SmoothFunctionND(dim={})", self.dim)
    }
}

fn fd_gradient<S: Scalar>(f: &PointFn<S>, x: &[S]) -> Vec<S> {
    let h = cst::<S>(GRAD_STEP);
    let two_h = cst::<S>(2.0) * h;
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = p[i];
            p[i] = xi + h;
            let up = f(&p);
            p[i] = xi - h;
            let dn = f(&p);
            p[i] = xi;
            (up - dn) / two_h
        })
        .collect()
}

fn fd_hessian_of_grad<S: Scalar>(g: &GradFn<S>, x: &[S]) -> Vec<Vec<S>> {
    let n = x.len();
    let h = cst::<S>(HESS_STEP);
    let two_h = cst::<S>(2.0) * h;
    let mut p = x.to_vec();
    let mut cols: Vec<Vec<S>> = Vec::with_capacity(n);
    for j in 0..n {
        let xj = p[j];
        p[j] = xj + h;
        let up = g(&p);
        p[j] = xj - h;
        let dn = g(&p);
        p[j] = xj;
        cols.push(up.iter().zip(&dn).map(|(u, d)| (*u - *d) / two_h).collect());
    }
    // symmetrize: H[i][j] = (∂_j g_i + ∂_i g_j)/2
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (cols[j][i] + cols[i][j]) * cst::<S>(0.5))
                .collect()
        })
        .collect()
}

impl<S: Scalar> SmoothFunctionND<S> {
    /// Dimension of the domain.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// f(x).
    pub fn eval(&self, x: &[S]) -> S {
        (self.eval)(x)
    }

    /// ∇f(x).
    pub fn gradient(&self, x: &[S]) -> Vec<S> {
        (self.gradient)(x)
    }

    /// Hess f(x), symmetric.
    pub fn hessian(&self, x: &[S]) -> Vec<Vec<S>> {
        (self.hessian)(x)
    }

    /// Linear form `⟨c, x⟩`.
    pub fn linear_form(c: Vec<S>) -> Self {
        let dim = c.len();
        let c1 = c.clone();
        let c2 = c.clone();
        Self {
            dim,
            eval: Arc::new(move |x: &[S]| x.iter().zip(&c1).map(|(xi, ci)| *xi * *ci).sum()),
            gradient: Arc::new(move |_: &[S]| c2.clone()),
            hessian: Arc::new(move |_: &[S]| vec![vec![S::zero(); dim]; dim]),
        }
    }

    /// Radial function `g(‖x‖)` from a profile with two derivatives;
    /// `g(0) = 0`, `g` convex and non-decreasing on `[0, ∞)`.
    pub fn radial(
        dim: usize,
        g: impl Fn(S) -> S + Send + Sync + 'static,
        dg: impl Fn(S) -> S + Send + Sync + 'static,
        ddg: impl Fn(S) -> S + Send + Sync + 'static,
    ) -> Self {
        let norm = |x: &[S]| x.iter().map(|v| *v * *v).sum::<S>().sqrt();
        let dg1 = Arc::new(dg);
        let dg2 = dg1.clone();
        let ddg = Arc::new(ddg);
        Self {
            dim,
            eval: Arc::new(move |x: &[S]| g(norm(x))),
            gradient: Arc::new(move |x: &[S]| {
                let r = norm(x);
                if r <= cst::<S>(ZERO_GRAD) {
                    return vec![S::zero(); x.len()];
                }
                let s = dg1(r) / r;
                x.iter().map(|v| s * *v).collect()
            }),
            hessian: Arc::new(move |x: &[S]| {
                let n = x.len();
                let r = norm(x);
                if r <= cst::<S>(ZERO_GRAD) {
                    // limit g''(0)·I for profiles with g'(0) = 0
                    let d = ddg(S::zero());
                    return (0..n)
                        .map(|i| (0..n).map(|j| if i == j { d } else { S::zero() }).collect())
                        .collect();
                }
                let gp = dg2(r);
                let gpp = ddg(r);
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let e = x[i] * x[j] / (r * r);
                                let id = if i == j { S::one() } else { S::zero() };
                                gpp * e + gp / r * (id - e)
                            })
                            .collect()
                    })
                    .collect()
            }),
        }
    }

    /// `a‖x‖² + ⟨c, x⟩`.
    pub fn quad_plus_linear(a: S, c: Vec<S>) -> Self {
        let dim = c.len();
        let c1 = c.clone();
        let c2 = c.clone();
        let two = cst::<S>(2.0);
        Self {
            dim,
            eval: Arc::new(move |x: &[S]| {
                let sq: S = x.iter().map(|v| *v * *v).sum();
                a * sq + x.iter().zip(&c1).map(|(xi, ci)| *xi * *ci).sum::<S>()
            }),
            gradient: Arc::new(move |x: &[S]| {
                x.iter()
                    .zip(&c2)
                    .map(|(xi, ci)| two * a * *xi + *ci)
                    .collect()
            }),
            hessian: Arc::new(move |x: &[S]| {
                let n = x.len();
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| if i == j { two * a } else { S::zero() })
                            .collect()
                    })
                    .collect()
            }),
        }
    }

    /// Quadratic form `xᵀ A x` for a symmetric matrix `A`.
    pub fn quadratic_form(a: Vec<Vec<S>>) -> Result<Self> {
        let n = a.len();
        for row in &a {
            if row.len() != n {
                return Err(Error::Shape("quadratic form matrix must be square".into()));
            }
        }
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if (*v - a[j][i]).abs() > cst::<S>(1e-12) {
                    return Err(Error::Parameter(
                        "quadratic form matrix must be symmetric".into(),
                    ));
                }
            }
        }
        let a1 = a.clone();
        let a2 = a.clone();
        let two = cst::<S>(2.0);
        Ok(Self {
            dim: n,
            eval: Arc::new(move |x: &[S]| {
                let mut acc = S::zero();
                for (xi, row) in x.iter().zip(&a1) {
                    for (xj, aij) in x.iter().zip(row) {
                        acc = acc + *xi * *aij * *xj;
                    }
                }
                acc
            }),
            gradient: Arc::new(move |x: &[S]| {
                (0..x.len())
                    .map(|i| two * (0..x.len()).map(|j| a2[i][j] * x[j]).sum::<S>())
                    .collect()
            }),
            hessian: Arc::new(move |_: &[S]| {
                a.iter()
                    .map(|row| row.iter().map(|v| two * *v).collect())
                    .collect()
            }),
        })
    }

    /// Wraps a bare evaluation closure; gradient and Hessian fall back to
    /// central differences (steps 1e-6 and 1e-5).
    pub fn from_eval(dim: usize, f: impl Fn(&[S]) -> S + Send + Sync + 'static) -> Self {
        let eval: PointFn<S> = Arc::new(f);
        let e1 = eval.clone();
        let gradient: GradFn<S> = Arc::new(move |x: &[S]| fd_gradient(&e1, x));
        let g1 = gradient.clone();
        Self {
            dim,
            eval,
            gradient,
            hessian: Arc::new(move |x: &[S]| fd_hessian_of_grad(&g1, x)),
        }
    }

    /// Builds a function from its gradient field: values come from line
    /// integration out of the origin, the Hessian from central differences
    /// of the field. Only meaningful when the field is conservative.
    pub fn from_gradient_field(
        dim: usize,
        grad: impl Fn(&[S]) -> Vec<S> + Send + Sync + 'static,
    ) -> Self {
        let gradient: GradFn<S> = Arc::new(grad);
        let g1 = gradient.clone();
        let g2 = gradient.clone();
        Self {
            dim,
            eval: Arc::new(move |x: &[S]| line_integral(&g1, &vec![S::zero(); x.len()], x)),
            gradient,
            hessian: Arc::new(move |x: &[S]| fd_hessian_of_grad(&g2, x)),
        }
    }

    /// The pointwise negation −f.
    pub fn negated(&self) -> Self {
        let e = self.eval.clone();
        let g = self.gradient.clone();
        let h = self.hessian.clone();
        Self {
            dim: self.dim,
            eval: Arc::new(move |x: &[S]| -e(x)),
            gradient: Arc::new(move |x: &[S]| g(x).into_iter().map(|v| -v).collect()),
            hessian: Arc::new(move |x: &[S]| {
                h(x).into_iter()
                    .map(|row| row.into_iter().map(|v| -v).collect())
                    .collect()
            }),
        }
    }
}

/// Straight-segment line integral `∫ ⟨F(a + s(b − a)), b − a⟩ ds` by
/// adaptive 64-node Gauss-Legendre panels.
fn line_integral<S: Scalar>(field: &GradFn<S>, a: &[S], b: &[S]) -> S {
    let dir: Vec<S> = b.iter().zip(a).map(|(bi, ai)| *bi - *ai).collect();
    let a = a.to_vec();
    gauss_legendre_integrate(
        &|s: S| {
            let p: Vec<S> = a.iter().zip(&dir).map(|(ai, di)| *ai + s * *di).collect();
            field(&p).iter().zip(&dir).map(|(fi, di)| *fi * *di).sum()
        },
        S::zero(),
        S::one(),
        cst::<S>(1e-9),
    )
}

/// A vector field on ℝⁿ.
#[derive(Clone)]
pub struct VectorFieldND<S: Scalar> {
    dim: usize,
    eval: GradFn<S>,
}

impl<S: Scalar> std::fmt::Debug for VectorFieldND<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VectorFieldND(dim={})", self.dim)
    }
}

impl<S: Scalar> VectorFieldND<S> {
    /// Wraps a closure.
    pub fn from_fn(dim: usize, f: impl Fn(&[S]) -> Vec<S> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(f),
        }
    }

    /// The gradient field of a smooth function.
    pub fn gradient_of(f: &SmoothFunctionND<S>) -> Self {
        let g = f.gradient.clone();
        Self {
            dim: f.dim,
            eval: Arc::new(move |x: &[S]| g(x)),
        }
    }

    /// Dimension of the domain.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// F(x).
    pub fn eval(&self, x: &[S]) -> Vec<S> {
        (self.eval)(x)
    }
}

/// Outcome of [`class_f_test`].
#[derive(Debug, Clone)]
pub struct MembershipReport<S> {
    /// Whether the function passed both the symmetry and convexity checks.
    pub in_class: bool,
    /// Worst `|∂_i u ∂_j f − ∂_j u ∂_i f|`, normalized by the local gradient
    /// magnitude, over all sample points and index pairs.
    pub max_symmetry_residual: S,
    /// Number of sample points where the Hessian has an eigenvalue below
    /// −1e-7.
    pub convexity_violations: usize,
    /// Location of the worst symmetry residual, when one was evaluated.
    pub failing_point: Option<Vec<S>>,
}

/// Tests membership of `f` in the gradient-eigenvector family at the given
/// points: with `u = ‖∇f‖`, checks `∂_i u ∂_j f = ∂_j u ∂_i f` for all
/// `i < j` (within `tol`, normalized by `u`) together with positive
/// semi-definiteness of the Hessian. Points with `u <= 1e-10` are skipped
/// for the symmetry condition, which is vacuous there.
pub fn class_f_test<S: Scalar>(
    f: &SmoothFunctionND<S>,
    points: &[Vec<S>],
    tol: S,
) -> Result<MembershipReport<S>> {
    if points.is_empty() {
        return Err(Error::Parameter(
            "membership test needs at least one point".into(),
        ));
    }
    if !(tol > S::zero()) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = f.dim;
    let mut worst = S::zero();
    let mut worst_point: Option<Vec<S>> = None;
    let mut violations = 0usize;

    for p in points {
        if p.len() != n {
            return Err(Error::Shape(format!(
                "point dimension {} does not match function dimension {n}",
                p.len()
            )));
        }
        let grad = f.gradient(p);
        let hess = f.hessian(p);
        if hess.len() != n || hess.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("hessian shape mismatch".into()));
        }

        let mut flat = Vec::with_capacity(n * n);
        for row in &hess {
            flat.extend(row.iter().copied());
        }
        let eigs = symmetric_eigenvalues(&flat, n);
        if eigs
            .first()
            .map(|e| *e < -cst::<S>(PSD_SLACK))
            .unwrap_or(false)
        {
            violations += 1;
        }

        let u: S = grad.iter().map(|v| *v * *v).sum::<S>().sqrt();
        if u <= cst::<S>(ZERO_GRAD) {
            continue;
        }
        // ∂_i u = (H ∇f)_i / u
        let du: Vec<S> = (0..n)
            .map(|i| (0..n).map(|k| hess[i][k] * grad[k]).sum::<S>() / u)
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let r = (du[i] * grad[j] - du[j] * grad[i]).abs() / u;
                if r > worst {
                    worst = r;
                    worst_point = Some(p.clone());
                }
            }
        }
    }

    Ok(MembershipReport {
        in_class: worst <= tol && violations == 0,
        max_symmetry_residual: worst,
        convexity_violations: violations,
        failing_point: worst_point,
    })
}

/// `‖Hess f ∇f − λ∇f‖ / ‖∇f‖` with the Rayleigh quotient
/// `λ = ⟨∇f, Hess f ∇f⟩ / ‖∇f‖²`; zero exactly when the gradient is an
/// eigenvector of the Hessian. Returns 0 at points with vanishing gradient.
pub fn eigen_residual<S: Scalar>(f: &SmoothFunctionND<S>, x: &[S]) -> Result<S> {
    if x.len() != f.dim {
        return Err(Error::Shape(format!(
            "point dimension {} does not match function dimension {}",
            x.len(),
            f.dim
        )));
    }
    let grad = f.gradient(x);
    let hess = f.hessian(x);
    let u2: S = grad.iter().map(|v| *v * *v).sum();
    let u = u2.sqrt();
    if u <= cst::<S>(ZERO_GRAD) {
        return Ok(S::zero());
    }
    let hg: Vec<S> = (0..f.dim)
        .map(|i| (0..f.dim).map(|k| hess[i][k] * grad[k]).sum())
        .collect();
    let lambda: S = grad.iter().zip(&hg).map(|(g, h)| *g * *h).sum::<S>() / u2;
    let res: S = hg
        .iter()
        .zip(&grad)
        .map(|(h, g)| {
            let d = *h - lambda * *g;
            d * d
        })
        .sum::<S>()
        .sqrt();
    Ok(res / u)
}

/// An increasing C¹ map `G: [0, ∞) → ℝ` with `G(0) = 0`, used to reshape
/// gradient magnitudes.
#[derive(Clone)]
pub struct MonotoneMap<S: Scalar> {
    eval: crate::scalar::RealFn<S>,
}

impl<S: Scalar> MonotoneMap<S> {
    /// Wraps a closure.
    pub fn from_fn(g: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(g) }
    }

    /// G(s) = s.
    pub fn identity() -> Self {
        Self::from_fn(|s| s)
    }

    /// G(s) = s^p on the non-negative axis (p > 0).
    pub fn power(p: S) -> Self {
        Self::from_fn(move |s: S| s.max(S::zero()).powf(p))
    }

    /// The derivative map of a cost, `G = θ'`.
    pub fn deriv_of(theta: &CostSpec<S>) -> Self {
        let th = theta.clone();
        Self::from_fn(move |s| th.deriv(s))
    }

    /// G(s).
    pub fn eval(&self, s: S) -> S {
        (self.eval)(s)
    }
}

/// Deterministic validation sample for [`build_potential`]: points scattered
/// in `base + [−2, 2]ⁿ` by a fixed xorshift stream.
fn validation_points<S: Scalar>(dim: usize, base: &[S]) -> Vec<Vec<S>> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..24)
        .map(|_| {
            (0..dim)
                .map(|j| base[j] + cst::<S>(4.0 * next() - 2.0))
                .collect()
        })
        .collect()
}

/// The reshaped field `F = G(‖∇f‖)·∇f/‖∇f‖` (zero where the gradient
/// vanishes).
fn reshaped_field<S: Scalar>(f: &SmoothFunctionND<S>, g_map: &MonotoneMap<S>) -> GradFn<S> {
    let f = f.clone();
    let g = g_map.clone();
    Arc::new(move |x: &[S]| {
        let grad = f.gradient(x);
        let u: S = grad.iter().map(|v| *v * *v).sum::<S>().sqrt();
        if u <= cst::<S>(1e-12) {
            return vec![S::zero(); grad.len()];
        }
        let s = g.eval(u) / u;
        grad.into_iter().map(|v| s * v).collect()
    })
}

/// Builds the potential φ with `∇φ = G(‖∇f‖)·∇f/‖∇f‖` and `φ(base) = 0` by
/// line integration of the reshaped field along straight segments from
/// `base`.
///
/// The construction requires `f` to belong to the gradient-eigenvector
/// family (otherwise the field need not be a gradient); membership is
/// validated on a deterministic sample around `base` and a capability error
/// is raised on failure. The result is convex and stays in the family.
pub fn build_potential<S: Scalar>(
    f: &SmoothFunctionND<S>,
    g_map: &MonotoneMap<S>,
    base: &[S],
) -> Result<SmoothFunctionND<S>> {
    if base.len() != f.dim {
        return Err(Error::Shape(format!(
            "base dimension {} does not match function dimension {}",
            base.len(),
            f.dim
        )));
    }
    if g_map.eval(S::zero()).abs() > cst::<S>(1e-9) {
        return Err(Error::Parameter("profile map must satisfy G(0) = 0".into()));
    }
    let sample = validation_points(f.dim, base);
    let report = class_f_test(f, &sample, cst::<S>(1e-6))?;
    if !report.in_class {
        return Err(Error::Capability(format!(
            "input fails the gradient-eigenvector membership test (residual {}, {} convexity violations): the reshaped field may not be a gradient",
            report.max_symmetry_residual, report.convexity_violations
        )));
    }

    let field = reshaped_field(f, g_map);
    let f1 = field.clone();
    let f2 = field.clone();
    let base1: Vec<S> = base.to_vec();
    Ok(SmoothFunctionND {
        dim: f.dim,
        eval: Arc::new(move |x: &[S]| line_integral(&f1, &base1, x)),
        gradient: Arc::new(move |x: &[S]| f2(x)),
        hessian: Arc::new(move |x: &[S]| fd_hessian_of_grad(&field, x)),
    })
}

/// Max over points and index pairs `i < j` of `|∂_j F_i − ∂_i F_j|` by
/// central differences (step 1e-5). Zero for gradient fields.
pub fn curl_residual<S: Scalar>(field: &VectorFieldND<S>, points: &[Vec<S>]) -> Result<S> {
    if points.is_empty() {
        return Err(Error::Parameter(
            "curl check needs at least one point".into(),
        ));
    }
    let n = field.dim;
    let h = cst::<S>(HESS_STEP);
    let two_h = cst::<S>(2.0) * h;
    let mut worst = S::zero();
    for p in points {
        if p.len() != n {
            return Err(Error::Shape(format!(
                "point dimension {} does not match field dimension {n}",
                p.len()
            )));
        }
        let mut q = p.clone();
        // jac[j][i] = ∂_j F_i
        let mut jac: Vec<Vec<S>> = Vec::with_capacity(n);
        for j in 0..n {
            let xj = q[j];
            q[j] = xj + h;
            let up = field.eval(&q);
            q[j] = xj - h;
            let dn = field.eval(&q);
            q[j] = xj;
            jac.push(up.iter().zip(&dn).map(|(u, d)| (*u - *d) / two_h).collect());
        }
        for (i, row_i) in jac.iter().enumerate() {
            for (j, row_j) in jac.iter().enumerate().skip(i + 1) {
                let r = (row_j[i] - row_i[j]).abs();
                if r > worst {
                    worst = r;
                }
            }
        }
    }
    Ok(worst)
}

/// An axis-aligned box `[lo, hi]ⁿ` discretized with uniform spacing.
#[derive(Debug, Clone, Copy)]
pub struct BoxGrid<S> {
    /// Lower corner coordinate (same in every axis).
    pub lo: S,
    /// Upper corner coordinate.
    pub hi: S,
    /// Node spacing.
    pub step: S,
    /// Dimension.
    pub dim: usize,
}

impl<S: Scalar> BoxGrid<S> {
    /// Nodes per axis.
    pub fn nodes_per_axis(&self) -> usize {
        let n = ((self.hi - self.lo) / self.step + cst::<S>(0.5)).floor();
        n.to_usize().unwrap_or(0) + 1
    }

    /// Total node count `mⁿ`.
    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    /// The `idx`-th node in row-major order.
    pub fn node(&self, mut idx: usize) -> Vec<S> {
        let m = self.nodes_per_axis();
        let mut out = vec![S::zero(); self.dim];
        for d in (0..self.dim).rev() {
            let k = idx % m;
            idx /= m;
            out[d] = self.lo + self.step * S::from_usize(k).unwrap();
        }
        out
    }
}

/// Exhaustive n-dimensional inf-convolution at a single point:
/// `min over grid nodes w of values[w] + t·θ(‖w − z‖/t)`.
pub fn grid_infconv_nd<S: Scalar>(
    values: &[S],
    grid: &BoxGrid<S>,
    theta: &CostSpec<S>,
    t: S,
    z: &[S],
) -> S {
    let mut best = S::infinity();
    for (i, v) in values.iter().enumerate() {
        let w = grid.node(i);
        let d: S = w
            .iter()
            .zip(z)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<S>()
            .sqrt();
        let c = *v + t * theta.eval(d / t);
        if c < best {
            best = c;
        }
    }
    best
}

/// Worst deviation of the optimality identity for one cost.
#[derive(Debug, Clone)]
pub struct CostDeviation<S> {
    /// Largest `|Q^α ψ(∇g(x)) − ψ(x) − α(‖x − ∇g(x)‖)|` over the checked
    /// samples.
    pub worst_deviation: S,
    /// Sample achieving the worst deviation.
    pub worst_sample: Option<Vec<S>>,
    /// Number of samples that passed the boundary-margin filter.
    pub samples_checked: usize,
}

/// Report of [`verify_map_optimality`], one entry per cost.
#[derive(Debug, Clone)]
pub struct MapOptimalityReport<S> {
    /// Deviations in the order the costs were supplied.
    pub per_cost: Vec<CostDeviation<S>>,
}

/// Certifies that a monotone map `∇g` transports optimally for every
/// supplied convex cost.
///
/// With `f(x) = ½⟨x, x⟩ − g(x)` (so `∇f(x) = x − ∇g(x)` is the
/// displacement), membership of `f` in the gradient-eigenvector family is
/// what makes the certification valid; for each cost α a potential with gradient
/// `α'(‖∇f‖)·(∇g(x) − x)/‖∇f‖` is built and the identity
/// `Q^α ψ(∇g(x)) = ψ(x) + α(‖x − ∇g(x)‖)` is checked at every sample, the
/// inf-convolution being evaluated by the exhaustive box-grid oracle.
/// Samples closer to the box boundary than their displacement plus three
/// grid steps are excluded. Dimensions above 2 are rejected (the grid
/// oracle cost grows as m²ⁿ).
pub fn verify_map_optimality<S: Scalar>(
    g_grad: &VectorFieldND<S>,
    costs: &[CostSpec<S>],
    samples: &[Vec<S>],
    grid: &BoxGrid<S>,
) -> Result<MapOptimalityReport<S>> {
    let dim = g_grad.dim;
    if dim > 2 {
        return Err(Error::Resource(format!(
            "grid oracle cost grows as m^2n; dimensions above 2 are not supported, got {dim}"
        )));
    }
    if grid.dim != dim {
        return Err(Error::Shape("grid dimension does not match the map".into()));
    }
    if grid.node_count() > 4_000_000 {
        return Err(Error::Resource(format!(
            "grid has {} nodes; refusing to scan more than 4e6",
            grid.node_count()
        )));
    }
    if costs.iter().any(|c| !c.strictly_convex()) {
        return Err(Error::Capability(
            "all costs must be strictly convex".into(),
        ));
    }

    // displacement potential: ∇f(x) = x − ∇g(x)
    let gmap = g_grad.clone();
    let f = SmoothFunctionND::from_gradient_field(dim, move |x: &[S]| {
        x.iter()
            .zip(gmap.eval(x))
            .map(|(xi, gi)| *xi - gi)
            .collect()
    });
    let membership = class_f_test(&f, samples, cst::<S>(1e-6))?;
    if !membership.in_class {
        return Err(Error::Capability(format!(
            "½⟨x,x⟩ − g fails the membership hypothesis (residual {})",
            membership.max_symmetry_residual
        )));
    }

    let three = cst::<S>(3.0);
    let mut per_cost = Vec::with_capacity(costs.len());
    for alpha in costs {
        // ψ = −φ orients the potential along the displacement so that the
        // minimizer of ψ(w) + α(‖w − ∇g(x)‖) sits at w = x
        let phi = build_potential(&f, &MonotoneMap::deriv_of(alpha), &vec![S::zero(); dim])?;
        let psi = phi.negated();
        let psi_vals = par_map_indexed(grid.node_count(), |i| psi.eval(&grid.node(i)));

        let mut worst = S::zero();
        let mut worst_sample = None;
        let mut checked = 0usize;
        for x in samples {
            let z = g_grad.eval(x);
            let disp: S = x
                .iter()
                .zip(&z)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<S>()
                .sqrt();
            let margin = disp + three * grid.step;
            let edge_dist = x
                .iter()
                .map(|c| (*c - grid.lo).min(grid.hi - *c))
                .fold(S::infinity(), |a, b| a.min(b));
            if edge_dist < margin {
                continue;
            }
            checked += 1;
            let lhs = grid_infconv_nd(&psi_vals, grid, alpha, S::one(), &z);
            let rhs = psi.eval(x) + alpha.eval(disp);
            let dev = (lhs - rhs).abs();
            if dev > worst {
                worst = dev;
                worst_sample = Some(x.clone());
            }
        }
        per_cost.push(CostDeviation {
            worst_deviation: worst,
            worst_sample,
            samples_checked: checked,
        });
    }
    Ok(MapOptimalityReport { per_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::make_power_cost;

    fn grid_points_2d(lo: f64, hi: f64, per_axis: usize) -> Vec<Vec<f64>> {
        let step = (hi - lo) / (per_axis - 1) as f64;
        let mut out = Vec::new();
        for i in 0..per_axis {
            for j in 0..per_axis {
                out.push(vec![lo + step * i as f64, lo + step * j as f64]);
            }
        }
        out
    }

    #[test]
    fn linear_forms_are_members() {
        let f = SmoothFunctionND::linear_form(vec![2.0, -1.0]);
        let pts = grid_points_2d(-2.0, 2.0, 5);
        let r = class_f_test(&f, &pts, 1e-6).unwrap();
        assert!(r.in_class);
        assert_eq!(r.max_symmetry_residual, 0.0);
        assert_eq!(r.convexity_violations, 0);
    }

    #[test]
    fn quad_plus_linear_is_member() {
        let f = SmoothFunctionND::<f64>::quad_plus_linear(1.0, vec![1.0, 0.0]);
        let pts = grid_points_2d(-2.0, 2.0, 7);
        let r = class_f_test(&f, &pts, 1e-6).unwrap();
        assert!(r.in_class, "residual {}", r.max_symmetry_residual);
    }

    #[test]
    fn anisotropic_quadratic_fails_with_large_residual() {
        // f(x, y) = x² + 2y²: at (1, 1), Hess ∇f = (4, 16) is not parallel
        // to ∇f = (2, 4)
        let f = SmoothFunctionND::quadratic_form(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let mut pts = grid_points_2d(-2.0, 2.0, 5);
        pts.push(vec![1.0, 1.0]);
        let r = class_f_test(&f, &pts, 1e-6).unwrap();
        assert!(!r.in_class);
        assert!(r.max_symmetry_residual > 0.1);
        assert!(r.failing_point.is_some());
        // eigen-alignment residual agrees in verdict
        let e = eigen_residual(&f, &[1.0, 1.0]).unwrap();
        assert!(e > 0.1);
    }

    #[test]
    fn radial_profiles_are_members() {
        let sq = SmoothFunctionND::radial(2, |s: f64| s * s, |s| 2.0 * s, |_| 2.0);
        let cosh = SmoothFunctionND::radial(
            2,
            |s: f64| s.cosh() - 1.0,
            |s: f64| s.sinh(),
            |s: f64| s.cosh(),
        );
        let pts = grid_points_2d(-2.0, 2.0, 7);
        for f in [&sq, &cosh] {
            let r = class_f_test(f, &pts, 1e-6).unwrap();
            assert!(r.in_class, "residual {}", r.max_symmetry_residual);
        }
    }

    #[test]
    fn build_potential_identity_profile() {
        // f = ‖x‖²/2 gives ∇f = x, u = ‖x‖; G = id reproduces ∇φ = x
        let f = SmoothFunctionND::<f64>::quad_plus_linear(0.5, vec![0.0, 0.0]);
        let phi = build_potential(&f, &MonotoneMap::identity(), &[0.0, 0.0]).unwrap();
        for p in [[1.0, 0.5], [-0.7, 1.2], [2.0, -2.0]] {
            let g = phi.gradient(&p);
            assert!((g[0] - p[0]).abs() < 1e-12);
            assert!((g[1] - p[1]).abs() < 1e-12);
            let expected = (p[0] * p[0] + p[1] * p[1]) / 2.0;
            assert!((phi.eval(&p) - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn build_potential_cubic_profile_closed_form() {
        // G(s) = s³ on f = ‖x‖²/2: ∇φ = ‖x‖²·x, φ = ‖x‖⁴/4
        let f = SmoothFunctionND::<f64>::quad_plus_linear(0.5, vec![0.0, 0.0]);
        let phi = build_potential(&f, &MonotoneMap::power(3.0), &[0.0, 0.0]).unwrap();
        for p in [[1.0, 1.0], [0.3, -0.4], [-1.5, 0.2]] {
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!((phi.eval(&p) - r2 * r2 / 4.0).abs() < 1e-8);
            let g = phi.gradient(&p);
            assert!((g[0] - r2 * p[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn build_potential_linear_datum() {
        // f linear with slope c, G(s) = s²: ∇φ = ‖c‖·c, φ affine
        let c = [3.0, 4.0];
        let f = SmoothFunctionND::<f64>::linear_form(c.to_vec());
        let phi = build_potential(&f, &MonotoneMap::power(2.0), &[0.0, 0.0]).unwrap();
        let g = phi.gradient(&[0.7, -0.3]);
        assert!((g[0] - 15.0).abs() < 1e-12);
        assert!((g[1] - 20.0).abs() < 1e-12);
        let p = [0.5, 0.25];
        assert!((phi.eval(&p) - (15.0 * 0.5 + 20.0 * 0.25)).abs() < 1e-8);
    }

    #[test]
    fn build_potential_rejects_non_members() {
        let f = SmoothFunctionND::quadratic_form(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let err = build_potential(&f, &MonotoneMap::identity(), &[0.0, 0.0]);
        assert!(matches!(err, Err(Error::Capability(_))));
    }

    #[test]
    fn curl_residual_examples() {
        let f = SmoothFunctionND::<f64>::quad_plus_linear(0.5, vec![0.0, 0.0]);
        let grad = VectorFieldND::gradient_of(&f);
        let pts = grid_points_2d(-2.0, 2.0, 5);
        assert!(curl_residual(&grad, &pts).unwrap() < 1e-8);

        let rot = VectorFieldND::from_fn(2, |x: &[f64]| vec![-x[1], x[0]]);
        let r = curl_residual(&rot, &[vec![0.3, 0.8]]).unwrap();
        assert!((r - 2.0).abs() < 1e-6);

        // reshaping a non-member with a nonlinear profile is not a gradient
        // (G = id degenerates: G(u)/u = 1 makes the field ∇f itself)
        let bad = SmoothFunctionND::quadratic_form(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let field_fn = reshaped_field(&bad, &MonotoneMap::power(2.0));
        let field = VectorFieldND::from_fn(2, move |x: &[f64]| field_fn(x));
        assert!(curl_residual(&field, &[vec![1.0, 1.0]]).unwrap() > 0.1);
    }

    #[test]
    fn verify_identity_map_has_zero_deviation() {
        // ∇g = id: zero displacement, both sides equal ψ(x)
        let id = VectorFieldND::from_fn(2, |x: &[f64]| x.to_vec());
        let sq = make_power_cost(2.0, 1.0).unwrap();
        let grid = BoxGrid {
            lo: -1.0,
            hi: 1.0,
            step: 0.05,
            dim: 2,
        };
        let samples = vec![vec![0.0, 0.0], vec![0.2, -0.3], vec![-0.4, 0.1]];
        let report = verify_map_optimality(&id, &[sq], &samples, &grid).unwrap();
        // ψ is constant zero for zero displacement, so the oracle is exact
        assert!(report.per_cost[0].worst_deviation < 1e-9);
        assert!(report.per_cost[0].samples_checked > 0);
    }

    #[test]
    fn verify_constant_shift_map() {
        // ∇g(x) = x − c: the displacement potential is the linear form
        // ⟨c, x⟩, and the identity holds with an affine ψ
        let c = [0.3, 0.2];
        let shift = VectorFieldND::from_fn(2, move |x: &[f64]| {
            x.iter().zip(&c).map(|(v, ci)| v - ci).collect()
        });
        let sq = make_power_cost(2.0, 1.0).unwrap();
        let grid = BoxGrid {
            lo: -1.0,
            hi: 1.0,
            step: 0.05,
            dim: 2,
        };
        let samples = vec![vec![0.0, 0.0], vec![0.3, -0.2], vec![-0.25, 0.1]];
        let report = verify_map_optimality(&shift, &[sq], &samples, &grid).unwrap();
        let dev = report.per_cost[0].worst_deviation;
        assert!(report.per_cost[0].samples_checked > 0);
        // affine ψ: the oracle error is bounded by 2h times the local slope
        assert!(dev <= 2.0 * 0.05 * 2.0, "shift-map deviation {dev}");
    }

    #[test]
    fn dimension_mismatches_are_shape_errors() {
        let f = SmoothFunctionND::<f64>::quad_plus_linear(0.5, vec![0.0, 0.0]);
        assert!(matches!(
            class_f_test(&f, &[vec![0.0; 3]], 1e-6),
            Err(Error::Shape(_))
        ));
        assert!(matches!(eigen_residual(&f, &[1.0]), Err(Error::Shape(_))));
        let field = VectorFieldND::gradient_of(&f);
        assert!(matches!(
            curl_residual(&field, &[vec![0.0; 3]]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            build_potential(&f, &MonotoneMap::identity(), &[0.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn verify_rejects_high_dimension() {
        let id = VectorFieldND::from_fn(3, |x: &[f64]| x.to_vec());
        let sq = make_power_cost(2.0, 1.0).unwrap();
        let grid = BoxGrid {
            lo: -1.0,
            hi: 1.0,
            step: 0.1,
            dim: 3,
        };
        assert!(matches!(
            verify_map_optimality(&id, &[sq], &[vec![0.0; 3]], &grid),
            Err(Error::Resource(_))
        ));
    }
}
