//! Scalar numerical kernels shared across the crate: monotone root finding,
//! golden-section minimization, adaptive Simpson quadrature, Gauss-Legendre
//! nodes, a small symmetric eigensolver, and an opt-in parallel map.

use std::sync::OnceLock;

use crate::scalar::{cst, Scalar};

/// Bisection for a non-decreasing function `g` on a bracket with
/// `g(lo) <= 0 <= g(hi)`. Returns the sign-change point to absolute
/// tolerance `tol` (capped at `max_iter` halvings).
pub(crate) fn bisect_monotone<S: Scalar>(
    g: impl Fn(S) -> S,
    mut lo: S,
    mut hi: S,
    tol: S,
    max_iter: usize,
) -> S {
    let half = cst::<S>(0.5);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break; // interval no longer splittable in this precision
        }
        if g(mid) <= S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * half
}

/// Expands a bracket around `center` until `g(lo) <= 0 <= g(hi)` for a
/// non-decreasing `g`, doubling the half-width up to `max_doublings` times.
/// Returns `None` when no sign change is found.
pub(crate) fn bracket_monotone_root<S: Scalar>(
    g: impl Fn(S) -> S,
    center: S,
    initial_halfwidth: S,
    max_doublings: usize,
) -> Option<(S, S)> {
    let mut w = if initial_halfwidth > S::zero() && initial_halfwidth.is_finite() {
        initial_halfwidth
    } else {
        S::one()
    };
    let two = cst::<S>(2.0);
    let mut lo = center - w;
    let mut hi = center + w;
    for _ in 0..max_doublings {
        let glo = g(lo);
        let ghi = g(hi);
        if glo <= S::zero() && ghi >= S::zero() {
            return Some((lo, hi));
        }
        w = w * two;
        if glo > S::zero() {
            lo = center - w;
        }
        if ghi < S::zero() {
            hi = center + w;
        }
        if !lo.is_finite() || !hi.is_finite() {
            return None;
        }
    }
    let (glo, ghi) = (g(lo), g(hi));
    if glo <= S::zero() && ghi >= S::zero() {
        Some((lo, hi))
    } else {
        None
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_min<S: Scalar>(
    f: impl Fn(S) -> S,
    mut lo: S,
    mut hi: S,
    tol: S,
    max_iter: usize,
) -> S {
    let inv_phi = cst::<S>(0.618_033_988_749_894_9);
    let mut a = hi - (hi - lo) * inv_phi;
    let mut b = lo + (hi - lo) * inv_phi;
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - (hi - lo) * inv_phi;
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + (hi - lo) * inv_phi;
            fb = f(b);
        }
    }
    (lo + hi) * cst::<S>(0.5)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Handles `a > b` by sign flip. Recursion depth is bounded; the integrand is
/// assumed continuous (the callers integrate monotone compositions).
pub(crate) fn adaptive_simpson<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S, tol: S) -> S {
    if a == b {
        return S::zero();
    }
    if a > b {
        return -adaptive_simpson(f, b, a, tol);
    }
    let c = (a + b) * cst::<S>(0.5);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = simpson_panel(a, b, fa, fc, fb);
    simpson_recurse(f, a, b, fa, fc, fb, whole, tol, 48)
}

fn simpson_panel<S: Scalar>(a: S, b: S, fa: S, fm: S, fb: S) -> S {
    (b - a) / cst::<S>(6.0) * (fa + cst::<S>(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<S: Scalar>(
    f: &impl Fn(S) -> S,
    a: S,
    b: S,
    fa: S,
    fm: S,
    fb: S,
    whole: S,
    tol: S,
    depth: usize,
) -> S {
    let m = (a + b) * cst::<S>(0.5);
    let lm = (a + m) * cst::<S>(0.5);
    let rm = (m + b) * cst::<S>(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= cst::<S>(15.0) * tol {
        return left + right + err / cst::<S>(15.0);
    }
    let half_tol = tol * cst::<S>(0.5);
    simpson_recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed once by Newton
/// iteration on the Legendre polynomial.
pub(crate) fn gauss_legendre_64() -> &'static [(f64, f64); 64] {
    static TABLE: OnceLock<[(f64, f64); 64]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 64usize;
        let mut out = [(0.0f64, 0.0f64); 64];
        for i in 0..n {
            // Chebyshev-like initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
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
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out[n - 1 - i] = (x, w);
        }
        out
    })
}

/// Integrates `f` over `[a, b]` with 64-node Gauss-Legendre panels, splitting
/// panels adaptively until the two-half refinement agrees to `tol`.
pub(crate) fn gauss_legendre_integrate<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S, tol: S) -> S {
    fn panel<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S) -> S {
        let half = cst::<S>(0.5);
        let mid = (a + b) * half;
        let rad = (b - a) * half;
        let mut acc = S::zero();
        for &(x, w) in gauss_legendre_64().iter() {
            acc = acc + cst::<S>(w) * f(mid + rad * cst::<S>(x));
        }
        acc * rad
    }
    fn recurse<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S, whole: S, tol: S, depth: usize) -> S {
        let mid = (a + b) * cst::<S>(0.5);
        let left = panel(f, a, mid);
        let right = panel(f, mid, b);
        let err = (left + right - whole).abs();
        if depth == 0 || err <= tol {
            return left + right;
        }
        let half_tol = tol * cst::<S>(0.5);
        recurse(f, a, mid, left, half_tol, depth - 1)
            + recurse(f, mid, b, right, half_tol, depth - 1)
    }
    if a == b {
        return S::zero();
    }
    recurse(f, a, b, panel(f, a, b), tol, 20)
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order. `mat` is row-major `n × n`.
pub(crate) fn symmetric_eigenvalues<S: Scalar>(mat: &[S], n: usize) -> Vec<S> {
    debug_assert_eq!(mat.len(), n * n);
    let mut a: Vec<S> = mat.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..64 {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a[idx(i, j)] * a[idx(i, j)];
            }
        }
        if off.sqrt() <= cst::<S>(1e-14) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= cst::<S>(1e-300) {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (cst::<S>(2.0) * apq);
                let t = {
                    let s = if theta >= S::zero() {
                        S::one()
                    } else {
                        -S::one()
                    };
                    s / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<S> = (0..n).map(|i| a[idx(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Thread budget for the embarrassingly parallel maps. Controlled by the
/// `WEAKOT_THREADS` environment variable (0 or unset = one per core).
pub(crate) fn thread_count() -> usize {
    static N: OnceLock<usize> = OnceLock::new();
    *N.get_or_init(|| {
        let auto = || {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        };
        match std::env::var("WEAKOT_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(0) | Err(_) => auto(),
                Ok(n) => n,
            },
            Err(_) => auto(),
        }
    })
}

/// Evaluates `f(0..len)` into a vector, sharding across threads when the work
/// is large enough. The output ordering is independent of the thread count.
pub(crate) fn par_map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = thread_count().min(len.max(1));
    if threads <= 1 || len < 64 {
        return (0..len).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..len).map(|_| None).collect();
    let chunk = len.div_ceil(threads);
    std::thread::scope(|scope| {
        for (t, slot) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                let base = t * chunk;
                for (off, cell) in slot.iter_mut().enumerate() {
                    *cell = Some(f(base + off));
                }
            });
        }
    });
    out.into_iter().map(|x| x.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_cubic_root() {
        let g = |y: f64| y * y * y + y - 2.0;
        let (lo, hi) = bracket_monotone_root(g, 0.0, 1.0, 60).unwrap();
        let r = bisect_monotone(g, lo, hi, 1e-13, 200);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let i = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((i - 0.0).abs() < 1e-11);
        let j = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((j - (1f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_handles_smooth_integrands() {
        let i = gauss_legendre_integrate(&|x: f64| (x * x).exp(), 0.0, 1.0, 1e-12);
        // reference: ∫₀¹ e^{x²} dx
        assert!((i - 1.462_651_745_907_181_6).abs() < 1e-10);
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let eig = symmetric_eigenvalues(&[2.0f64, 1.0, 1.0, 2.0], 2);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_minimizes_shifted_parabola() {
        let m = golden_section_min(|x: f64| (x - 0.7) * (x - 0.7), -4.0, 5.0, 1e-10, 200);
        assert!((m - 0.7).abs() < 1e-8);
    }

    #[test]
    fn par_map_matches_serial() {
        let serial: Vec<usize> = (0..1000).map(|i| i * i).collect();
        let parallel = par_map_indexed(1000, |i| i * i);
        assert_eq!(serial, parallel);
    }
}
