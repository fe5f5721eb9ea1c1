//! Classical and weak (barycentric) transport costs between discrete
//! measures on ℝ.
//!
//! The classical cost is the quantile-coupling integral
//! `∫₀¹ θ(F_μ⁻¹(u) − F_ν⁻¹(u)) du`, computed exactly over the common
//! refinement of the two weight partitions. The weak cost charges θ to each
//! source point's conditional barycenter and equals
//! `inf { T_θ(ν₁, μ) : ν₁ ⪯ ν }`; the optimal ν₁ does not depend on the
//! convex cost and is obtained here as the weighted Euclidean projection of
//! the μ-quantile vector onto the majorization polytope of the ν-quantile
//! vector. A lattice brute-force oracle and a Kantorovich duality lower
//! bound arbitrate the solvers.

use crate::costs::CostSpec;
use crate::measures::{common_refinement, DiscreteMeasure};
use crate::numerics::par_map_indexed;
use crate::scalar::{cst, Scalar};
use crate::{Error, Result};

/// Tolerance used by the equality certificate and the feasibility slack of
/// the lattice oracle.
const WITNESS_TOL: f64 = 1e-9;

/// One entry of a deterministic (pairwise) transport plan.
#[derive(Debug, Clone, Copy)]
pub struct PlanEntry<S> {
    /// Source location.
    pub source: S,
    /// Target location.
    pub target: S,
    /// Mass moved.
    pub mass: S,
}

/// One row of a weak-transport kernel: the conditional law `p(x, ·)` of a
/// single source atom together with its barycenter.
#[derive(Debug, Clone)]
pub struct KernelRow<S> {
    /// Source atom.
    pub source: S,
    /// Mass of the source atom under μ.
    pub mass: S,
    /// `(target, conditional mass)` pairs; conditional masses sum to one.
    pub targets: Vec<(S, S)>,
    /// Barycenter of the row, `Σ target · conditional`.
    pub barycenter: S,
}

/// Either a pairwise plan (classical transport) or a kernel (weak transport).
#[derive(Debug, Clone)]
pub enum TransportPlan<S> {
    /// Monotone pairwise plan.
    Pairwise(Vec<PlanEntry<S>>),
    /// Disintegration kernel rows, one per source atom.
    Kernel(Vec<KernelRow<S>>),
}

/// A transport solution: its cost, the plan or kernel realizing it, and for
/// the weak problem the effective second marginal ν₁ (the law of the row
/// barycenters under μ).
#[derive(Debug, Clone)]
pub struct CouplingReport<S: Scalar> {
    /// Optimal cost.
    pub cost: S,
    /// The realizing plan.
    pub plan: TransportPlan<S>,
    /// Law of the row barycenters (weak case only).
    pub effective_nu1: Option<DiscreteMeasure<S>>,
}

impl<S: Scalar> CouplingReport<S> {
    /// First marginal reconstructed from the plan.
    pub fn source_marginal(&self) -> Result<DiscreteMeasure<S>> {
        let (atoms, masses): (Vec<S>, Vec<S>) = match &self.plan {
            TransportPlan::Pairwise(entries) => entries.iter().map(|e| (e.source, e.mass)).unzip(),
            TransportPlan::Kernel(rows) => rows.iter().map(|r| (r.source, r.mass)).unzip(),
        };
        DiscreteMeasure::new(atoms, masses)
    }

    /// Second marginal reconstructed from the plan.
    pub fn target_marginal(&self) -> Result<DiscreteMeasure<S>> {
        let mut atoms = Vec::new();
        let mut masses = Vec::new();
        match &self.plan {
            TransportPlan::Pairwise(entries) => {
                for e in entries {
                    atoms.push(e.target);
                    masses.push(e.mass);
                }
            }
            TransportPlan::Kernel(rows) => {
                for r in rows {
                    for (t, c) in &r.targets {
                        atoms.push(*t);
                        masses.push(r.mass * *c);
                    }
                }
            }
        }
        DiscreteMeasure::new(atoms, masses)
    }

    /// Recomputes the cost from the stored plan under `theta`. For kernels
    /// the cost is charged to the row barycenters, matching the weak
    /// functional.
    pub fn recompute_cost(&self, theta: &CostSpec<S>) -> S {
        match &self.plan {
            TransportPlan::Pairwise(entries) => entries
                .iter()
                .map(|e| e.mass * theta.eval(e.source - e.target))
                .sum(),
            TransportPlan::Kernel(rows) => rows
                .iter()
                .map(|r| r.mass * theta.eval(r.source - r.barycenter))
                .sum(),
        }
    }
}

/// Classical Monge-Kantorovich cost for a convex θ: the monotone
/// (quantile) coupling is optimal in one dimension, so the cost is the exact
/// refinement sum `Σ mass · θ(F_μ⁻¹ − F_ν⁻¹)`.
pub fn classical_cost<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    theta: &CostSpec<S>,
) -> CouplingReport<S> {
    let cells = common_refinement(mu, nu);
    let mut cost = S::zero();
    let mut entries: Vec<PlanEntry<S>> = Vec::with_capacity(cells.len());
    for c in &cells {
        cost = cost + c.mass * theta.eval(c.left_q - c.right_q);
        match entries.last_mut() {
            Some(last) if last.source == c.left_q && last.target == c.right_q => {
                last.mass = last.mass + c.mass;
            }
            _ => entries.push(PlanEntry {
                source: c.left_q,
                target: c.right_q,
                mass: c.mass,
            }),
        }
    }
    CouplingReport {
        cost,
        plan: TransportPlan::Pairwise(entries),
        effective_nu1: None,
    }
}

/// Weighted Euclidean projection of `x` onto the majorization polytope
/// `{ z : Σ_{k>=j} m_k z_k <= Σ_{k>=j} m_k y_k  (j >= 1),  Σ m z = Σ m y }`
/// for sorted `x`, `y` and positive masses `m`.
///
/// Active-set method over the suffix-sum chain: a set of binding caps
/// partitions the coordinates into segments, each shifted uniformly so its
/// mass-weighted sum matches that of `y`; caps are activated while primal
/// violations remain and deactivated while their multipliers go negative.
/// The monotonicity of `z` is automatic for sorted inputs (an exchange
/// argument shows an unsorted optimum would contradict either optimality or
/// a binding cap), so no order constraints are carried.
fn project_majorization<S: Scalar>(x: &[S], y: &[S], m: &[S]) -> Vec<S> {
    let n = x.len();
    debug_assert!(n > 0 && y.len() == n && m.len() == n);

    let scale = S::one()
        + x.iter().fold(S::zero(), |a, v| a.max(v.abs()))
        + y.iter().fold(S::zero(), |a, v| a.max(v.abs()));
    let tol = cst::<S>(1e-12) * scale;

    let mut active = vec![false; n]; // index 0 is the total-sum equality, always on
    let mut z = vec![S::zero(); n];
    let mut shift = vec![S::zero(); n]; // per-coordinate segment shift

    for _round in 0..(8 * n * n + 32) {
        // segment structure from the active caps
        let mut k = 0usize;
        while k < n {
            let mut end = k + 1;
            while end < n && !active[end] {
                end += 1;
            }
            let mut num = S::zero();
            let mut den = S::zero();
            for i in k..end {
                num = num + m[i] * (y[i] - x[i]);
                den = den + m[i];
            }
            let lam = num / den;
            for i in k..end {
                z[i] = x[i] + lam;
                shift[i] = lam;
            }
            k = end;
        }

        // most violated inactive cap
        let mut suffix = S::zero();
        let mut worst = tol;
        let mut worst_j: Option<usize> = None;
        for j in (0..n).rev() {
            suffix = suffix + m[j] * (z[j] - y[j]);
            if j >= 1 && !active[j] && suffix > worst {
                worst = suffix;
                worst_j = Some(j);
            }
        }
        if let Some(j) = worst_j {
            active[j] = true;
            continue;
        }

        // most negative multiplier among active caps
        let mut worst_eta = -tol;
        let mut worst_j: Option<usize> = None;
        for j in 1..n {
            if active[j] {
                let eta = shift[j - 1] - shift[j];
                if eta < worst_eta {
                    worst_eta = eta;
                    worst_j = Some(j);
                }
            }
        }
        match worst_j {
            Some(j) => active[j] = false,
            None => break,
        }
    }
    z
}

/// Per-μ-atom values of the optimal ν₁ on the common refinement grid.
fn optimal_nu1_values<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Vec<S> {
    let cells = common_refinement(mu, nu);
    let x: Vec<S> = cells.iter().map(|c| c.left_q).collect();
    let y: Vec<S> = cells.iter().map(|c| c.right_q).collect();
    let m: Vec<S> = cells.iter().map(|c| c.mass).collect();
    let z = project_majorization(&x, &y, &m);

    // The optimum is constant on every μ-atom block; average over the block
    // to strip float noise from the cell-level solve.
    let mut sums = vec![S::zero(); mu.len()];
    let mut mass = vec![S::zero(); mu.len()];
    for (c, zk) in cells.iter().zip(&z) {
        sums[c.left_idx] = sums[c.left_idx] + c.mass * *zk;
        mass[c.left_idx] = mass[c.left_idx] + c.mass;
    }
    sums.iter().zip(&mass).map(|(s, w)| *s / *w).collect()
}

/// The measure `ν₁ ⪯ ν` minimizing `T_θ(ν₁, μ)`.
///
/// Computed once for the quadratic cost as the weighted projection of the
/// μ-quantile vector onto the majorization polytope of the ν-quantile vector
/// on the common refinement grid; the minimizer does not depend on the
/// choice of convex cost, so the same ν₁ serves every θ.
pub fn optimal_nu1<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> DiscreteMeasure<S> {
    let etas = optimal_nu1_values(mu, nu);
    DiscreteMeasure::new(etas, mu.weights().to_vec())
        .expect("projection of finite quantiles yields a valid measure")
}

/// Builds the kernel rows of the weak plan: writes ν as a mixture
/// `Σ_i μ_i q_i` where row `q_i` has mass 1 and mean `η_i`.
///
/// Rows are served in increasing barycenter order; each takes the
/// quantile-interval window of ν-mass whose mean is exactly its barycenter
/// (the minimal-variance submeasure with that mass and mean), which keeps
/// the residual pool dominating the remaining rows.
fn barycentric_rows<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    etas: &[S],
    nu: &DiscreteMeasure<S>,
) -> Vec<KernelRow<S>> {
    let mut pool: Vec<(S, S)> = nu
        .atoms()
        .iter()
        .zip(nu.weights())
        .map(|(a, w)| (*a, *w))
        .collect();

    let mut rows = Vec::with_capacity(mu.len());
    for (i, (&x_i, &w)) in mu.atoms().iter().zip(mu.weights()).enumerate() {
        let eta = etas[i];
        let total: S = pool.iter().map(|p| p.1).sum();
        let want = w.min(total);

        // cumulative levels and value integrals of the pool
        let mut cum = Vec::with_capacity(pool.len() + 1);
        let mut integ = Vec::with_capacity(pool.len() + 1);
        cum.push(S::zero());
        integ.push(S::zero());
        for &(v, mass) in &pool {
            cum.push(*cum.last().unwrap() + mass);
            integ.push(*integ.last().unwrap() + v * mass);
        }
        let value_int = |c: S| -> S {
            // ∫₀^c Q_pool(u) du, linear between cumulative levels
            let k = cum.partition_point(|l| *l < c).max(1).min(pool.len());
            integ[k - 1] + pool[k - 1].0 * (c - cum[k - 1])
        };
        let window_sum = |q: S| value_int(q + want) - value_int(q);

        // solve window_sum(q) = eta · want over q ∈ [0, total − want];
        // the map is piecewise linear and non-decreasing in q
        let q_hi = (total - want).max(S::zero());
        let target = eta * want;
        let mut qs: Vec<S> = vec![S::zero(), q_hi];
        for &l in cum.iter() {
            if l > S::zero() && l < q_hi {
                qs.push(l);
            }
            let shifted = l - want;
            if shifted > S::zero() && shifted < q_hi {
                qs.push(shifted);
            }
        }
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        qs.dedup();
        let mut q = if target <= window_sum(S::zero()) {
            S::zero()
        } else if target >= window_sum(q_hi) {
            q_hi
        } else {
            let mut found = q_hi;
            for pair in qs.windows(2) {
                let (qa, qb) = (pair[0], pair[1]);
                let (sa, sb) = (window_sum(qa), window_sum(qb));
                if sa <= target && target <= sb {
                    found = if sb > sa {
                        qa + (qb - qa) * (target - sa) / (sb - sa)
                    } else {
                        qa
                    };
                    break;
                }
            }
            found
        };
        q = q.max(S::zero()).min(q_hi);

        // extract the window (q, q + want] from the pool
        let mut targets: Vec<(S, S)> = Vec::new();
        for (k, &(v, _)) in pool.iter().enumerate() {
            let lo = cum[k].max(q);
            let hi = cum[k + 1].min(q + want);
            let take = hi - lo;
            if take > S::zero() {
                match targets.last_mut() {
                    Some(last) if last.0 == v => last.1 = last.1 + take / w,
                    _ => targets.push((v, take / w)),
                }
            }
        }
        for (k, slot) in pool.iter_mut().enumerate() {
            let lo = cum[k].max(q);
            let hi = cum[k + 1].min(q + want);
            let take = hi - lo;
            if take > S::zero() {
                slot.1 = slot.1 - take;
            }
        }
        pool.retain(|p| p.1 > cst::<S>(1e-15));

        rows.push(KernelRow {
            source: x_i,
            mass: w,
            targets,
            barycenter: eta,
        });
    }
    rows
}

/// Weak transport cost `inf ∫ θ(x − barycenter of p(x, ·)) dμ` over kernels
/// with second marginal ν.
///
/// The optimum is reached through the cost-independent ν₁ of
/// [`optimal_nu1`]: the reported cost is `Σ μ_i θ(x_i − η_i)` with `η` the
/// per-atom ν₁ values, and the kernel composes the monotone plan μ → ν₁ with
/// a barycentric decomposition ν₁ → ν. General convex costs are accepted;
/// for non-strictly-convex θ the answer still goes through the
/// quadratically optimal ν₁.
pub fn weak_cost<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    theta: &CostSpec<S>,
) -> CouplingReport<S> {
    let etas = optimal_nu1_values(mu, nu);
    let cost = mu
        .atoms()
        .iter()
        .zip(mu.weights())
        .zip(&etas)
        .map(|((x, w), eta)| *w * theta.eval(*x - *eta))
        .sum();
    let rows = barycentric_rows(mu, &etas, nu);
    let nu1 = DiscreteMeasure::new(etas, mu.weights().to_vec())
        .expect("projection of finite quantiles yields a valid measure");
    CouplingReport {
        cost,
        plan: TransportPlan::Kernel(rows),
        effective_nu1: Some(nu1),
    }
}

/// Outcome of the weak-equals-classical test.
#[derive(Debug, Clone)]
pub struct EqualityCertificate<S> {
    /// True when the two costs agree for every strictly convex cost.
    pub holds: bool,
    /// When `holds` is false, quantile levels `u₁ < u₂` at which the
    /// difference profile decreases by more than the tolerance.
    pub witness: Option<(S, S)>,
    /// `(level, F_μ⁻¹ − F_ν⁻¹)` over the common refinement grid (levels are
    /// cell midpoints).
    pub profile: Vec<(S, S)>,
}

/// Certifies whether `u ↦ F_μ⁻¹(u) − F_ν⁻¹(u)` is non-decreasing, which is
/// equivalent to the weak and classical costs agreeing for every strictly
/// convex cost.
pub fn equality_certificate<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> EqualityCertificate<S> {
    let cells = common_refinement(mu, nu);
    let half = cst::<S>(0.5);
    let tol = cst::<S>(WITNESS_TOL);
    let profile: Vec<(S, S)> = cells
        .iter()
        .map(|c| (c.upper - c.mass * half, c.left_q - c.right_q))
        .collect();
    let mut witness = None;
    for pair in profile.windows(2) {
        if pair[0].1 > pair[1].1 + tol {
            witness = Some((pair[0].0, pair[1].0));
            break;
        }
    }
    EqualityCertificate {
        holds: witness.is_none(),
        witness,
        profile,
    }
}

/// Exhaustive lattice search for the weak cost of small equal-weight
/// instances; the arbitration oracle for [`weak_cost`].
///
/// Both measures must share the equal-weight refinement (at most 3 cells).
/// The search enumerates sorted vectors `y'` on a lattice of the given step
/// inside the bounding box of `y`, keeps those majorized by `y` with the
/// total-sum constraint relaxed to `|Σy' − Σy| <= step/2` (the smallest
/// window that keeps some lattice sum admissible; a wider window would bias
/// the oracle low by `O(window·θ')`), and returns the minimal mean cost.
/// When the atoms of `y` lie on the lattice the window admits exactly the
/// sum-matching candidates.
pub fn brute_force_weak<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    theta: &CostSpec<S>,
    resolution: S,
) -> Result<S> {
    if !(resolution > S::zero()) || !resolution.is_finite() {
        return Err(Error::Parameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let cells = common_refinement(mu, nu);
    let tol = cst::<S>(WITNESS_TOL);

    // Recover the equal-weight vectors behind the (duplicate-merged)
    // measures: every refinement cell must carry an integer multiple of 1/n
    // for some n <= 3.
    let mut expansion: Option<(usize, Vec<usize>)> = None;
    'denoms: for n in cells.len()..=3 {
        let nf = S::from_usize(n).unwrap();
        let mut mult = Vec::with_capacity(cells.len());
        let mut total = 0usize;
        for c in &cells {
            let scaled = c.mass * nf;
            let k = scaled.round();
            if (scaled - k).abs() > cst::<S>(1e-6) {
                continue 'denoms;
            }
            let k = k.to_usize().unwrap_or(0);
            if k == 0 {
                continue 'denoms;
            }
            mult.push(k);
            total += k;
        }
        if total == n {
            expansion = Some((n, mult));
            break;
        }
    }
    let (n, mult) = expansion.ok_or_else(|| {
        Error::Capability(if cells.len() > 3 {
            format!(
                "brute force supports n <= 3 equal-weight atoms (combinatorial blowup), got {}",
                cells.len()
            )
        } else {
            "brute force requires equal-weight measures on a common grid".into()
        })
    })?;

    let mut x: Vec<S> = Vec::with_capacity(n);
    let mut y: Vec<S> = Vec::with_capacity(n);
    for (c, &k) in cells.iter().zip(&mult) {
        for _ in 0..k {
            x.push(c.left_q);
            y.push(c.right_q);
        }
    }
    let y_lo = y[0];
    let y_hi = y[n - 1];
    let steps = ((y_hi - y_lo) / resolution + cst::<S>(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    let lattice: Vec<S> = (0..=steps)
        .map(|i| y_lo + resolution * S::from_usize(i).unwrap())
        .collect();

    let sum_y: S = y.iter().copied().sum();
    let window = resolution * cst::<S>(0.5);

    // suffix caps of y: caps[j] = Σ_{i>=j} y_i
    let mut caps = vec![S::zero(); n + 1];
    for j in (0..n).rev() {
        caps[j] = caps[j + 1] + y[j];
    }

    // enumerate from the top coordinate down, pruning on partial suffix sums;
    // shard the top coordinate across threads and min-reduce
    let nf = S::from_usize(n).unwrap();
    let best = par_map_indexed(lattice.len(), |top_idx| {
        let v_top = lattice[top_idx];
        let mut best = S::infinity();
        if n == 1 {
            if (v_top - sum_y).abs() <= window + tol {
                best = theta.eval(x[0] - v_top);
            }
            return best / nf;
        }
        if v_top > caps[n - 1] + tol {
            return best;
        }
        let mut stack_vals = vec![S::zero(); n];
        stack_vals[n - 1] = v_top;
        search_level(
            n - 2,
            top_idx,
            v_top,
            &lattice,
            &x,
            &caps,
            sum_y,
            window,
            tol,
            theta,
            &mut stack_vals,
            &mut best,
        );
        best / nf
    });
    let best = best.into_iter().fold(S::infinity(), |a, b| a.min(b));
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Domain("no feasible lattice point found".into()))
    }
}

/// Chooses coordinate `level` of the candidate vector given the sum of the
/// coordinates above it, then recurses. Sortedness is enforced through
/// `max_idx`, the suffix caps prune as soon as they are violated, and the
/// bottom coordinate is accepted only inside the total-sum window.
#[allow(clippy::too_many_arguments)]
fn search_level<S: Scalar>(
    level: usize,
    max_idx: usize,
    suffix_above: S,
    lattice: &[S],
    x: &[S],
    caps: &[S],
    sum_y: S,
    window: S,
    tol: S,
    theta: &CostSpec<S>,
    vals: &mut [S],
    best: &mut S,
) {
    if level == 0 {
        for &v in lattice[..=max_idx].iter() {
            let total = suffix_above + v;
            if (total - sum_y).abs() <= window + tol {
                vals[0] = v;
                let cost: S = x
                    .iter()
                    .zip(vals.iter())
                    .map(|(xi, yi)| theta.eval(*xi - *yi))
                    .sum();
                if cost < *best {
                    *best = cost;
                }
            }
        }
        return;
    }
    for idx in 0..=max_idx {
        let v = lattice[idx];
        // the suffix starting at `level` is suffix_above + v
        if suffix_above + v > caps[level] + tol {
            continue;
        }
        vals[level] = v;
        search_level(
            level - 1,
            idx,
            suffix_above + v,
            lattice,
            x,
            caps,
            sum_y,
            window,
            tol,
            theta,
            vals,
            best,
        );
    }
}

// --- Kantorovich duality lower bound ------------------------------------

/// Convex piecewise-linear test function: kinks and non-decreasing slopes,
/// anchored to zero at the first kink.
struct PiecewiseLinearConvex<S> {
    kinks: Vec<S>,
    slopes: Vec<S>, // len kinks + 1
}

impl<S: Scalar> PiecewiseLinearConvex<S> {
    fn eval(&self, y: S) -> S {
        let anchor = self.kinks[0];
        if y <= anchor {
            return self.slopes[0] * (y - anchor);
        }
        let mut val = S::zero();
        let mut prev = anchor;
        for (k, &kink) in self.kinks.iter().enumerate().skip(1) {
            if y <= kink {
                return val + self.slopes[k] * (y - prev);
            }
            val = val + self.slopes[k] * (kink - prev);
            prev = kink;
        }
        val + self.slopes[self.kinks.len()] * (y - prev)
    }

    /// Exact `Q₁ f(x) = min_y f(y) + θ(y − x)`: the minimum sits at a kink
    /// or at an interior stationary point of one of the pieces.
    fn hopf_lax_value(&self, theta: &CostSpec<S>, x: S) -> S {
        let mut best = S::infinity();
        for &k in &self.kinks {
            let c = self.eval(k) + theta.eval(k - x);
            if c < best {
                best = c;
            }
        }
        let m = self.kinks.len();
        for (p, &s) in self.slopes.iter().enumerate() {
            let lo = if p == 0 {
                S::neg_infinity()
            } else {
                self.kinks[p - 1]
            };
            let hi = if p == m { S::infinity() } else { self.kinks[p] };
            if let Ok(d) = theta.inv_deriv(-s) {
                let y = x + d;
                if y > lo && y < hi {
                    let c = self.eval(y) + theta.eval(y - x);
                    if c < best {
                        best = c;
                    }
                }
            }
        }
        best
    }
}

/// Maximize a concave 1-D function on `[lo, hi]` by ternary search, shrinking
/// both ends on ties. Returns the best argument seen.
fn ternary_max<S: Scalar>(f: &impl Fn(S) -> S, mut lo: S, mut hi: S, iters: usize) -> (S, S) {
    let third = cst::<S>(1.0 / 3.0);
    let mut best_arg = (lo + hi) * cst::<S>(0.5);
    let mut best_val = f(best_arg);
    for &e in &[lo, hi] {
        let v = f(e);
        if v > best_val {
            best_val = v;
            best_arg = e;
        }
    }
    for _ in 0..iters {
        let m1 = lo + (hi - lo) * third;
        let m2 = hi - (hi - lo) * third;
        let (f1, f2) = (f(m1), f(m2));
        if f1 > best_val {
            best_val = f1;
            best_arg = m1;
        }
        if f2 > best_val {
            best_val = f2;
            best_arg = m2;
        }
        if f1 > f2 {
            hi = m2;
        } else if f2 > f1 {
            lo = m1;
        } else {
            lo = m1;
            hi = m2;
        }
    }
    (best_arg, best_val)
}

/// Kantorovich duality lower bound
/// `sup_f ∫ Q₁ f dμ − ∫ f dν` over convex piecewise-linear `f` with at most
/// `kink_budget` kinks placed on the joint atom grid.
///
/// Coordinate ascent over the base slope and the non-negative slope
/// increments; the result never exceeds the weak cost (weak duality) and the
/// gap shrinks as the kink budget grows.
pub fn duality_lower_bound<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    theta: &CostSpec<S>,
    kink_budget: usize,
) -> Result<S> {
    if kink_budget == 0 {
        return Err(Error::Parameter("kink budget must be at least 1".into()));
    }
    let mut grid: Vec<S> = mu.atoms().iter().chain(nu.atoms()).copied().collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let kinks: Vec<S> = if grid.len() <= kink_budget {
        grid
    } else {
        // evenly subsample the atom grid
        (0..kink_budget)
            .map(|i| grid[i * (grid.len() - 1) / (kink_budget - 1).max(1)])
            .collect::<Vec<_>>()
    };
    let mut kinks = kinks;
    kinks.dedup();
    let pieces = kinks.len() + 1;

    let span = {
        let lo = mu.atoms()[0].min(nu.atoms()[0]);
        let hi = mu.atoms().last().unwrap().max(*nu.atoms().last().unwrap());
        (hi - lo).max(S::one())
    };
    let bound = theta.deriv(cst::<S>(4.0) * span).abs() + cst::<S>(10.0);

    let objective = |base: S, incs: &[S]| -> S {
        let mut slopes = Vec::with_capacity(pieces);
        let mut s = base;
        slopes.push(s);
        for &d in incs {
            s = s + d;
            slopes.push(s);
        }
        let f = PiecewiseLinearConvex {
            kinks: kinks.clone(),
            slopes,
        };
        let gain: S = mu
            .atoms()
            .iter()
            .zip(mu.weights())
            .map(|(x, w)| *w * f.hopf_lax_value(theta, *x))
            .sum();
        let pay: S = nu
            .atoms()
            .iter()
            .zip(nu.weights())
            .map(|(y, w)| *w * f.eval(*y))
            .sum();
        gain - pay
    };

    let starts: Vec<(S, Vec<S>)> = vec![
        (S::zero(), vec![S::zero(); pieces - 1]),
        (
            -theta.deriv(span).abs() - S::one(),
            vec![S::zero(); pieces - 1],
        ),
    ];

    let mut best = S::neg_infinity();
    for (mut base, mut incs) in starts {
        let mut current = objective(base, &incs);
        for _pass in 0..40 {
            let before = current;
            let (b, v) = ternary_max(&|s| objective(s, &incs), -bound, bound, 64);
            if v > current {
                base = b;
                current = v;
            }
            for i in 0..incs.len() {
                let (d, v) = ternary_max(
                    &|di| {
                        let mut trial = incs.clone();
                        trial[i] = di;
                        objective(base, &trial)
                    },
                    S::zero(),
                    cst::<S>(2.0) * bound,
                    64,
                );
                if v > current {
                    incs[i] = d;
                    current = v;
                }
            }
            if current - before <= cst::<S>(1e-12) * (S::one() + current.abs()) {
                break;
            }
        }
        if current > best {
            best = current;
        }
    }
    Ok(best)
}
