//! Finitely supported probability measures on ℝ and the order structure
//! around them: CDF/quantile calculus, monotone rearrangement, vector
//! majorization, and the convex order.

use crate::scalar::{cst, Scalar};
use crate::{Error, Result};

/// Absolute tolerance for sum-equality checks in majorization and
/// convex-order tests. Inputs are desk scale, O(1)–O(10³).
const SUM_TOL: f64 = 1e-9;

/// A finitely supported probability measure on ℝ.
///
/// Atoms are kept strictly increasing (duplicate locations are merged at
/// construction, weights summed) and weights are normalized to sum to one.
/// The cumulative weights are stored so that the CDF and the quantile
/// function answer from the same prefix sums; this makes the Galois relation
/// `quantile(t) <= x  <=>  t <= cdf(x)` hold exactly in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S: Scalar> {
    atoms: Vec<S>,
    weights: Vec<S>,
    cum: Vec<S>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Builds a measure from atom locations and raw positive weights.
    /// Weights are rescaled to sum to one; duplicate atoms (exact bit
    /// equality) are merged with their weights summed.
    pub fn new(atoms: Vec<S>, weights: Vec<S>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Measure("atoms: empty support".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::Shape(format!(
                "atoms/weights length mismatch: {} vs {}",
                atoms.len(),
                weights.len()
            )));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::Measure(format!(
                    "atoms: non-finite entry at index {i}"
                )));
            }
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w <= S::zero() {
                return Err(Error::Measure(format!(
                    "weights: entry at index {i} must be finite and strictly positive"
                )));
            }
        }

        let mut pairs: Vec<(S, S)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // Merge exact duplicates; callers quantize locations themselves.
        let mut merged: Vec<(S, S)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 = last.1 + w,
                _ => merged.push((a, w)),
            }
        }

        let total: S = merged.iter().map(|p| p.1).sum();
        if !(total > S::zero()) || !total.is_finite() {
            return Err(Error::Measure(
                "weights: total mass must be positive and finite".into(),
            ));
        }

        let n = merged.len();
        let mut atoms: Vec<S> = Vec::with_capacity(n);
        let mut weights: Vec<S> = Vec::with_capacity(n);
        for (a, w) in &merged {
            atoms.push(*a);
            weights.push(*w / total);
        }
        // Pin the final weight so the running sum lands on exactly 1; this
        // keeps quantile(1) well defined and exp-moment sums exact.
        if n > 1 {
            let prefix: S = weights[..n - 1].iter().copied().sum();
            let last = S::one() - prefix;
            if !(last > S::zero()) {
                return Err(Error::Measure(
                    "weights: relative weight too small to normalize".into(),
                ));
            }
            weights[n - 1] = last;
        } else {
            weights[0] = S::one();
        }

        let mut cum = Vec::with_capacity(n);
        let mut acc = S::zero();
        for w in &weights {
            acc = acc + *w;
            cum.push(acc);
        }
        cum[n - 1] = S::one();

        Ok(Self {
            atoms,
            weights,
            cum,
        })
    }

    /// Uniform measure on the given locations.
    pub fn uniform(atoms: Vec<S>) -> Result<Self> {
        let w = vec![S::one(); atoms.len()];
        Self::new(atoms, w)
    }

    /// Point mass at `x`.
    pub fn dirac(x: S) -> Result<Self> {
        Self::new(vec![x], vec![S::one()])
    }

    /// Sorted atom locations.
    pub fn atoms(&self) -> &[S] {
        &self.atoms
    }

    /// Normalized weights, aligned with [`Self::atoms`].
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Cumulative weights; the last entry is exactly one.
    pub fn cumulative(&self) -> &[S] {
        &self.cum
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Always false: construction rejects empty supports.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `F(x) = μ(-∞, x]`.
    pub fn cdf(&self, x: S) -> S {
        // index of the last atom <= x
        match self.atoms.partition_point(|a| *a <= x) {
            0 => S::zero(),
            k => self.cum[k - 1],
        }
    }

    /// Left-continuous generalized inverse `inf { x : F(x) >= t }` for
    /// `t ∈ (0, 1]`.
    pub fn quantile(&self, t: S) -> Result<S> {
        if !(t > S::zero() && t <= S::one()) {
            return Err(Error::Domain(format!(
                "quantile level must lie in (0, 1], got {t}"
            )));
        }
        let k = self.cum.partition_point(|c| *c < t);
        Ok(self.atoms[k.min(self.atoms.len() - 1)])
    }

    /// Mean of the measure.
    pub fn mean(&self) -> S {
        self.expectation(|x| x)
    }

    /// `∫ f dμ` as an exact finite sum over atoms.
    pub fn expectation(&self, f: impl Fn(S) -> S) -> S {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| *w * f(*a))
            .sum()
    }

    /// Call-function value `∫ (x − k)₊ dμ`.
    pub fn call_value(&self, k: S) -> S {
        self.expectation(|x| (x - k).max(S::zero()))
    }
}

/// Real vector kept in non-decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedVector<S: Scalar>(Vec<S>);

impl<S: Scalar> SortedVector<S> {
    /// Sorts the entries and wraps them. Rejects non-finite values.
    pub fn new(mut entries: Vec<S>) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter(
                "sorted vector entries must be finite".into(),
            ));
        }
        entries.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self(entries))
    }

    /// The entries, non-decreasing.
    pub fn entries(&self) -> &[S] {
        &self.0
    }

    /// Vector length.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when the vector has no entries.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// True iff `a` is majorized by `b`: every top-`j` partial sum of `a` is at
/// most that of `b` for `j = 1..n-1`, and the totals agree within `1e-9`.
pub fn is_majorized<S: Scalar>(a: &SortedVector<S>, b: &SortedVector<S>) -> Result<bool> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::Shape(format!(
            "majorization needs equal lengths, got {} vs {}",
            n,
            b.len()
        )));
    }
    let tol = cst::<S>(SUM_TOL);
    let mut top_a = S::zero();
    let mut top_b = S::zero();
    for j in 1..n {
        top_a = top_a + a.entries()[n - j];
        top_b = top_b + b.entries()[n - j];
        if top_a > top_b + tol {
            return Ok(false);
        }
    }
    let total_a: S = a.entries().iter().copied().sum();
    let total_b: S = b.entries().iter().copied().sum();
    Ok((total_a - total_b).abs() <= tol)
}

/// Convex-order test `ν₁ ⪯ ν₂`, i.e. `∫ f dν₁ <= ∫ f dν₂` for every convex
/// `f`.
///
/// Decided by the call-function criterion: the means must agree within
/// `1e-9` and `∫ (x − k)₊ dν₁ <= ∫ (x − k)₊ dν₂` at every atom location `k`
/// of either measure. For finitely supported measures with equal means the
/// call functions with kinks on the joint atom grid generate the relevant
/// cone, so this is exact.
pub fn convex_order_leq<S: Scalar>(nu1: &DiscreteMeasure<S>, nu2: &DiscreteMeasure<S>) -> bool {
    let tol = cst::<S>(SUM_TOL);
    if (nu1.mean() - nu2.mean()).abs() > tol {
        return false;
    }
    nu1.atoms()
        .iter()
        .chain(nu2.atoms())
        .all(|&k| nu1.call_value(k) <= nu2.call_value(k) + tol)
}

/// One cell of the common refinement of two cumulative-weight partitions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RefinementCell<S> {
    /// Upper cumulative level of the cell; the cell is `(upper - mass, upper]`.
    pub upper: S,
    /// Mass carried by the cell.
    pub mass: S,
    /// `F_μ⁻¹` on the cell.
    pub left_q: S,
    /// `F_ν⁻¹` on the cell.
    pub right_q: S,
    /// Index of the μ atom the cell belongs to.
    pub left_idx: usize,
}

/// Common refinement of the cumulative-weight breakpoints of two measures.
/// Both quantile functions are constant on every cell.
pub(crate) fn common_refinement<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Vec<RefinementCell<S>> {
    let mut levels: Vec<S> = mu
        .cumulative()
        .iter()
        .chain(nu.cumulative())
        .copied()
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();

    let mut cells = Vec::with_capacity(levels.len());
    let mut prev = S::zero();
    for u in levels {
        let mass = u - prev;
        if mass <= S::zero() {
            prev = u;
            continue;
        }
        let left_idx = mu.cumulative().partition_point(|c| *c < u);
        let left_idx = left_idx.min(mu.len() - 1);
        let right_idx = nu.cumulative().partition_point(|c| *c < u);
        let right_idx = right_idx.min(nu.len() - 1);
        cells.push(RefinementCell {
            upper: u,
            mass,
            left_q: mu.atoms()[left_idx],
            right_q: nu.atoms()[right_idx],
            left_idx,
        });
        prev = u;
    }
    cells
}

/// One row of a [`RearrangementMap`]: the quantile cell `(level − mass, level]`
/// sends `source` to `target`.
#[derive(Debug, Clone, Copy)]
pub struct RearrangementRow<S> {
    /// Upper cumulative level of the cell.
    pub level: S,
    /// Mass carried by the cell.
    pub mass: S,
    /// `F_μ⁻¹` on the cell.
    pub source: S,
    /// `F_ν⁻¹` on the cell.
    pub target: S,
}

/// The monotone rearrangement from μ to ν tabulated over the common
/// refinement of their cumulative-weight breakpoints. Targets are
/// non-decreasing along the table and pushing μ forward through the map
/// reproduces ν atom by atom.
#[derive(Debug, Clone)]
pub struct RearrangementMap<S: Scalar> {
    rows: Vec<RearrangementRow<S>>,
}

impl<S: Scalar> RearrangementMap<S> {
    /// Table rows in increasing quantile-level order.
    pub fn rows(&self) -> &[RearrangementRow<S>] {
        &self.rows
    }

    /// Law of the targets under the tabulated masses; equals ν by
    /// construction.
    pub fn push_forward(&self) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::new(
            self.rows.iter().map(|r| r.target).collect(),
            self.rows.iter().map(|r| r.mass).collect(),
        )
    }
}

/// Quantile coupling between `mu` and `nu`: pairs `F_μ⁻¹(u)` with `F_ν⁻¹(u)`
/// over the common refinement of the two weight partitions.
pub fn monotone_rearrangement<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> RearrangementMap<S> {
    let rows = common_refinement(mu, nu)
        .into_iter()
        .map(|c| RearrangementRow {
            level: c.upper,
            mass: c.mass,
            source: c.left_q,
            target: c.right_q,
        })
        .collect();
    RearrangementMap { rows }
}
