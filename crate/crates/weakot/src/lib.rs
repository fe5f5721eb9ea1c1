//! Weak and classical optimal transport on the real line, with the convex
//! calculus that connects them.
//!
//! The crate is organised around a handful of ideas:
//!
//! - [`measures`] — finitely supported probability measures on ℝ with
//!   CDF/quantile calculus, monotone rearrangement, majorization and
//!   convex-order tests.
//! - [`costs`] — convex cost functions θ with θ(0) = 0: evaluation,
//!   derivative, inverse derivative, Legendre conjugate, and splits
//!   α + β = θ.
//! - [`hopflax`] — the inf-convolution operator
//!   `Q_t f(x) = inf_y { f(y) + t θ((y − x)/t) }` for convex data: exact
//!   evaluation through the minimizer map, a brute-force grid oracle, cost
//!   splitting `f = f₁ + f₂` with `Q_t^θ f = Q_t^α f₁ + Q_t^β f₂`, and a
//!   Hamilton-Jacobi residual check.
//! - [`transport`] — classical (quantile-coupling) and weak (barycentric)
//!   transport costs between discrete measures, the certificate for their
//!   equality, the cost-independent optimal intermediate measure ν₁,
//!   brute-force oracles and a Kantorovich duality lower bound.
//! - [`classf`] — the family of convex C² functions on ℝⁿ whose gradient is
//!   everywhere an eigenvector of their Hessian: membership tests, potential
//!   construction from a monotone profile, curl verification, and
//!   cost-independence checks for monotone transport maps.
//!
//! All numerical kernels are generic over the scalar type through the
//! [`Scalar`] trait (`f32` or `f64`); the aliases at the crate root pin the
//! `f64` instantiations that the CLI and the test suites use.

// `!(x > y)` guards double as NaN rejection throughout; `x <= y` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classf;
pub mod costs;
pub mod hopflax;
pub mod measures;
mod numerics;
mod scalar;
pub mod transport;

pub use scalar::Scalar;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched dimensions or lengths.
    #[error("shape error: {0}")]
    Shape(String),

    /// A parameter violates the documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The inputs are valid but the operation cannot serve them
    /// (e.g. a non-strictly-convex cost where θ'⁻¹ is required).
    #[error("capability error: {0}")]
    Capability(String),

    /// The request would exceed the supported problem size.
    #[error("resource error: {0}")]
    Resource(String),

    /// A measure failed its construction invariants.
    #[error("invalid measure: {0}")]
    Measure(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// `f64` discrete measure.
pub type DiscreteMeasure64 = measures::DiscreteMeasure<f64>;
/// `f64` sorted vector.
pub type SortedVector64 = measures::SortedVector<f64>;
/// `f64` convex cost specification.
pub type CostSpec64 = costs::CostSpec<f64>;
/// `f64` cost split α + β = θ.
pub type CostSplit64 = costs::CostSplit<f64>;
/// `f64` convex initial datum for the Hopf-Lax operator.
pub type ConvexFunction64 = hopflax::ConvexFunction1D<f64>;
/// `f64` uniformly spaced grid.
pub type Grid64 = hopflax::Grid<f64>;
/// `f64` grid function.
pub type GridFunction64 = hopflax::GridFunction<f64>;
/// `f64` coupling report.
pub type CouplingReport64 = transport::CouplingReport<f64>;
/// `f64` smooth function on ℝⁿ.
pub type SmoothFunction64 = classf::SmoothFunctionND<f64>;
/// `f64` vector field on ℝⁿ.
pub type VectorField64 = classf::VectorFieldND<f64>;
