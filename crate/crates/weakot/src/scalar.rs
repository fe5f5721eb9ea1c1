use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::Arc;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the numerical kernels are generic over: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Sum + Display + Debug + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Sum + Display + Debug + Send + Sync + 'static {}

/// Shorthand for lifting an `f64` constant into the working scalar type.
#[inline]
pub(crate) fn cst<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("f64 constant must convert into the scalar type")
}

/// Shared callable ℝ → ℝ.
pub(crate) type RealFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;
