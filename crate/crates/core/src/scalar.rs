//! Scalar abstraction shared by the numeric modules.

use nalgebra as na;
use num_traits as nt;

/// Floating point type the numeric core is generic over (`f32` or `f64`).
pub trait Real:
    na::RealField + na::Scalar + Copy + nt::FromPrimitive + nt::ToPrimitive + Send + Sync + 'static
{
    /// Tolerance used for orthonormality and factorization checks.
    const CHECK_TOL: Self;
    /// Pivot / feasibility tolerance for the simplex solver.
    const LP_TOL: Self;

    fn lit(x: f64) -> Self;
    fn as_f64(self) -> f64;

    fn usize(x: usize) -> Self {
        Self::lit(x as f64)
    }
}

impl Real for f64 {
    const CHECK_TOL: Self = 1e-10;
    const LP_TOL: Self = 1e-10;

    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const CHECK_TOL: Self = 1e-4;
    const LP_TOL: Self = 1e-5;

    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}
