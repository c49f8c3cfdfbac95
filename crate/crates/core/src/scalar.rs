//! Scalar abstraction shared by every engine.
//!
//! All numerics are written against [`Real`] so the same code runs in `f32`
//! and `f64`. Tolerances are stated for `f64`; use [`Real::tol`] to obtain a
//! threshold that is never tighter than the working precision allows.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the engines: `f32` or `f64`.
pub trait Real:
    Float
    + num_traits::NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the literal is not representable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    /// Widens to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance of `x` in `f64`, floored at `eps_multiple` machine epsilons.
    #[inline]
    fn tol(x: f64, eps_multiple: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(eps_multiple))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Matrix entry: a real scalar or a complex number built on one.
pub trait Entry:
    Copy
    + Debug
    + PartialEq
    + num_traits::Zero
    + num_traits::One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + Send
    + Sync
    + 'static
{
    type Real: Real;

    fn is_finite_entry(&self) -> bool;
    fn modulus(&self) -> Self::Real;
    fn conj_entry(&self) -> Self;
    fn from_real(x: Self::Real) -> Self;
}

impl<T: Real> Entry for T {
    type Real = T;

    #[inline]
    fn is_finite_entry(&self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn modulus(&self) -> T {
        self.abs()
    }
    #[inline]
    fn conj_entry(&self) -> T {
        *self
    }
    #[inline]
    fn from_real(x: T) -> T {
        x
    }
}

impl<T: Real> Entry for Complex<T> {
    type Real = T;

    #[inline]
    fn is_finite_entry(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn modulus(&self) -> T {
        self.norm()
    }
    #[inline]
    fn conj_entry(&self) -> Self {
        self.conj()
    }
    #[inline]
    fn from_real(x: T) -> Self {
        Complex::new(x, T::zero())
    }
}
