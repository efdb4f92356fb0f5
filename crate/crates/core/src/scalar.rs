//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the protocols, evaluators and solvers are generic over.
///
/// Implemented for `f32` and `f64`. All acceptance tolerances in this crate
/// assume `f64`; `f32` is supported for embedding the encoders in
/// low-precision pipelines.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count fits in the scalar")
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    /// `2^bits` as a scalar.
    fn pow2(bits: u32) -> Self {
        Self::lit(2.0).powi(bits as i32)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Irrational constants that appear in optimal parameters and published costs.
pub mod consts {
    use super::Real;

    pub fn sqrt2<T: Real>() -> T {
        T::SQRT_2()
    }

    pub fn sqrt3<T: Real>() -> T {
        T::lit(3.0).sqrt()
    }

    pub fn sqrt5<T: Real>() -> T {
        T::lit(5.0).sqrt()
    }

    pub fn sqrt10<T: Real>() -> T {
        T::lit(10.0).sqrt()
    }

    /// Golden ratio `(1 + √5) / 2`.
    pub fn phi<T: Real>() -> T {
        (T::one() + sqrt5::<T>()) / T::lit(2.0)
    }
}
