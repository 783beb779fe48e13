use std::fmt;

use num_traits::float::FloatConst;
use num_traits::{Float, FromPrimitive, NumAssign};

/// Scalar type the whole library is generic over.
///
/// Everything numeric (kinematics, controllers, barriers, the QP solver and
/// the simulator) is written against this trait so the same code runs in
/// `f32` or `f64`. The crate root exports `f64` aliases for the common case.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + Default + fmt::Debug + fmt::Display + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lift an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}
