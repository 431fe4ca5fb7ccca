//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the engine can run on.
///
/// Besides the usual `num_traits` surface this carries the two special
/// functions that are not expressible through `Float` (`erfc`, `ln_gamma`),
/// so every implementation is backed by a correctly rounded libm routine.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + ndarray::ScalarOperand
    + Send
    + Sync
    + serde::Serialize
    + for<'de> serde::Deserialize<'de>
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    fn erfc(self) -> Self;

    fn ln_gamma(self) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($t:ty, $erfc:path, $lgamma:path) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn erfc(self) -> Self {
                $erfc(self)
            }

            #[inline]
            fn ln_gamma(self) -> Self {
                $lgamma(self)
            }
        }
    };
}

impl_real!(f64, libm::erfc, libm::lgamma);
impl_real!(f32, libm::erfcf, libm::lgammaf);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_functions_agree_across_precisions() {
        for &x in &[0.1, 0.7, 1.5, 3.0, 7.5] {
            let lo = <f32 as Real>::erfc(x as f32) as f64;
            let hi = <f64 as Real>::erfc(x);
            assert!((lo - hi).abs() <= 1e-6 * hi.abs().max(1e-30), "erfc({x})");
            let lo = <f32 as Real>::ln_gamma(x as f32) as f64;
            assert!((lo - <f64 as Real>::ln_gamma(x)).abs() < 1e-5);
        }
    }
}
