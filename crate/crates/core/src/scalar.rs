//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All pipelines are generic over [`Real`], which is any floating-point type
//! nalgebra can decompose and num-complex can wrap. In practice this means
//! `f32` and `f64`; the concrete aliases at the crate root pin the common
//! choices.

use std::iter::Sum;

use num_complex::Complex;
use num_traits::ToPrimitive;

/// Floating-point scalar usable by the panel, transform, and spectrum code.
///
/// `RealField` brings the transcendental functions and the nalgebra
/// decompositions; `ToPrimitive`/`Sum` cover formatting and reductions.
pub trait Real: nalgebra::RealField + ToPrimitive + Copy + Sum {
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Conversion from a count or index.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::cast(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Builds a complex number from `f64` parts in the working precision.
#[inline]
pub fn complex<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::cast(re), T::cast(im))
}

/// Machine-scaled tolerance: `eps * max(1, scale)`.
#[inline]
pub fn scaled_eps<T: Real>(eps: f64, scale: T) -> T {
    T::cast(eps) * T::one().max(scale)
}
