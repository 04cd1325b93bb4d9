use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumCast};
use std::fmt::{Debug, Display};

/// Real scalar the generic layers run on.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or tolerance.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Cx<T> = Complex<T>;

pub fn cx<T: Scalar>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

pub fn real<T: Scalar>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

pub fn czero<T: Scalar>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

pub fn cone<T: Scalar>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

/// Modulus without the overflow-prone `sqrt(re^2 + im^2)`.
pub fn modulus<T: Scalar>(z: Cx<T>) -> T {
    z.re.hypot(z.im)
}
