//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`] and operate on
//! `Complex<T>` values. `f64` is the working precision for the tolerances
//! used throughout; `f32` compiles and runs but only meets much looser
//! tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point type backing the complex arithmetic.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + Sum
    + 'static
{
    /// Converts an `f64` literal. Every finite literal is representable
    /// (possibly rounded) in `f32` and `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub fn cx<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Falling factorial `n (n-1) ... (n-m+1)`; zero when `m > n`.
pub fn falling<T: Real>(n: usize, m: usize) -> T {
    if m > n {
        return T::zero();
    }
    (n - m + 1..=n).fold(T::one(), |acc, k| acc * T::of(k))
}

pub fn factorial<T: Real>(n: usize) -> T {
    falling(n, n)
}

/// Neumaier-compensated accumulator for complex sums. Summation order is
/// the call order, so results are deterministic.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T: Real> {
    sum: C<T>,
    comp: C<T>,
    abs: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: C::new(T::zero(), T::zero()),
            comp: C::new(T::zero(), T::zero()),
            abs: T::zero(),
        }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: C<T>) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.comp.im);
        self.abs += x.norm();
    }

    pub fn value(&self) -> C<T> {
        self.sum + self.comp
    }

    /// Sum of magnitudes of everything added; scales the rounding error.
    pub fn abs_total(&self) -> T {
        self.abs
    }
}

fn neumaier<T: Real>(sum: T, x: T, comp: &mut T) -> T {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

/// True when both parts are finite.
pub fn is_finite_c<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
