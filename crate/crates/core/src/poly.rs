//! Polynomials in factored form and in ascending coefficient form.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{balance, hessenberg_eigenvalues, CMatrix};
use crate::scalar::{falling, is_finite_c, Real, C};

/// Points closer than this to the origin are treated as the origin.
pub const ORIGIN_EPS: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Root<T: Real> {
    pub point: C<T>,
    pub mult: usize,
}

/// `leading * prod (z - point)^mult`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FactoredPoly<T: Real> {
    pub leading: C<T>,
    pub roots: Vec<Root<T>>,
}

impl<T: Real> FactoredPoly<T> {
    /// Builds a polynomial, merging exactly repeated root points.
    pub fn new(leading: C<T>, roots: impl IntoIterator<Item = (C<T>, usize)>) -> Result<Self> {
        if leading.norm() == T::zero() || !is_finite_c(leading) {
            return Err(Error::InvalidPolynomial("leading coefficient must be nonzero".into()));
        }
        let mut merged: Vec<Root<T>> = Vec::new();
        for (point, mult) in roots {
            if mult == 0 {
                return Err(Error::InvalidPolynomial("root multiplicity must be positive".into()));
            }
            if !is_finite_c(point) {
                return Err(Error::InvalidPolynomial("root must be finite".into()));
            }
            match merged.iter_mut().find(|r| r.point == point) {
                Some(r) => r.mult += mult,
                None => merged.push(Root { point, mult }),
            }
        }
        Ok(Self { leading, roots: merged })
    }

    /// Monic polynomial with the given simple zeros.
    pub fn from_zeros(zeros: &[C<T>]) -> Result<Self> {
        Self::new(C::one(), zeros.iter().map(|&z| (z, 1)))
    }

    pub fn constant(c: C<T>) -> Result<Self> {
        Self::new(c, std::iter::empty())
    }

    /// Re-validates a deserialized value.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.leading, self.roots.into_iter().map(|r| (r.point, r.mult)))
    }

    pub fn degree(&self) -> usize {
        self.roots.iter().map(|r| r.mult).sum()
    }

    /// `ord_0`: multiplicity of the zero at the origin.
    pub fn origin_multiplicity(&self) -> usize {
        self.roots
            .iter()
            .filter(|r| r.point.norm() <= T::lit(ORIGIN_EPS))
            .map(|r| r.mult)
            .sum()
    }

    pub fn eval(&self, z: C<T>) -> C<T> {
        self.roots
            .iter()
            .fold(self.leading, |acc, r| acc * (z - r.point).powu(r.mult as u32))
    }

    /// Ascending coefficients.
    pub fn coefficients(&self) -> Vec<C<T>> {
        let mut c = vec![self.leading];
        for r in &self.roots {
            for _ in 0..r.mult {
                c = mul_linear(&c, r.point);
            }
        }
        c
    }

    /// Multiplies by `(z - point)^mult`.
    pub fn times_root(&self, point: C<T>, mult: usize) -> Result<Self> {
        Self::new(
            self.leading,
            self.roots
                .iter()
                .map(|r| (r.point, r.mult))
                .chain(std::iter::once((point, mult))),
        )
    }
}

/// Multiplies ascending coefficients by `(z - a)`.
pub fn mul_linear<T: Real>(c: &[C<T>], a: C<T>) -> Vec<C<T>> {
    let mut out = vec![C::zero(); c.len() + 1];
    for (k, v) in c.iter().enumerate() {
        out[k + 1] += *v;
        out[k] -= *v * a;
    }
    out
}

pub fn poly_mul<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Horner evaluation of ascending coefficients.
pub fn eval_coeffs<T: Real>(c: &[C<T>], z: C<T>) -> C<T> {
    c.iter().rev().fold(C::zero(), |acc, v| acc * z + v)
}

/// `p^{(order)}(z)` for ascending coefficients.
pub fn derivative_at<T: Real>(c: &[C<T>], z: C<T>, order: usize) -> C<T> {
    if order >= c.len() {
        return C::zero();
    }
    let mut acc = C::zero();
    for n in (order..c.len()).rev() {
        acc = acc * z + c[n] * falling::<T>(n, order);
    }
    acc
}

/// Drops trailing coefficients whose magnitude is at most `rel` times the
/// largest coefficient.
pub fn trim<T: Real>(c: &[C<T>], rel: T) -> Vec<C<T>> {
    let big = c.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let mut end = c.len();
    while end > 0 && c[end - 1].norm() <= rel * big {
        end -= 1;
    }
    c[..end].to_vec()
}

/// Roots of a polynomial in ascending coefficient form from the
/// eigenvalues of its balanced companion matrix. The leading coefficient
/// must be nonzero.
pub fn polynomial_roots<T: Real>(c: &[C<T>]) -> Result<Vec<C<T>>> {
    let c = trim(c, T::zero());
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    // peel exact zeros at the origin
    let lead_zero = c.iter().take_while(|v| v.is_zero()).count();
    let core = &c[lead_zero..];
    let n = core.len() - 1;
    let mut roots = vec![C::zero(); lead_zero];
    if n == 0 {
        return Ok(roots);
    }
    let top = core[n];
    let mut h = CMatrix::zeros(n, n);
    for i in 1..n {
        h[(i, i - 1)] = C::one();
    }
    for i in 0..n {
        h[(i, n - 1)] = -core[i] / top;
    }
    balance(&mut h);
    roots.extend(hessenberg_eigenvalues(h)?);
    Ok(roots)
}

/// Newton refinement of a root of an ascending-coefficient polynomial.
/// Returns the refined point, or the input when the iteration stalls.
pub fn newton_polish<T: Real>(c: &[C<T>], z0: C<T>, iters: usize) -> C<T> {
    let mut z = z0;
    for _ in 0..iters {
        let f = eval_coeffs(c, z);
        let d = derivative_at(c, z, 1);
        if d.norm() == T::zero() {
            break;
        }
        let step = f / d;
        if !is_finite_c(step) {
            break;
        }
        let next = z - step;
        // refuse steps that increase the residual
        if eval_coeffs(c, next).norm() > f.norm() {
            break;
        }
        z = next;
        if step.norm() <= T::epsilon() * (T::one() + z.norm()) {
            break;
        }
    }
    z
}

pub fn complex<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}
