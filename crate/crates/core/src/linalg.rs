//! Small dense complex linear algebra: Hermitian Cholesky, LU with partial
//! pivoting, and eigenvalues of upper Hessenberg matrices.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{is_finite_c, Real, C};

fn l1<T: Real>(z: C<T>) -> T {
    z.re.abs() + z.im.abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .fold(C::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols.min(self.rows) {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Submatrix with one row and one column removed.
    pub fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let mut out = Self::zeros(self.rows - 1, self.cols - 1);
        let mut r = 0;
        for i in 0..self.rows {
            if i == skip_row {
                continue;
            }
            let mut c = 0;
            for j in 0..self.cols {
                if j == skip_col {
                    continue;
                }
                out[(r, c)] = self[(i, j)];
                c += 1;
            }
            r += 1;
        }
        out
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// `A = L L^H` for Hermitian positive definite `A`.
#[derive(Clone, Debug)]
pub struct Cholesky<T: Real> {
    l: CMatrix<T>,
    pivots: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Fails with `SingularGram` when a pivot is not strictly positive.
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows();
        let mut l = CMatrix::zeros(n, n);
        let mut pivots = Vec::with_capacity(n);
        for j in 0..n {
            let mut s = a[(j, j)].re;
            for k in 0..j {
                s -= l[(j, k)].norm_sqr();
            }
            if !(s > T::zero()) || !s.is_finite() {
                let first = pivots.first().copied().unwrap_or(T::one());
                return Err(Error::SingularGram {
                    pivot_ratio: (s / first).as_f64(),
                });
            }
            pivots.push(s);
            let d = s.sqrt();
            l[(j, j)] = Complex::new(d, T::zero());
            for i in j + 1..n {
                let mut v = a[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = v / d;
            }
        }
        Ok(Self { l, pivots })
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.pivots.len();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.l[(i, k)] * y[k];
            }
            y[i] = v / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = v / self.l[(i, i)];
        }
        y
    }

    /// Squared diagonal of `L`, in elimination order.
    pub fn pivots(&self) -> &[T] {
        &self.pivots
    }

    /// Smallest pivot relative to the first one.
    pub fn pivot_ratio(&self) -> T {
        let first = self.pivots.first().copied().unwrap_or(T::one());
        self.pivots.iter().fold(T::infinity(), |m, &p| m.min(p)) / first
    }
}

/// Hermitian positive definite solve after symmetric diagonal scaling.
/// Returns the solution and the pivot ratio of the scaled factorization.
pub fn solve_hpd_scaled<T: Real>(a: &CMatrix<T>, b: &[C<T>]) -> Result<(Vec<C<T>>, T)> {
    let n = a.rows();
    let scale: Vec<T> = (0..n)
        .map(|i| {
            let d = a[(i, i)].re;
            if d > T::zero() {
                T::one() / d.sqrt()
            } else {
                T::one()
            }
        })
        .collect();
    let scaled = CMatrix::from_fn(n, n, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let chol = Cholesky::new(&scaled)?;
    let rhs: Vec<C<T>> = b.iter().zip(&scale).map(|(v, s)| v * *s).collect();
    let y = chol.solve(&rhs);
    let x = y.iter().zip(&scale).map(|(v, s)| v * *s).collect();
    Ok((x, chol.pivot_ratio()))
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &CMatrix<T>) -> Self {
        assert!(a.is_square());
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            if pivot.norm() == T::zero() {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Self { lu, perm, sign }
    }

    pub fn det(&self) -> C<T> {
        let n = self.lu.rows();
        (0..n).fold(Complex::new(self.sign, T::zero()), |acc, i| acc * self.lu[(i, i)])
    }

    /// Smallest |U_ii| relative to the largest.
    pub fn pivot_ratio(&self) -> T {
        let n = self.lu.rows();
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for i in 0..n {
            let v = self.lu[(i, i)].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi == T::zero() {
            T::zero()
        } else {
            lo / hi
        }
    }

    pub fn solve(&self, b: &[C<T>]) -> Option<Vec<C<T>>> {
        let n = self.lu.rows();
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            let d = self.lu[(i, i)];
            if d.norm() == T::zero() {
                return None;
            }
            x[i] /= d;
        }
        Some(x)
    }
}

pub fn determinant<T: Real>(a: &CMatrix<T>) -> C<T> {
    if a.rows() == 0 {
        return C::one();
    }
    Lu::new(a).det()
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
struct Dw<T> {
    hi: T,
    lo: T,
}

impl<T: Real> Dw<T> {
    fn from(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    fn two_sum(a: T, b: T) -> Self {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: e }
    }

    fn fast(a: T, b: T) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let v = Self::fast(s.hi, s.lo + t.hi);
        Self::fast(v.hi, v.lo + t.lo)
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::fast(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Self::from(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Self::from(q2)).neg());
        let q3 = r.hi / o.hi;
        Self::fast(q1, q2).add(Self::from(q3))
    }

    fn value(self) -> T {
        self.hi + self.lo
    }
}

#[derive(Clone, Copy, Debug)]
struct Dwc<T> {
    re: Dw<T>,
    im: Dw<T>,
}

impl<T: Real> Dwc<T> {
    fn from(z: C<T>) -> Self {
        Self {
            re: Dw::from(z.re),
            im: Dw::from(z.im),
        }
    }

    fn sub(self, o: Self) -> Self {
        Self {
            re: self.re.add(o.re.neg()),
            im: self.im.add(o.im.neg()),
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn div(self, o: Self) -> Self {
        let den = o.re.mul(o.re).add(o.im.mul(o.im));
        let num = self.mul(Self {
            re: o.re,
            im: o.im.neg(),
        });
        Self {
            re: num.re.div(den),
            im: num.im.div(den),
        }
    }

    fn abs_hi(&self) -> T {
        self.re.hi.abs() + self.im.hi.abs()
    }
}

/// Determinant by partially pivoted elimination carried out in double-word
/// arithmetic, so the result is accurate to roughly working precision even
/// when the matrix is poorly conditioned.
pub fn determinant_extended<T: Real>(a: &CMatrix<T>) -> C<T> {
    let n = a.rows();
    assert!(a.is_square());
    let mut m: Vec<Vec<Dwc<T>>> = (0..n).map(|i| (0..n).map(|j| Dwc::from(a[(i, j)])).collect()).collect();
    let mut det = Dwc::from(C::one());
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| {
                m[x][k]
                    .abs_hi()
                    .partial_cmp(&m[y][k].abs_hi())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        if m[p][k].abs_hi() == T::zero() {
            return C::zero();
        }
        if p != k {
            m.swap(p, k);
            det = Dwc {
                re: det.re.neg(),
                im: det.im.neg(),
            };
        }
        let pivot = m[k][k];
        det = det.mul(pivot);
        for i in k + 1..n {
            let f = m[i][k].div(pivot);
            for j in k + 1..n {
                m[i][j] = m[i][j].sub(f.mul(m[k][j]));
            }
        }
    }
    C::new(det.re.value(), det.im.value())
}

/// Diagonal similarity balancing (Parlett-Reinsch, radix 2). Preserves
/// Hessenberg structure.
pub fn balance<T: Real>(h: &mut CMatrix<T>) {
    let n = h.rows();
    let two = T::lit(2.0);
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut col = T::zero();
            let mut row = T::zero();
            for j in 0..n {
                if j != i {
                    col += l1(h[(j, i)]);
                    row += l1(h[(i, j)]);
                }
            }
            if col == T::zero() || row == T::zero() {
                continue;
            }
            let s = col + row;
            let mut f = T::one();
            let mut c = col;
            let mut r = row;
            while c < r / two {
                c = c * two * two;
                r /= two * two;
                f *= two;
            }
            while c > r * two {
                c /= two * two;
                r = r * two * two;
                f /= two;
            }
            if (c + r) < T::lit(0.95) * s {
                converged = false;
                for j in 0..n {
                    h[(i, j)] /= f;
                    h[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the explicitly shifted QR
/// iteration with Wilkinson shifts and Givens rotations.
pub fn hessenberg_eigenvalues<T: Real>(mut h: CMatrix<T>) -> Result<Vec<C<T>>> {
    let n = h.rows();
    let mut eig = vec![C::zero(); n];
    if n == 0 {
        return Ok(eig);
    }
    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut iters = 0usize;
    let max_iters = 60 * n.max(4);
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = l1(h[(l - 1, l - 1)]) + l1(h[(l, l)]);
            let s = if s == T::zero() { T::one() } else { s };
            if l1(h[(l, l - 1)]) <= eps * s {
                h[(l, l - 1)] = C::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iters = 0;
            continue;
        }
        iters += 1;
        total += 1;
        if total > max_iters {
            return Err(Error::NoConvergence);
        }
        let shift = if iters.is_multiple_of(11) {
            // exceptional shift breaks rare cycles
            h[(hi, hi)] + C::new(h[(hi, hi - 1)].norm() * T::lit(0.75), T::zero())
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = T::lit(0.5);
            let m = (a - d) * half;
            let disc = (m * m + b * c).sqrt();
            let mu1 = d - (b * c) / (m + disc);
            let mu2 = d - (b * c) / (m - disc);
            let pick = if (m + disc).norm() >= (m - disc).norm() {
                mu1
            } else {
                mu2
            };
            if is_finite_c(pick) {
                pick
            } else {
                d
            }
        };
        qr_step(&mut h, l, hi, shift);
    }
    Ok(eig)
}

fn qr_step<T: Real>(h: &mut CMatrix<T>, lo: usize, hi: usize, shift: C<T>) {
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    let mut rots: Vec<(C<T>, C<T>)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[(k, k)];
        let y = h[(k + 1, k)];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == T::zero() {
            (C::one(), C::zero())
        } else {
            (x / r, y / r)
        };
        for j in k..=hi {
            let a = h[(k, j)];
            let b = h[(k + 1, j)];
            h[(k, j)] = c.conj() * a + s.conj() * b;
            h[(k + 1, j)] = -s * a + c * b;
        }
        rots.push((c, s));
    }
    for (idx, k) in (lo..hi).enumerate() {
        let (c, s) = rots[idx];
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let a = h[(i, k)];
            let b = h[(i, k + 1)];
            h[(i, k)] = a * c + b * s;
            h[(i, k + 1)] = -a * s.conj() + b * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}
