//! Reproducing kernels `k_beta^{(m)}`, their pairings with certified
//! truncation error, and truncated Taylor expansions of kernel combinations.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::poly::{derivative_at, eval_coeffs};
use crate::scalar::{falling, is_finite_c, CompensatedSum, Real, C};
use crate::space::{SpaceSpec, BOUNDARY_EPS};

/// `k_point^{(order)}`, the kernel reproducing `f -> f^{(order)}(point)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelTerm<T: Real> {
    pub point: C<T>,
    pub order: usize,
}

impl<T: Real> KernelTerm<T> {
    pub fn new(point: C<T>, order: usize) -> Self {
        Self { point, order }
    }

    pub fn at(point: C<T>) -> Self {
        Self::new(point, 0)
    }

    /// Errors unless the space has a bounded `order`-th derivative
    /// evaluation at `point`.
    pub fn check_admissible(&self, space: &SpaceSpec<T>) -> Result<()> {
        if space.reproducible_order(self.point)?.admits(self.order) {
            Ok(())
        } else {
            Err(Error::InadmissibleKernel {
                re: self.point.re.as_f64(),
                im: self.point.im.as_f64(),
                order: self.order,
            })
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        self.order == other.order && (self.point - other.point).norm() <= T::lit(1e-14)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ComboTerm<T: Real> {
    pub point: C<T>,
    pub order: usize,
    pub coef: C<T>,
}

impl<T: Real> ComboTerm<T> {
    pub fn kernel(&self) -> KernelTerm<T> {
        KernelTerm::new(self.point, self.order)
    }
}

/// `sum c_j k_{beta_j}^{(l_j)}`. The space is passed alongside at use sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelCombo<T: Real> {
    pub terms: Vec<ComboTerm<T>>,
}

impl<T: Real> KernelCombo<T> {
    pub fn new(terms: impl IntoIterator<Item = (KernelTerm<T>, C<T>)>) -> Result<Self> {
        let combo = Self {
            terms: terms
                .into_iter()
                .map(|(k, coef)| ComboTerm {
                    point: k.point,
                    order: k.order,
                    coef,
                })
                .collect(),
        };
        combo.validated()
    }

    pub fn single(term: KernelTerm<T>) -> Self {
        Self {
            terms: vec![ComboTerm {
                point: term.point,
                order: term.order,
                coef: C::one(),
            }],
        }
    }

    /// Checks distinct terms and at least one nonzero coefficient.
    pub fn validated(self) -> Result<Self> {
        for (i, t) in self.terms.iter().enumerate() {
            if !is_finite_c(t.coef) || !is_finite_c(t.point) {
                return Err(Error::Evaluation("combination has non-finite entries".into()));
            }
            if self.terms[..i].iter().any(|s| s.kernel().same_as(&t.kernel())) {
                return Err(Error::InadmissibleMultiset(format!(
                    "kernel ({}, {}) listed twice",
                    t.point, t.order
                )));
            }
        }
        if self.terms.iter().all(|t| t.coef.is_zero()) {
            return Err(Error::ZeroFunction);
        }
        Ok(self)
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ComboTerm { coef: t.coef * s, ..*t })
                .collect(),
        }
    }

    pub fn coef_l1(&self) -> T {
        self.terms.iter().map(|t| t.coef.norm()).sum()
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    pub fn kernels(&self) -> Vec<KernelTerm<T>> {
        self.terms.iter().map(ComboTerm::kernel).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Ratio-test bound; not available on the boundary.
    Geometric,
    /// Geometric inside the disk, integral p-series bound on the circle.
    #[default]
    PSeries,
    /// Heuristic stopping with an uncertified error estimate.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TruncationPolicy<T: Real> {
    pub target_tolerance: T,
    pub max_terms: usize,
    #[serde(default)]
    pub bound_kind: BoundKind,
}

impl<T: Real> Default for TruncationPolicy<T> {
    fn default() -> Self {
        Self {
            target_tolerance: T::lit(1e-12).max(T::epsilon() * T::lit(1e3)),
            max_terms: 2_000_000,
            bound_kind: BoundKind::PSeries,
        }
    }
}

impl<T: Real> TruncationPolicy<T> {
    pub fn with_tolerance(target_tolerance: T) -> Self {
        Self {
            target_tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_tolerance > T::zero()) {
            return Err(Error::Config("target_tolerance must be positive".into()));
        }
        if self.max_terms < 16 {
            return Err(Error::Config("max_terms must be at least 16".into()));
        }
        Ok(())
    }
}

/// Coefficients of degrees `0..=N` with a bound on the norm of the
/// discarded tail (`+inf` when no bound is available).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "TaylorRepr<T>", into = "TaylorRepr<T>")]
pub struct TaylorSeries<T: Real> {
    pub coeffs: Vec<C<T>>,
    pub truncation_degree: usize,
    pub tail_bound: T,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct TaylorRepr<T: Real> {
    coeffs: Vec<C<T>>,
    #[serde(rename = "N")]
    n: usize,
    tail: Option<T>,
}

impl<T: Real> From<TaylorSeries<T>> for TaylorRepr<T> {
    fn from(t: TaylorSeries<T>) -> Self {
        Self {
            coeffs: t.coeffs,
            n: t.truncation_degree,
            tail: t.tail_bound.is_finite().then_some(t.tail_bound),
        }
    }
}

impl<T: Real> TryFrom<TaylorRepr<T>> for TaylorSeries<T> {
    type Error = String;
    fn try_from(r: TaylorRepr<T>) -> std::result::Result<Self, String> {
        if r.coeffs.len() != r.n + 1 {
            return Err(format!(
                "expected {} coefficients for N = {}, got {}",
                r.n + 1,
                r.n,
                r.coeffs.len()
            ));
        }
        let tail = r.tail.unwrap_or_else(T::infinity);
        if tail < T::zero() {
            return Err("tail bound must be nonnegative".into());
        }
        Ok(Self {
            coeffs: r.coeffs,
            truncation_degree: r.n,
            tail_bound: tail,
        })
    }
}

impl<T: Real> TaylorSeries<T> {
    /// A polynomial, represented exactly.
    pub fn polynomial(coeffs: Vec<C<T>>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![C::zero()] } else { coeffs };
        Self {
            truncation_degree: coeffs.len() - 1,
            coeffs,
            tail_bound: T::zero(),
        }
    }

    pub fn eval(&self, z: C<T>) -> C<T> {
        eval_coeffs(&self.coeffs, z)
    }

    pub fn derivative(&self, z: C<T>, order: usize) -> C<T> {
        derivative_at(&self.coeffs, z, order)
    }

    /// Bound on `|f(z) - eval(z)|` from the tail bound and `||k_z||`.
    pub fn eval_error(&self, space: &SpaceSpec<T>, z: C<T>) -> Result<T> {
        if self.tail_bound == T::zero() {
            return Ok(T::zero());
        }
        if !self.tail_bound.is_finite() {
            return Ok(T::infinity());
        }
        let (nsq, err) = kernel_pairing(space, KernelTerm::at(z), KernelTerm::at(z), TruncationPolicy::default())?;
        Ok(self.tail_bound * (nsq.re + err).sqrt())
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Squared norm of the truncated part.
    pub fn truncated_norm_sq(&self, space: &SpaceSpec<T>) -> Result<T> {
        Ok(quadratic_form(space, &self.coeffs, &self.coeffs, 0)?
            .0
            .re
            .max(T::zero()))
    }
}

fn require_diagonal<T: Real>(space: &SpaceSpec<T>) -> Result<()> {
    if space.is_diagonal() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "closed-form kernel series need a diagonal monomial Gram; use the finite-dimensional oracle".into(),
        ))
    }
}

/// Taylor coefficient of `z^n` in `k_t`.
pub fn kernel_coeff<T: Real>(space: &SpaceSpec<T>, t: KernelTerm<T>, n: usize) -> C<T> {
    if n < t.order {
        return C::zero();
    }
    let w = space.weight(n).expect("diagonal space");
    t.point.conj().powu((n - t.order) as u32) * (falling::<T>(n, t.order) / w)
}

/// `n`-th term of the series for `<k_a, k_b>`.
pub fn pairing_term<T: Real>(space: &SpaceSpec<T>, a: KernelTerm<T>, b: KernelTerm<T>, n: usize) -> C<T> {
    if n < a.order || n < b.order {
        return C::zero();
    }
    let w = space.weight(n).expect("diagonal space");
    let mag = falling::<T>(n, a.order) * falling::<T>(n, b.order) / w;
    a.point.conj().powu((n - a.order) as u32) * b.point.powu((n - b.order) as u32) * mag
}

/// Degree at which a pairing with a zero point is supported, if any.
fn finite_support<T: Real>(a: KernelTerm<T>, b: KernelTerm<T>) -> Option<Option<usize>> {
    let a0 = a.point.is_zero();
    let b0 = b.point.is_zero();
    match (a0, b0) {
        (false, false) => None,
        (true, true) => Some((a.order == b.order).then_some(a.order)),
        (true, false) => Some((a.order >= b.order).then_some(a.order)),
        (false, true) => Some((b.order >= a.order).then_some(b.order)),
    }
}

fn on_boundary<T: Real>(a: KernelTerm<T>, b: KernelTerm<T>) -> bool {
    a.point.norm() * b.point.norm() >= T::one() - T::lit(BOUNDARY_EPS)
}

/// Certified bound on `sum_{n > big_n} |T_n|` from the ratio test, summing
/// at most `max_extra` explicit terms before the ratio bound drops below 1.
fn geometric_tail<T: Real>(
    space: &SpaceSpec<T>,
    a: KernelTerm<T>,
    b: KernelTerm<T>,
    big_n: usize,
    max_extra: usize,
) -> Option<T> {
    let rho = a.point.norm() * b.point.norm();
    if rho >= T::one() {
        return None;
    }
    let n0 = a.order.max(b.order);
    let mut acc = T::zero();
    let mut n = big_n + 1;
    loop {
        if n >= n0 {
            let fa = T::of(n + 1) / T::of(n + 1 - a.order);
            let fb = T::of(n + 1) / T::of(n + 1 - b.order);
            let q = fa * fb * rho * space.weight_ratio_sup(n)?;
            if q < T::one() {
                // inflate for rounding in the terms themselves
                return Some((acc + pairing_term(space, a, b, n).norm() / (T::one() - q)) * (T::one() + T::lit(1e-12)));
            }
            acc += pairing_term(space, a, b, n).norm();
        }
        n += 1;
        if n > big_n + 1 + max_extra {
            return None;
        }
    }
}

/// Bound on `sum_{n > big_n} (n+1)^{-s} / c` for a boundary pairing.
fn pseries_params<T: Real>(space: &SpaceSpec<T>, a: KernelTerm<T>, b: KernelTerm<T>, from: usize) -> Result<(T, T)> {
    let (c, alpha) = space
        .power_tail_from(from)
        .ok_or_else(|| Error::Unsupported("no power-law weight tail".into()))?;
    let s = alpha - T::of(a.order + b.order);
    if s <= T::one() {
        return Err(Error::DivergentSeries(format!(
            "boundary pairing of orders {} and {} needs weight exponent above {}",
            a.order,
            b.order,
            a.order + b.order + 1
        )));
    }
    Ok((c, s))
}

fn pseries_tail<T: Real>(c: T, s: T, big_n: usize) -> T {
    T::of(big_n + 1).powf(T::one() - s) / ((s - T::one()) * c)
}

/// Bound on `sum_{n > big_n} |T_n|` for the pairing series under the given
/// bound kind; `None` when no bound is available.
pub fn pairing_tail<T: Real>(
    space: &SpaceSpec<T>,
    a: KernelTerm<T>,
    b: KernelTerm<T>,
    big_n: usize,
    kind: BoundKind,
) -> Result<Option<T>> {
    require_diagonal(space)?;
    if let Some(support) = finite_support(a, b) {
        return Ok(Some(match support {
            Some(n) if n > big_n => pairing_term(space, a, b, n).norm(),
            _ => T::zero(),
        }));
    }
    let rho = a.point.norm() * b.point.norm();
    if rho > T::one() + T::lit(BOUNDARY_EPS) {
        return Err(Error::DivergentSeries("|a b| > 1".into()));
    }
    match kind {
        BoundKind::None => Ok(None),
        BoundKind::Geometric => Ok(geometric_tail(space, a, b, big_n, 100_000)),
        BoundKind::PSeries => {
            if on_boundary(a, b) {
                let (c, s) = pseries_params(space, a, b, big_n + 1)?;
                Ok(Some(pseries_tail(c, s, big_n)))
            } else {
                Ok(geometric_tail(space, a, b, big_n, 100_000))
            }
        }
    }
}

struct SeriesAcc<'a, T: Real> {
    space: &'a SpaceSpec<T>,
    a: KernelTerm<T>,
    b: KernelTerm<T>,
    sum: CompensatedSum<T>,
    weighted_abs: T,
}

impl<'a, T: Real> SeriesAcc<'a, T> {
    fn new(space: &'a SpaceSpec<T>, a: KernelTerm<T>, b: KernelTerm<T>) -> Self {
        Self {
            space,
            a,
            b,
            sum: CompensatedSum::new(),
            weighted_abs: T::zero(),
        }
    }

    fn add(&mut self, n: usize) -> T {
        let t = pairing_term(self.space, self.a, self.b, n);
        self.sum.add(t);
        // powers and falling factorials carry O(log n) relative error
        let bits = (usize::BITS - n.leading_zeros()) as usize;
        self.weighted_abs += t.norm() * (T::of(bits) + T::lit(8.0));
        t.norm()
    }

    fn rounding(&self) -> T {
        summation_error(self.weighted_abs) + self.sum.value().norm() * T::epsilon() * T::lit(2.0)
    }
}

fn summation_error<T: Real>(weighted_abs: T) -> T {
    weighted_abs * T::epsilon()
}

/// `<k_a, k_b>` with an error bound.
pub fn kernel_pairing<T: Real>(
    space: &SpaceSpec<T>,
    a: KernelTerm<T>,
    b: KernelTerm<T>,
    policy: TruncationPolicy<T>,
) -> Result<(C<T>, T)> {
    require_diagonal(space)?;
    policy.validate()?;
    a.check_admissible(space)?;
    b.check_admissible(space)?;
    let tol = policy.target_tolerance;

    if let Some(support) = finite_support(a, b) {
        let v = support.map_or(C::zero(), |n| pairing_term(space, a, b, n));
        return Ok((v, summation_error(v.norm() * T::lit(8.0))));
    }

    let n0 = a.order.max(b.order);
    let mut acc = SeriesAcc::new(space, a, b);
    let boundary = on_boundary(a, b);
    match policy.bound_kind {
        BoundKind::PSeries if boundary => {
            let (c, s) = pseries_params(space, a, b, n0 + 1)?;
            // smallest N with (N+1)^{1-s} / ((s-1) c) <= tol / 2
            let need = ((s - T::one()) * c * tol / T::lit(2.0)).powf(-T::one() / (s - T::one()));
            let need = need.ceil().to_f64().unwrap_or(f64::INFINITY);
            if !need.is_finite() || need > policy.max_terms as f64 {
                return Err(Error::ToleranceUnreachable {
                    target: tol.as_f64(),
                    max_terms: policy.max_terms,
                });
            }
            let big_n = (need as usize).max(n0 + 1);
            let (c, s) = pseries_params(space, a, b, big_n + 1)?;
            for n in n0..=big_n {
                acc.add(n);
            }
            let tail = pseries_tail(c, s, big_n);
            finish(acc.sum.value(), tail, tail + acc.rounding(), policy)
        }
        BoundKind::Geometric if boundary => Err(Error::ToleranceUnreachable {
            target: tol.as_f64(),
            max_terms: policy.max_terms,
        }),
        BoundKind::None => {
            let mut quiet = 0usize;
            let mut recent = T::zero();
            for n in n0..n0 + policy.max_terms {
                let m = acc.add(n);
                if m <= tol * T::lit(1e-3) {
                    quiet += 1;
                    recent += m;
                } else {
                    quiet = 0;
                    recent = T::zero();
                }
                if quiet >= 16 {
                    let err = recent + acc.rounding();
                    return Ok((acc.sum.value(), err));
                }
            }
            Err(Error::ToleranceUnreachable {
                target: tol.as_f64(),
                max_terms: policy.max_terms,
            })
        }
        _ => {
            // once the target is met, keep going (up to 4x the terms) until
            // the tail drops below the working precision of the sum
            let mut met: Option<(usize, C<T>, T)> = None;
            for n in n0..n0 + policy.max_terms {
                let m = acc.add(n);
                let check = (n - n0) % 16 == 15;
                if check && m <= tol {
                    if let Some(tail) = geometric_tail(space, a, b, n, 0) {
                        let err = tail + acc.rounding();
                        if tail <= tol {
                            let first = met.map_or(n, |(f, _, _)| f);
                            met = Some((first, acc.sum.value(), err));
                            if tail <= T::epsilon() * acc.sum.value().norm() || n - n0 >= 4 * (first - n0 + 1) {
                                return Ok((acc.sum.value(), err));
                            }
                        }
                    }
                }
            }
            if let Some((_, v, err)) = met {
                return Ok((v, err));
            }
            Err(Error::ToleranceUnreachable {
                target: tol.as_f64(),
                max_terms: policy.max_terms,
            })
        }
    }
}

/// The target applies to the truncation tail; the reported error also
/// carries the floating-point rounding of the partial sum.
fn finish<T: Real>(v: C<T>, tail: T, err: T, policy: TruncationPolicy<T>) -> Result<(C<T>, T)> {
    if tail <= policy.target_tolerance {
        Ok((v, err))
    } else {
        Err(Error::ToleranceUnreachable {
            target: policy.target_tolerance.as_f64(),
            max_terms: policy.max_terms,
        })
    }
}

/// `||k||` with an error bound on the norm.
pub fn kernel_norm<T: Real>(space: &SpaceSpec<T>, t: KernelTerm<T>, policy: TruncationPolicy<T>) -> Result<(T, T)> {
    let (v, err) = kernel_pairing(space, t, t, policy)?;
    let n = v.re.max(T::zero()).sqrt();
    let hi = (v.re + err).max(T::zero()).sqrt();
    Ok((n, hi - n))
}

/// Gram matrix `G[i][j] = <v_j, v_i>` and the largest entry error.
pub fn gram_matrix<T: Real>(
    space: &SpaceSpec<T>,
    terms: &[KernelTerm<T>],
    policy: TruncationPolicy<T>,
) -> Result<(CMatrix<T>, T)> {
    let n = terms.len();
    let mut g = CMatrix::zeros(n, n);
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let (v, e) = kernel_pairing(space, terms[j], terms[i], policy)?;
            worst = worst.max(e);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)] = C::new(g[(i, i)].re, T::zero());
    }
    Ok((g, worst))
}

/// Taylor polynomial of `k_t` through degree `n`.
pub fn kernel_taylor<T: Real>(
    space: &SpaceSpec<T>,
    t: KernelTerm<T>,
    n: usize,
    kind: BoundKind,
) -> Result<TaylorSeries<T>> {
    require_diagonal(space)?;
    t.check_admissible(space)?;
    let coeffs = (0..=n).map(|k| kernel_coeff(space, t, k)).collect();
    // ||tail||^2 = sum_{k > n} |coef_k|^2 w_k = tail of <k_t, k_t>
    let tail = match pairing_tail(space, t, t, n, kind)? {
        Some(sq) => sq.sqrt(),
        None => T::infinity(),
    };
    Ok(TaylorSeries {
        coeffs,
        truncation_degree: n,
        tail_bound: tail,
    })
}

/// Linear extension of [`kernel_taylor`].
pub fn combo_taylor<T: Real>(
    space: &SpaceSpec<T>,
    b: &KernelCombo<T>,
    n: usize,
    kind: BoundKind,
) -> Result<TaylorSeries<T>> {
    let mut coeffs = vec![C::zero(); n + 1];
    let mut tail = T::zero();
    for term in &b.terms {
        let t = kernel_taylor(space, term.kernel(), n, kind)?;
        for (acc, c) in coeffs.iter_mut().zip(&t.coeffs) {
            *acc += term.coef * c;
        }
        if !term.coef.is_zero() {
            tail += term.coef.norm() * t.tail_bound;
        }
    }
    Ok(TaylorSeries {
        coeffs,
        truncation_degree: n,
        tail_bound: tail,
    })
}

/// Smallest power-of-two truncation whose tail bound is at most `tol`.
pub fn combo_taylor_to_tolerance<T: Real>(
    space: &SpaceSpec<T>,
    b: &KernelCombo<T>,
    tol: T,
    policy: TruncationPolicy<T>,
) -> Result<TaylorSeries<T>> {
    let mut n = 64usize.max(b.max_order() + 1);
    loop {
        let t = combo_taylor(space, b, n, policy.bound_kind)?;
        if t.tail_bound <= tol {
            return Ok(t);
        }
        if n >= policy.max_terms {
            return Err(Error::ToleranceUnreachable {
                target: tol.as_f64(),
                max_terms: policy.max_terms,
            });
        }
        n = (n * 2).min(policy.max_terms);
    }
}

/// `B^{(l)}(beta) = <B, k_beta^{(l)}>`.
pub fn combo_derivative_at<T: Real>(
    space: &SpaceSpec<T>,
    b: &KernelCombo<T>,
    beta: C<T>,
    l: usize,
    policy: TruncationPolicy<T>,
) -> Result<(C<T>, T)> {
    let probe = KernelTerm::new(beta, l);
    let mut sum = CompensatedSum::new();
    let mut err = T::zero();
    for term in &b.terms {
        if term.coef.is_zero() {
            continue;
        }
        let (v, e) = kernel_pairing(space, term.kernel(), probe, policy)?;
        sum.add(term.coef * v);
        err += term.coef.norm() * e;
    }
    Ok((sum.value(), err))
}

/// `||B||^2` from the kernel Gram quadratic form.
pub fn combo_norm_sq<T: Real>(space: &SpaceSpec<T>, b: &KernelCombo<T>, policy: TruncationPolicy<T>) -> Result<(T, T)> {
    let ks = b.kernels();
    let (g, e) = gram_matrix(space, &ks, policy)?;
    let mut sum = CompensatedSum::new();
    for (i, ti) in b.terms.iter().enumerate() {
        for (j, tj) in b.terms.iter().enumerate() {
            // <sum c_j k_j, sum c_i k_i> = sum c_j conj(c_i) <k_j, k_i>
            sum.add(tj.coef * ti.coef.conj() * g[(i, j)]);
        }
    }
    let l1 = b.coef_l1();
    Ok((sum.value().re, e * l1 * l1))
}

/// `sum_{m,n} a_m conj(b_n) <z^{m+k}, z^n>` and the absolute-value total.
fn quadratic_form<T: Real>(space: &SpaceSpec<T>, a: &[C<T>], b: &[C<T>], k: usize) -> Result<(C<T>, T)> {
    let mut sum = CompensatedSum::new();
    if space.is_diagonal() {
        for (m, am) in a.iter().enumerate() {
            if let Some(bn) = b.get(m + k) {
                let w = space.weight(m + k).unwrap();
                sum.add(*am * bn.conj() * w);
            }
        }
    } else {
        for (m, am) in a.iter().enumerate() {
            if am.is_zero() {
                continue;
            }
            for (n, bn) in b.iter().enumerate() {
                if bn.is_zero() {
                    continue;
                }
                sum.add(*am * bn.conj() * space.monomial_inner(m + k, n)?);
            }
        }
    }
    Ok((sum.value(), sum.abs_total()))
}

/// `<z^k B, B>` with an error bound from the tail of the Taylor data.
pub fn shift_inner_product<T: Real>(space: &SpaceSpec<T>, b: &TaylorSeries<T>, k: usize) -> Result<(C<T>, T)> {
    let tau = b.tail_bound;
    if !tau.is_finite() {
        return Err(Error::UnboundedTail);
    }
    let (value, abs_total) = quadratic_form(space, &b.coeffs, &b.coeffs, k)?;
    let rounding = abs_total * T::epsilon() * T::lit(4.0);
    if tau == T::zero() {
        return Ok((value, rounding));
    }
    let sigma = space
        .shift_gain(k, b.truncation_degree + 1)
        .ok_or(Error::UnboundedTail)?;
    let norm_bn = quadratic_form(space, &b.coeffs, &b.coeffs, 0)?
        .0
        .re
        .max(T::zero())
        .sqrt();
    let shifted = shifted_norm(space, &b.coeffs, k)?;
    let err = shifted * tau + sigma * tau * norm_bn + sigma * tau * tau + rounding;
    Ok((value, err))
}

/// `||z^k p||` for a polynomial given by coefficients.
fn shifted_norm<T: Real>(space: &SpaceSpec<T>, c: &[C<T>], k: usize) -> Result<T> {
    let mut shifted = vec![C::zero(); k];
    shifted.extend_from_slice(c);
    Ok(quadratic_form(space, &shifted, &shifted, 0)?.0.re.max(T::zero()).sqrt())
}

/// `<p, q>` for polynomials given by coefficients.
pub fn poly_inner<T: Real>(space: &SpaceSpec<T>, p: &[C<T>], q: &[C<T>]) -> Result<C<T>> {
    Ok(quadratic_form(space, p, q, 0)?.0)
}
