//! Constructions of Blaschke-product analogues: Shapiro-Shields functions
//! by Gram determinant or Hermitian solve, a finite-dimensional projection
//! oracle, the classical Blaschke product and the Bergman residue form.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    combo_taylor, gram_matrix, kernel_coeff, kernel_pairing, BoundKind, KernelCombo, KernelTerm, TaylorSeries,
    TruncationPolicy,
};
use crate::linalg::{determinant_extended, solve_hpd_scaled, CMatrix, Lu};
use crate::poly::{derivative_at, eval_coeffs, poly_mul, polynomial_roots, trim, FactoredPoly, ORIGIN_EPS};
use crate::scalar::{factorial, Real, C};
use crate::space::{ReproducibleMultiset, SpaceSpec, COINCIDENCE_EPS};

/// Smallest scaled Cholesky pivot ratio accepted for kernel Grams.
pub const GRAM_PIVOT_FLOOR: f64 = 1e-14;
/// Smallest scaled Cholesky pivot ratio accepted for oracle spanning sets.
pub const ORACLE_PIVOT_CAP: f64 = 1e-12;
/// Largest number of kernels for which the automatic route uses cofactors.
pub const AUTO_DETERMINANT_MAX: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Determinant,
    Solve,
    Oracle,
    ClosedForm,
    Residue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    #[default]
    Auto,
    Determinant,
    Solve,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShapiroOptions<T: Real> {
    #[serde(default)]
    pub route: RouteChoice,
    #[serde(default)]
    pub policy: TruncationPolicy<T>,
    /// Fixed Taylor degree; chosen adaptively when absent.
    #[serde(default)]
    pub taylor_degree: Option<usize>,
}

impl<T: Real> Default for ShapiroOptions<T> {
    fn default() -> Self {
        Self {
            route: RouteChoice::Auto,
            policy: TruncationPolicy::default(),
            taylor_degree: None,
        }
    }
}

impl<T: Real> ShapiroOptions<T> {
    pub fn with_route(route: RouteChoice) -> Self {
        Self {
            route,
            ..Self::default()
        }
    }
}

/// `numerator / denominator`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RationalRep<T: Real> {
    pub numerator: FactoredPoly<T>,
    pub denominator: FactoredPoly<T>,
}

impl<T: Real> RationalRep<T> {
    pub fn eval(&self, z: C<T>) -> C<T> {
        self.numerator.eval(z) / self.denominator.eval(z)
    }

    /// Smallest pole modulus (`+inf` for a polynomial).
    pub fn pole_radius(&self) -> T {
        self.denominator
            .roots
            .iter()
            .fold(T::infinity(), |m, r| m.min(r.point.norm()))
    }

    /// Taylor expansion at 0 through degree `n`. The tail bound is for the
    /// `H^2` norm, which dominates the norm of every `D_alpha` with
    /// `alpha <= 0`.
    pub fn taylor(&self, n: usize) -> TaylorSeries<T> {
        let num = self.numerator.coefficients();
        let den = self.denominator.coefficients();
        let coeffs = series_divide(&num, &den, n);
        let big_r = self.pole_radius();
        let tail = if !big_r.is_finite() {
            // exact: the series terminates
            let all = series_divide(&num, &den, num.len());
            all.iter().skip(n + 1).map(|c| c.norm_sqr()).sum::<T>().sqrt()
        } else if big_r > T::one() {
            let r = big_r.sqrt();
            let mut m = self.numerator.leading.norm() / self.denominator.leading.norm();
            for root in &self.numerator.roots {
                m *= (r + root.point.norm()).powi(root.mult as i32);
            }
            for root in &self.denominator.roots {
                m /= (root.point.norm() - r).powi(root.mult as i32);
            }
            // |a_k| <= M(r) r^{-k}
            let q = r.powi(-2);
            m * q.powf(T::of(n + 1) / T::lit(2.0)) / (T::one() - q).sqrt()
        } else {
            T::infinity()
        };
        TaylorSeries {
            coeffs,
            truncation_degree: n,
            tail_bound: tail,
        }
    }

    /// Residue at a pole of the denominator.
    pub fn residue(&self, pole: C<T>) -> Result<C<T>> {
        let idx = self
            .denominator
            .roots
            .iter()
            .position(|r| (r.point - pole).norm() <= T::lit(1e-12) * (T::one() + pole.norm()))
            .ok_or_else(|| Error::Evaluation(format!("{pole} is not a pole")))?;
        let k = self.denominator.roots[idx].mult;
        let p = self.denominator.roots[idx].point;
        let rest = FactoredPoly::new(
            self.denominator.leading,
            self.denominator
                .roots
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .map(|(_, r)| (r.point, r.mult)),
        )?;
        // local Taylor data at p of N and D / (z - p)^k
        let local = |c: &[C<T>]| -> Vec<C<T>> { (0..k).map(|j| derivative_at(c, p, j) / factorial::<T>(j)).collect() };
        let g = series_divide(
            &local(&self.numerator.coefficients()),
            &local(&rest.coefficients()),
            k - 1,
        );
        Ok(g[k - 1])
    }
}

/// First `n + 1` coefficients of `num / den` (requires `den[0] != 0`).
fn series_divide<T: Real>(num: &[C<T>], den: &[C<T>], n: usize) -> Vec<C<T>> {
    let mut out = vec![C::zero(); n + 1];
    for k in 0..=n {
        let mut v = num.get(k).copied().unwrap_or_else(C::zero);
        for j in 1..=k.min(den.len().saturating_sub(1)) {
            v -= den[j] * out[k - j];
        }
        out[k] = v / den[0];
    }
    out
}

/// Output of every construction route, canonically normalized so that the
/// Taylor coefficient at degree `m_0` is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConstructionResult<T: Real> {
    pub route: Route,
    /// Scalar applied to the route's raw output.
    pub normalization: C<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combo: Option<KernelCombo<T>>,
    pub taylor: TaylorSeries<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational: Option<RationalRep<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiset: Option<ReproducibleMultiset<T>>,
    /// Largest certified error among the kernel pairings used.
    pub gram_entry_error: T,
    /// Smallest scaled Cholesky pivot over the first one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_ratio: Option<T>,
    /// Degree at which the normalization was taken.
    pub origin_order: usize,
}

impl<T: Real> ConstructionResult<T> {
    pub fn eval(&self, z: C<T>) -> C<T> {
        match &self.rational {
            Some(r) => r.eval(z) * self.normalization,
            None => self.taylor.eval(z),
        }
    }
}

fn require_diagonal<T: Real>(space: &SpaceSpec<T>) -> Result<()> {
    if space.is_diagonal() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "kernel-combination routes need a diagonal monomial Gram; use project_kernel_fd".into(),
        ))
    }
}

fn auto_taylor<T: Real>(
    space: &SpaceSpec<T>,
    b: &KernelCombo<T>,
    fixed: Option<usize>,
    kind: BoundKind,
) -> Result<TaylorSeries<T>> {
    if let Some(n) = fixed {
        return combo_taylor(space, b, n, kind);
    }
    let target = T::lit(1e-12).max(T::epsilon() * T::lit(100.0));
    let mut n = 64usize.max(b.max_order() + 1);
    loop {
        let t = combo_taylor(space, b, n, kind)?;
        if t.tail_bound <= target || n >= 4096 {
            return Ok(t);
        }
        n *= 2;
    }
}

/// Coefficient of `z^degree` in a combination.
fn combo_coeff<T: Real>(space: &SpaceSpec<T>, b: &KernelCombo<T>, degree: usize) -> C<T> {
    b.terms.iter().fold(C::zero(), |acc, t| {
        acc + t.coef * kernel_coeff(space, t.kernel(), degree)
    })
}

/// Raw bordered Gram determinant `D(u; v_1, ..., v_n)` expanded along the
/// vector row: `det(G) u - sum_t det(G with column t replaced by b) v_t`,
/// where `G[s][t] = <v_t, v_s>` and `b_s = <u, v_s>`.
///
/// Returns the combination together with the worst pairing error.
pub fn determinant_combo<T: Real>(
    space: &SpaceSpec<T>,
    u: KernelTerm<T>,
    vs: &[KernelTerm<T>],
    policy: TruncationPolicy<T>,
) -> Result<(KernelCombo<T>, T)> {
    let (scaled, factor, err) = scaled_determinant_combo(space, u, vs, policy)?;
    Ok((scaled.scaled(C::new(T::one() / factor, T::zero())), err))
}

/// The determinant combination multiplied by `s_u prod s_i^2` (Jacobi
/// scales), returned with that factor.
fn scaled_determinant_combo<T: Real>(
    space: &SpaceSpec<T>,
    u: KernelTerm<T>,
    vs: &[KernelTerm<T>],
    policy: TruncationPolicy<T>,
) -> Result<(KernelCombo<T>, T, T)> {
    let n = vs.len();
    let (g, mut err) = gram_matrix(space, vs, policy)?;
    let (uu, e) = kernel_pairing(space, u, u, policy)?;
    err = err.max(e);
    let su = T::one() / uu.re.sqrt();
    let s: Vec<T> = (0..n).map(|i| T::one() / g[(i, i)].re.sqrt()).collect();
    let mut b = Vec::with_capacity(n);
    for (i, v) in vs.iter().enumerate() {
        let (x, e) = kernel_pairing(space, u, *v, policy)?;
        err = err.max(e);
        b.push(x * s[i] * su);
    }
    let gs = CMatrix::from_fn(n, n, |i, j| g[(i, j)] * s[i] * s[j]);
    let mut terms = vec![(u, determinant_extended(&gs) * su)];
    for t in 0..n {
        let mut m = gs.clone();
        for (i, bi) in b.iter().enumerate() {
            m[(i, t)] = *bi;
        }
        terms.push((vs[t], -determinant_extended(&m) * s[t]));
    }
    let factor = s.iter().fold(su, |acc, si| acc * *si * *si);
    Ok((KernelCombo::new(terms)?, factor, err))
}

/// Shapiro-Shields function `S_Z` of a reproducible multiset.
pub fn shapiro_shields<T: Real>(
    space: &SpaceSpec<T>,
    z: &ReproducibleMultiset<T>,
    opts: ShapiroOptions<T>,
) -> Result<ConstructionResult<T>> {
    require_diagonal(space)?;
    opts.policy.validate()?;
    z.validate_for(space)?;
    let m0 = z.origin_multiplicity;
    let u = KernelTerm::new(C::zero(), m0);
    let vs = z.constraint_kernels();
    for v in &vs {
        v.check_admissible(space)?;
    }
    let policy = opts.policy;

    let (g, mut err) = gram_matrix(space, &vs, policy)?;
    let pivot_ratio = if vs.is_empty() {
        T::one()
    } else {
        let (_, ratio) = solve_hpd_scaled(&g, &vec![C::zero(); vs.len()])?;
        ratio
    };
    if pivot_ratio < T::lit(GRAM_PIVOT_FLOOR) {
        return Err(Error::SingularGram {
            pivot_ratio: pivot_ratio.as_f64(),
        });
    }

    let route = match opts.route {
        RouteChoice::Determinant => Route::Determinant,
        RouteChoice::Solve => Route::Solve,
        RouteChoice::Auto if vs.len() <= AUTO_DETERMINANT_MAX => Route::Determinant,
        RouteChoice::Auto => Route::Solve,
    };

    // raw combination and the factor relating it to the route's raw output
    let (raw, raw_factor) = match route {
        Route::Determinant => {
            let (scaled, factor, e) = scaled_determinant_combo(space, u, &vs, policy)?;
            err = err.max(e);
            (scaled, factor)
        }
        _ => {
            let mut b = Vec::with_capacity(vs.len());
            for v in &vs {
                let (x, e) = kernel_pairing(space, u, *v, policy)?;
                err = err.max(e);
                b.push(x);
            }
            let (c, _) = if vs.is_empty() {
                (Vec::new(), T::one())
            } else {
                solve_hpd_scaled(&g, &b)?
            };
            let terms = std::iter::once((u, C::one())).chain(vs.iter().zip(c).map(|(v, ci)| (*v, -ci)));
            (KernelCombo::new(terms)?, T::one())
        }
    };

    let lead = combo_coeff(space, &raw, m0);
    if lead.is_zero() || !(lead.norm() > T::zero()) {
        return Err(Error::ZeroFunction);
    }
    let mut scale = lead.inv();
    let mut taylor = auto_taylor(space, &raw.scaled(scale), opts.taylor_degree, policy.bound_kind)?;
    let residual = taylor.coeffs[m0];
    taylor.coeffs.iter_mut().for_each(|c| *c /= residual);
    taylor.tail_bound /= residual.norm();
    scale /= residual;
    let combo = raw.scaled(scale);
    Ok(ConstructionResult {
        route,
        normalization: scale * raw_factor,
        combo: Some(combo),
        taylor,
        rational: None,
        multiset: Some(z.clone()),
        gram_entry_error: err,
        pivot_ratio: Some(pivot_ratio),
        origin_order: m0,
    })
}

/// `W[a][b] = <z^a, z^b>` for `a, b <= degree`; only the diagonal is filled
/// for diagonal spaces.
fn monomial_gram<T: Real>(space: &SpaceSpec<T>, degree: usize) -> Result<CMatrix<T>> {
    let n = degree + 1;
    let mut w = CMatrix::zeros(n, n);
    if space.is_diagonal() {
        for a in 0..n {
            w[(a, a)] = space.monomial_inner(a, a)?;
        }
    } else {
        for a in 0..n {
            for b in 0..n {
                w[(a, b)] = space.monomial_inner(a, b)?;
            }
        }
    }
    Ok(w)
}

/// Coefficients of `z^shift * p`, padded to length `len`.
fn shifted<T: Real>(p: &[C<T>], shift: usize, len: usize) -> Vec<C<T>> {
    let mut v = vec![C::zero(); len];
    for (k, c) in p.iter().enumerate() {
        if shift + k < len {
            v[shift + k] = *c;
        }
    }
    v
}

/// `u[b] = sum_a f[a] W[a][b]`, so that `<f, g> = sum_b u[b] conj(g[b])`.
fn row_against<T: Real>(space: &SpaceSpec<T>, w: &CMatrix<T>, f: &[C<T>]) -> Vec<C<T>> {
    let n = w.rows();
    if space.is_diagonal() {
        return (0..n).map(|b| f.get(b).map_or(C::zero(), |c| *c * w[(b, b)])).collect();
    }
    let support: Vec<usize> = (0..f.len().min(n)).filter(|&a| !f[a].is_zero()).collect();
    (0..n)
        .map(|b| support.iter().fold(C::zero(), |acc, &a| acc + f[a] * w[(a, b)]))
        .collect()
}

fn span_gram<T: Real>(space: &SpaceSpec<T>, w: &CMatrix<T>, basis: &[Vec<C<T>>]) -> CMatrix<T> {
    let k = basis.len();
    let rows: Vec<Vec<C<T>>> = basis.par_iter().map(|phi| row_against(space, w, phi)).collect();
    let supports: Vec<(usize, usize)> = basis
        .iter()
        .map(|phi| {
            let lo = phi.iter().position(|c| !c.is_zero()).unwrap_or(0);
            let hi = phi.iter().rposition(|c| !c.is_zero()).map_or(0, |h| h + 1);
            (lo, hi)
        })
        .collect();
    let diagonal = space.is_diagonal();
    // G[i][j] = <phi_j, phi_i>
    let g_rows: Vec<Vec<C<T>>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = supports[i];
            (0..k)
                .map(|j| {
                    if diagonal && (supports[j].1 <= lo || supports[j].0 >= hi) {
                        return C::zero();
                    }
                    (lo..hi).fold(C::zero(), |acc, b| acc + rows[j][b] * basis[i][b].conj())
                })
                .collect()
        })
        .collect();
    CMatrix::from_fn(k, k, |i, j| g_rows[i][j])
}

type Span<T> = (Vec<Vec<C<T>>>, CMatrix<T>);

/// The spanning set `{z^j p : j <= M - deg p}` as coefficient vectors of
/// length `M + 1`, with its Gram matrix `G[i][j] = <phi_j, phi_i>`.
pub(crate) fn truncated_span<T: Real>(space: &SpaceSpec<T>, p: &FactoredPoly<T>, big_m: usize) -> Result<Span<T>> {
    let pc = p.coefficients();
    let deg = pc.len() - 1;
    if big_m < deg {
        return Err(Error::Config(format!("degree M = {big_m} is below deg p = {deg}")));
    }
    let w = monomial_gram(space, big_m)?;
    let basis: Vec<Vec<C<T>>> = (0..=big_m - deg).map(|j| shifted(&pc, j, big_m + 1)).collect();
    let g = span_gram(space, &w, &basis);
    Ok((basis, g))
}

/// Orthogonal projection, in the space, of the vector whose inner products
/// with the spanning set are `rhs[i] = <target, phi_i>` onto
/// `span{phi_i}`. Returns the coefficients of the projection and the
/// scaled pivot ratio of the spanning Gram.
fn project_onto_span<T: Real>(
    space: &SpaceSpec<T>,
    w: &CMatrix<T>,
    basis: &[Vec<C<T>>],
    rhs: &[C<T>],
) -> Result<(Vec<C<T>>, T)> {
    let g = span_gram(space, w, basis);
    let cap = T::lit(ORACLE_PIVOT_CAP);
    let (y, ratio) = solve_hpd_scaled(&g, rhs).map_err(|e| match e {
        Error::SingularGram { pivot_ratio } => Error::IllConditioned {
            pivot_ratio,
            cap: cap.as_f64(),
        },
        other => other,
    })?;
    if ratio < cap {
        return Err(Error::IllConditioned {
            pivot_ratio: ratio.as_f64(),
            cap: cap.as_f64(),
        });
    }
    let len = basis.first().map_or(0, Vec::len);
    let mut v = vec![C::zero(); len];
    for (phi, yj) in basis.iter().zip(&y) {
        for (acc, c) in v.iter_mut().zip(phi) {
            *acc += *yj * c;
        }
    }
    Ok((v, ratio))
}

/// Unnormalized projection of `k_probe` onto `span{p, z p, ..., z^{M - deg p} p}`,
/// as ascending coefficients through degree `M`, with the pivot ratio.
pub fn project_functional_fd<T: Real>(
    space: &SpaceSpec<T>,
    p: &FactoredPoly<T>,
    probe: KernelTerm<T>,
    big_m: usize,
) -> Result<(Vec<C<T>>, T)> {
    let pc = p.coefficients();
    let deg = pc.len() - 1;
    if big_m < deg + 10 {
        return Err(Error::Config(format!(
            "oracle degree M = {big_m} must be at least deg p + 10 = {}",
            deg + 10
        )));
    }
    let w = monomial_gram(space, big_m)?;
    let basis: Vec<Vec<C<T>>> = (0..=big_m - deg).map(|j| shifted(&pc, j, big_m + 1)).collect();
    // <k_probe, phi_i> = conj(phi_i^{(l)}(gamma))
    let rhs: Vec<C<T>> = basis
        .iter()
        .map(|phi| derivative_at(phi, probe.point, probe.order).conj())
        .collect();
    project_onto_span(space, &w, &basis, &rhs)
}

fn normalize_at<T: Real>(coeffs: Vec<C<T>>, degree: usize) -> Result<(Vec<C<T>>, C<T>)> {
    let big = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    let lead = coeffs.get(degree).copied().unwrap_or_else(C::zero);
    if big == T::zero() || lead.norm() <= big * T::epsilon() * T::lit(16.0) {
        return Err(Error::ZeroFunction);
    }
    Ok((coeffs.into_iter().map(|c| c / lead).collect(), lead.inv()))
}

/// Finite-dimensional oracle: projection of `k_0^{(d)}` onto
/// `span{z^j p : j <= M - deg p}`, normalized at degree `d`.
pub fn project_kernel_fd<T: Real>(
    space: &SpaceSpec<T>,
    p: &FactoredPoly<T>,
    d: usize,
    big_m: usize,
) -> Result<ConstructionResult<T>> {
    let (v, ratio) = project_functional_fd(space, p, KernelTerm::new(C::zero(), d), big_m)?;
    let (coeffs, scale) = normalize_at(v, d)?;
    Ok(ConstructionResult {
        route: Route::Oracle,
        normalization: scale,
        combo: None,
        taylor: TaylorSeries::polynomial(coeffs),
        rational: None,
        multiset: None,
        gram_entry_error: T::zero(),
        pivot_ratio: Some(ratio),
        origin_order: d,
    })
}

/// `J = f - P f` with `P` the projection onto `span{z^j f : 1 <= j <= M - deg f}`,
/// normalized at degree `ord_0(f)`.
pub fn inner_projection_of<T: Real>(
    space: &SpaceSpec<T>,
    f: &FactoredPoly<T>,
    big_m: usize,
) -> Result<ConstructionResult<T>> {
    let fc = f.coefficients();
    let deg = fc.len() - 1;
    if big_m < deg + 10 {
        return Err(Error::Config(format!(
            "degree M = {big_m} must be at least deg f + 10 = {}",
            deg + 10
        )));
    }
    let w = monomial_gram(space, big_m)?;
    let f_full = shifted(&fc, 0, big_m + 1);
    let basis: Vec<Vec<C<T>>> = (1..=big_m - deg).map(|j| shifted(&fc, j, big_m + 1)).collect();
    let f_row = row_against(space, &w, &f_full);
    let rhs: Vec<C<T>> = basis
        .iter()
        .map(|phi| f_row.iter().zip(phi).fold(C::zero(), |acc, (a, b)| acc + *a * b.conj()))
        .collect();
    let (proj, ratio) = project_onto_span(space, &w, &basis, &rhs)?;
    let j: Vec<C<T>> = f_full.iter().zip(&proj).map(|(a, b)| *a - *b).collect();
    let d = f.origin_multiplicity();
    let (coeffs, scale) = normalize_at(j, d)?;
    Ok(ConstructionResult {
        route: Route::Oracle,
        normalization: scale,
        combo: None,
        taylor: TaylorSeries::polynomial(coeffs),
        rational: None,
        multiset: None,
        gram_entry_error: T::zero(),
        pivot_ratio: Some(ratio),
        origin_order: d,
    })
}

/// `prod ((z - beta) / (1 - conj(beta) z))^m`, normalized at degree `m_0`.
/// The Taylor tail bound is for the `H^2` norm.
pub fn classical_blaschke<T: Real>(zeros: &[(C<T>, usize)], degree: usize) -> Result<ConstructionResult<T>> {
    let mut num_roots = Vec::new();
    let mut den_roots = Vec::new();
    let mut den_lead = C::one();
    let mut m0 = 0usize;
    for &(beta, m) in zeros {
        if m == 0 || !(beta.norm() < T::one()) {
            return Err(Error::InadmissibleMultiset(format!(
                "Blaschke zeros need |beta| < 1 and positive multiplicity, got {beta} x{m}"
            )));
        }
        num_roots.push((beta, m));
        if beta.norm() <= T::lit(ORIGIN_EPS) {
            m0 += m;
        } else {
            // 1 - conj(b) z = -conj(b) (z - 1/conj(b))
            den_lead *= (-beta.conj()).powu(m as u32);
            den_roots.push((beta.conj().inv(), m));
        }
    }
    let raw = RationalRep {
        numerator: FactoredPoly::new(C::one(), num_roots)?,
        denominator: FactoredPoly::new(den_lead, den_roots)?,
    };
    let raw_taylor = raw.taylor(degree.max(m0));
    let lead = raw_taylor.coeffs[m0];
    let scale = lead.inv();
    let taylor = raw.taylor(degree);
    let taylor = TaylorSeries {
        coeffs: taylor.coeffs.into_iter().map(|c| c * scale).collect(),
        tail_bound: taylor.tail_bound * scale.norm(),
        ..taylor
    };
    Ok(ConstructionResult {
        route: Route::ClosedForm,
        normalization: scale,
        combo: None,
        taylor,
        rational: Some(raw),
        multiset: None,
        gram_entry_error: T::zero(),
        pivot_ratio: None,
        origin_order: m0,
    })
}

/// Rational inner function of the Bergman space with simple nonzero zeros
/// `lambda_j`: `q(z) prod (z - lambda_j) / prod (1 - conj(lambda_j) z)^2`,
/// where `q` (degree at most `s`) is fixed by requiring zero residue at
/// every `1 / conj(lambda_j)` and `B(0) = 1`.
pub fn bergman_rational<T: Real>(zeros: &[C<T>], degree: usize) -> Result<ConstructionResult<T>> {
    let s = zeros.len();
    for (i, l) in zeros.iter().enumerate() {
        if l.norm() <= T::lit(ORIGIN_EPS) || !(l.norm() < T::one()) {
            return Err(Error::InadmissibleMultiset(format!(
                "zero {l} must be nonzero and inside the disk"
            )));
        }
        if zeros[..i].iter().any(|k| (*k - *l).norm() < T::lit(COINCIDENCE_EPS)) {
            return Err(Error::InadmissibleMultiset("zeros must be distinct".into()));
        }
    }
    let p_coeffs = FactoredPoly::from_zeros(zeros)?.coefficients();
    let poles: Vec<C<T>> = zeros.iter().map(|l| l.conj().inv()).collect();
    // E_j = conj(l_j)^2 prod_{k != j} (1 - conj(l_k) z)^2
    let e_poly = |j: usize| -> Vec<C<T>> {
        let mut e = vec![zeros[j].conj() * zeros[j].conj()];
        for (k, l) in zeros.iter().enumerate() {
            if k != j {
                let lin = [C::one(), -l.conj()];
                e = poly_mul(&poly_mul(&e, &lin), &lin);
            }
        }
        e
    };
    let n = s + 1;
    let mut a = CMatrix::zeros(n, n);
    let mut rhs = vec![C::zero(); n];
    for j in 0..s {
        let pj = poles[j];
        let e = e_poly(j);
        let (ev, ed) = (eval_coeffs(&e, pj), derivative_at(&e, pj, 1));
        let (pv, pd) = (eval_coeffs(&p_coeffs, pj), derivative_at(&p_coeffs, pj, 1));
        for i in 0..n {
            // N = z^i P: N' E - N E' at p_j
            let zi = pj.powu(i as u32);
            let dzi = if i == 0 {
                C::zero()
            } else {
                pj.powu(i as u32 - 1) * T::of(i)
            };
            let nv = zi * pv;
            let nd = dzi * pv + zi * pd;
            a[(j, i)] = nd * ev - nv * ed;
        }
    }
    a[(s, 0)] = p_coeffs[0];
    rhs[s] = C::one();
    let lu = Lu::new(&a);
    if lu.pivot_ratio() < T::lit(1e-13) {
        return Err(Error::DegenerateResidueSystem);
    }
    let q = lu.solve(&rhs).ok_or(Error::DegenerateResidueSystem)?;
    let q_trim = trim(&q, T::lit(1e-13));
    let q_roots = polynomial_roots(&q_trim)?;
    let q_lead = *q_trim.last().ok_or(Error::DegenerateResidueSystem)?;
    let numerator = FactoredPoly::new(
        q_lead,
        q_roots.into_iter().map(|r| (r, 1)).chain(zeros.iter().map(|l| (*l, 1))),
    )?;
    let den_lead = zeros.iter().fold(C::one(), |acc, l| acc * l.conj() * l.conj());
    let denominator = FactoredPoly::new(den_lead, poles.iter().map(|p| (*p, 2)))?;
    let rational = RationalRep { numerator, denominator };

    // partial fractions over the Bergman kernels k_0 = 1 and (1 - conj(l) z)^{-2}
    let n_coeffs = poly_mul(&q, &p_coeffs);
    let mut terms = vec![(KernelTerm::new(C::zero(), 0), q[s] / den_lead)];
    for j in 0..s {
        let denom = zeros
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .fold(C::one(), |acc, (_, l)| {
                let f = C::<T>::one() - l.conj() * poles[j];
                acc * f * f
            });
        terms.push((KernelTerm::new(zeros[j], 0), eval_coeffs(&n_coeffs, poles[j]) / denom));
    }
    let combo = KernelCombo::new(terms)?;

    Ok(ConstructionResult {
        route: Route::Residue,
        normalization: C::one(),
        combo: Some(combo),
        taylor: rational.taylor(degree),
        rational: Some(rational),
        multiset: Some(ReproducibleMultiset::simple(0, zeros)?),
        gram_entry_error: T::zero(),
        pivot_ratio: Some(lu.pivot_ratio()),
        origin_order: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::combo_derivative_at;
    use crate::scalar::cx;

    fn ms(origin: usize, pts: &[(f64, f64)]) -> ReproducibleMultiset<f64> {
        let v: Vec<C<f64>> = pts.iter().map(|&(a, b)| cx(a, b)).collect();
        ReproducibleMultiset::simple(origin, &v).unwrap()
    }

    fn max_diff(a: &[C<f64>], b: &[C<f64>], upto: usize) -> f64 {
        (0..=upto)
            .map(|k| {
                let x = a.get(k).copied().unwrap_or_default();
                let y = b.get(k).copied().unwrap_or_default();
                (x - y).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn origin_only_gives_monomial() {
        let r = shapiro_shields(&SpaceSpec::hardy(), &ms(1, &[]), ShapiroOptions::default()).unwrap();
        assert!((r.taylor.coeffs[1] - cx(1.0, 0.0)).norm() < 1e-15);
        assert!(r
            .taylor
            .coeffs
            .iter()
            .enumerate()
            .all(|(k, c)| k == 1 || c.norm() < 1e-15));
    }

    #[test]
    fn raw_determinant_for_one_point() {
        let h2 = SpaceSpec::<f64>::hardy();
        let (d, _) = determinant_combo(
            &h2,
            KernelTerm::new(cx(0.0, 0.0), 0),
            &[KernelTerm::new(cx(0.5, 0.0), 0)],
            TruncationPolicy::default(),
        )
        .unwrap();
        // 4/3 - 1/(1 - z/2)
        let t = combo_taylor(&h2, &d, 5, BoundKind::PSeries).unwrap();
        assert!((t.coeffs[0] - cx::<f64>(1.0 / 3.0, 0.0)).norm() < 1e-12);
        for k in 1..=5 {
            assert!((t.coeffs[k] + cx(0.5f64.powi(k as i32), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn routes_agree_in_hardy_space() {
        let h2 = SpaceSpec::<f64>::hardy();
        let z = ms(1, &[(0.5, 0.0), (-0.2, 0.6)]);
        let det = shapiro_shields(&h2, &z, ShapiroOptions::with_route(RouteChoice::Determinant)).unwrap();
        let sol = shapiro_shields(&h2, &z, ShapiroOptions::with_route(RouteChoice::Solve)).unwrap();
        assert_eq!(det.route, Route::Determinant);
        assert!(max_diff(&det.taylor.coeffs, &sol.taylor.coeffs, 40) < 1e-10);
        let cl = classical_blaschke(&[(cx(0.0, 0.0), 1), (cx(0.5, 0.0), 1), (cx(-0.2, 0.6), 1)], 40).unwrap();
        assert!(max_diff(&det.taylor.coeffs, &cl.taylor.coeffs, 40) < 1e-10);
    }

    #[test]
    fn last_cofactor_identity() {
        let space = SpaceSpec::dirichlet(1.0);
        let pol = TruncationPolicy::default();
        let u = KernelTerm::new(cx(0.0, 0.0), 1);
        let vs = [
            KernelTerm::new(cx(0.0, 0.0), 0),
            KernelTerm::new(cx(0.3, 0.2), 1),
            KernelTerm::new(cx(0.3, 0.2), 0),
            KernelTerm::new(cx(-0.5, 0.1), 0),
        ];
        let (full, _) = determinant_combo(&space, u, &vs, pol).unwrap();
        let (partial, _) = determinant_combo(&space, u, &vs[..3], pol).unwrap();
        let last = full.terms.last().unwrap().coef;
        let (pairing, _) = combo_derivative_at(&space, &partial, vs[3].point, vs[3].order, pol).unwrap();
        assert!(
            (last + pairing).norm() <= 1e-9 * (1.0 + last.norm()),
            "{last} vs {pairing}"
        );
    }

    #[test]
    fn rational_residue_and_taylor() {
        let r = RationalRep::<f64> {
            numerator: FactoredPoly::new(cx(1.0, 0.0), [(cx(0.5, 0.0), 1)]).unwrap(),
            denominator: FactoredPoly::new(cx(1.0, 0.0), [(cx(2.0, 0.0), 2)]).unwrap(),
        };
        // (z - 1/2)/(z - 2)^2: residue at 2 is d/dz (z - 1/2) = 1
        assert!((r.residue(cx(2.0, 0.0)).unwrap() - cx::<f64>(1.0, 0.0)).norm() < 1e-14);
        let t = r.taylor(60);
        let z = cx(0.3, 0.4);
        assert!((t.eval(z) - r.eval(z)).norm() < 1e-12);
        assert!(t.tail_bound < 1e-6);
    }

    #[test]
    fn bergman_residues_vanish() {
        let res = bergman_rational(&[cx(0.5, 0.0), cx(-0.1, 0.4)], 200).unwrap();
        let rat = res.rational.as_ref().unwrap();
        for l in [cx(0.5, 0.0), cx(-0.1, 0.4)] {
            let p: C<f64> = l.conj().inv();
            assert!(rat.residue(p).unwrap().norm() < 1e-10);
            assert!(rat.eval(l).norm() < 1e-12);
        }
        assert!((rat.eval(cx(0.0, 0.0)) - cx(1.0, 0.0)).norm() < 1e-12);
        // combination reproduces the rational function
        let z = cx(0.2, -0.3);
        let combo = res.combo.unwrap();
        let v: C<f64> = combo.terms.iter().fold(C::zero(), |acc, t| {
            let d = C::<f64>::one() - t.point.conj() * z;
            acc + t.coef / (d * d)
        });
        assert!((v - rat.eval(z)).norm() < 1e-12);
    }

    #[test]
    fn oracle_rejects_small_degree_and_non_diagonal_routes() {
        let p = FactoredPoly::from_zeros(&[cx::<f64>(0.5, 0.0)]).unwrap();
        assert!(matches!(
            project_kernel_fd(&SpaceSpec::hardy(), &p, 0, 5),
            Err(Error::Config(_))
        ));
        let local = SpaceSpec::local_dirichlet(cx(1.0, 0.0));
        assert!(matches!(
            shapiro_shields(&local, &ms(0, &[(0.5, 0.0)]), ShapiroOptions::default()),
            Err(Error::Unsupported(_))
        ));
        let r = project_kernel_fd(&local, &p, 0, 120).unwrap();
        assert!(r.taylor.eval(cx(0.5, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn singular_gram_for_nearly_equal_points() {
        let z = ReproducibleMultiset::simple(0, &[cx::<f64>(0.5, 0.0), cx(0.5 + 2e-6, 0.0), cx(0.5, 2e-6)]).unwrap();
        let r = shapiro_shields(&SpaceSpec::hardy(), &z, ShapiroOptions::default());
        assert!(matches!(r, Err(Error::SingularGram { .. })), "{r:?}");
    }
}
