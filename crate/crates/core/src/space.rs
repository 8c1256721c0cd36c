//! Hilbert spaces of analytic functions on the unit disk described by the
//! inner products of monomials, and the reproducibility structure of
//! points and polynomial zero sets.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelTerm;
use crate::linalg::{CMatrix, Cholesky};
use crate::poly::{FactoredPoly, ORIGIN_EPS};
use crate::scalar::{is_finite_c, Real, C};

/// Distance from the unit circle below which a point counts as a boundary
/// point.
pub const BOUNDARY_EPS: f64 = 1e-12;
/// Multiset points closer than this are rejected as near-coincident.
pub const COINCIDENCE_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRuleKind {
    /// Explicit values `w_0..w_{L-1}`, continued by a power law.
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReproEntry<T: Real> {
    pub point: C<T>,
    pub order: ReproducibleOrder,
}

/// A space given directly by a finite table of monomial inner products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CustomGram<T: Real> {
    /// `gram[m][n] = <z^m, z^n>`; queries beyond the table fail.
    pub gram: Vec<Vec<C<T>>>,
    #[serde(default)]
    pub reproducibility: Vec<ReproEntry<T>>,
    /// Optional bound on the norm of the shift operator.
    #[serde(default)]
    pub shift_norm: Option<T>,
}

impl<T: Real> CustomGram<T> {
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        Self {
            gram: (0..size).map(|m| (0..size).map(|n| f(m, n)).collect()).collect(),
            reproducibility: Vec::new(),
            shift_norm: None,
        }
    }
}

/// Which reproducing kernel Hilbert space on the disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "T: Real")]
pub enum SpaceSpec<T: Real> {
    /// `D_alpha`, weights `(k+1)^alpha`. `alpha = -1, 0, 1` give the Bergman,
    /// Hardy and Dirichlet spaces.
    Dirichlet {
        alpha: T,
    },
    /// Weighted Hardy space `H^2_w` with a tabulated weight sequence. Beyond
    /// the table `w_k = w_{L-1} ((k+1)/L)^tail_alpha`.
    Weights {
        rule: WeightRuleKind,
        values: Vec<T>,
        #[serde(default)]
        tail_alpha: T,
    },
    /// Local Dirichlet space at a unimodular point `zeta`, normed by
    /// `||f||_{H^2}^2 + D_zeta(f)`.
    LocalDirichlet {
        zeta: C<T>,
    },
    Custom(CustomGram<T>),
}

/// `ro(beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproducibleOrder {
    Infinite,
    /// Derivative evaluations of orders `0..=r` are bounded.
    Finite(usize),
    None,
}

impl ReproducibleOrder {
    pub fn admits(self, order: usize) -> bool {
        match self {
            Self::Infinite => true,
            Self::Finite(r) => order <= r,
            Self::None => false,
        }
    }

    /// Largest multiplicity a reproducible multiset may carry at the point:
    /// the number of bounded derivative functionals.
    pub fn cap(self) -> usize {
        match self {
            Self::Infinite => usize::MAX,
            Self::Finite(r) => r + 1,
            Self::None => 0,
        }
    }
}

impl<T: Real> SpaceSpec<T> {
    pub fn hardy() -> Self {
        Self::Dirichlet { alpha: T::zero() }
    }

    pub fn bergman() -> Self {
        Self::Dirichlet { alpha: -T::one() }
    }

    pub fn dirichlet(alpha: T) -> Self {
        Self::Dirichlet { alpha }
    }

    pub fn weight_table(values: Vec<T>, tail_alpha: T) -> Self {
        Self::Weights {
            rule: WeightRuleKind::Table,
            values,
            tail_alpha,
        }
    }

    pub fn local_dirichlet(zeta: C<T>) -> Self {
        Self::LocalDirichlet { zeta }
    }

    /// Radius of the disk on which the built-in spaces live.
    pub fn domain_radius(&self) -> T {
        T::one()
    }

    /// True when monomials are mutually orthogonal.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, Self::Dirichlet { .. } | Self::Weights { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Dirichlet { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidSpace("alpha must be finite".into()));
                }
            }
            Self::Weights { values, tail_alpha, .. } => {
                if values.is_empty() {
                    return Err(Error::InvalidSpace("weight table is empty".into()));
                }
                if let Some(k) = values.iter().position(|w| !(*w > T::zero()) || !w.is_finite()) {
                    return Err(Error::InvalidSpace(format!("weight w_{k} is not strictly positive")));
                }
                if !tail_alpha.is_finite() {
                    return Err(Error::InvalidSpace("tail_alpha must be finite".into()));
                }
                let drift = self.weight_drift_probe();
                if !drift.passed {
                    return Err(Error::InvalidSpace(format!(
                        "weight ratio w_k/w_(k+1) does not approach 1 (drift {:e} at k = 999)",
                        drift.drift_at_end
                    )));
                }
            }
            Self::LocalDirichlet { zeta } => {
                if (zeta.norm() - T::one()).abs() > T::lit(BOUNDARY_EPS) {
                    return Err(Error::InvalidSpace("local Dirichlet point must be unimodular".into()));
                }
            }
            Self::Custom(c) => {
                let n = c.gram.len();
                if n == 0 || c.gram.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidSpace(
                        "custom gram must be a nonempty square table".into(),
                    ));
                }
                let m = CMatrix::from_fn(n, n, |i, j| c.gram[i][j]);
                let scale = (0..n).fold(T::zero(), |s, i| s.max(m[(i, i)].norm()));
                if m.hermitian_defect() > T::lit(1e-12) * scale.max(T::one()) {
                    return Err(Error::InvalidSpace("custom gram is not Hermitian".into()));
                }
                // all leading principal minors positive <=> Cholesky succeeds
                Cholesky::new(&m).map_err(|_| {
                    Error::InvalidSpace("custom gram has a non-positive leading principal minor".into())
                })?;
            }
        }
        Ok(())
    }

    /// Spot check of the precondition `w_k / w_{k+1} -> 1` over the first
    /// thousand indices.
    pub fn weight_drift_probe(&self) -> DriftProbe {
        let ratio = |k: usize| -> f64 {
            match (self.weight(k), self.weight(k + 1)) {
                (Some(a), Some(b)) => (a / b).as_f64(),
                _ => 1.0,
            }
        };
        let end = (ratio(999) - 1.0).abs();
        let mid = (ratio(499) - 1.0).abs();
        // converging ratios either sit within the drift bound or still
        // shrink at least like 1/k between k = 499 and k = 999
        let passed = end <= 1e-3 || end <= 0.6 * mid;
        DriftProbe {
            drift_at_end: end,
            drift_at_mid: mid,
            passed,
        }
    }

    /// `w_n` for diagonal spaces.
    pub fn weight(&self, n: usize) -> Option<T> {
        match self {
            Self::Dirichlet { alpha } => Some(T::of(n + 1).powf(*alpha)),
            Self::Weights { values, tail_alpha, .. } => {
                let l = values.len();
                if n < l {
                    Some(values[n])
                } else {
                    Some(values[l - 1] * (T::of(n + 1) / T::of(l)).powf(*tail_alpha))
                }
            }
            _ => None,
        }
    }

    fn tail_exponent(&self) -> Option<(T, usize)> {
        match self {
            Self::Dirichlet { alpha } => Some((*alpha, 0)),
            Self::Weights { values, tail_alpha, .. } => Some((*tail_alpha, values.len())),
            _ => None,
        }
    }

    /// `sup_{n >= from} w_n / w_{n+1}` for diagonal spaces.
    pub fn weight_ratio_sup(&self, from: usize) -> Option<T> {
        let (alpha, table_len) = self.tail_exponent()?;
        let w = |n| self.weight(n).unwrap();
        let mut best = T::zero();
        for n in from..table_len.max(from) {
            best = best.max(w(n) / w(n + 1));
        }
        let n0 = from.max(table_len);
        let tail = if alpha >= T::zero() {
            T::one()
        } else {
            w(n0) / w(n0 + 1)
        };
        Some(best.max(tail))
    }

    /// `sup_{n >= from} w_{n+1} / w_n` for diagonal spaces.
    pub fn weight_growth_sup(&self, from: usize) -> Option<T> {
        let (alpha, table_len) = self.tail_exponent()?;
        let w = |n| self.weight(n).unwrap();
        let mut best = T::zero();
        for n in from..table_len.max(from) {
            best = best.max(w(n + 1) / w(n));
        }
        let n0 = from.max(table_len);
        let tail = if alpha <= T::zero() {
            T::one()
        } else {
            w(n0 + 1) / w(n0)
        };
        Some(best.max(tail))
    }

    /// Constants `(c, a)` with `w_n >= c (n+1)^a` for all `n >= from`.
    pub fn power_tail_from(&self, from: usize) -> Option<(T, T)> {
        let (alpha, table_len) = self.tail_exponent()?;
        let w = |n| self.weight(n).unwrap();
        let anchor = table_len.saturating_sub(1).max(from);
        let mut c = w(anchor) / T::of(anchor + 1).powf(alpha);
        for n in from..anchor {
            c = c.min(w(n) / T::of(n + 1).powf(alpha));
        }
        Some((c, alpha))
    }

    /// Upper bound on `||S^k f|| / ||f||` over functions supported on
    /// degrees `>= from`.
    pub fn shift_gain(&self, k: usize, from: usize) -> Option<T> {
        match self {
            Self::Dirichlet { .. } | Self::Weights { .. } => {
                let (alpha, table_len) = self.tail_exponent()?;
                let w = |n| self.weight(n).unwrap();
                let mut best = T::zero();
                let n0 = from.max(table_len);
                for n in from..n0 {
                    best = best.max((w(n + k) / w(n)).sqrt());
                }
                let tail = if alpha >= T::zero() {
                    (w(n0 + k) / w(n0)).sqrt()
                } else {
                    T::one()
                };
                Some(best.max(tail))
            }
            // ||z f||^2 = ||f||^2_{H^2} + D_zeta(f) + |f(zeta)|^2 <= 3 ||f||^2
            Self::LocalDirichlet { .. } => Some(T::lit(3.0).powf(T::of(k) / T::lit(2.0))),
            Self::Custom(c) => c.shift_norm.map(|s| s.powi(k as i32)),
        }
    }

    /// `<z^m, z^n>`.
    pub fn monomial_inner(&self, m: usize, n: usize) -> Result<C<T>> {
        match self {
            Self::Dirichlet { .. } | Self::Weights { .. } => Ok(if m == n {
                Complex::new(self.weight(m).unwrap(), T::zero())
            } else {
                C::zero()
            }),
            Self::LocalDirichlet { zeta } => {
                let delta = if m == n { C::one() } else { C::zero() };
                if m == 0 || n == 0 {
                    return Ok(delta);
                }
                let e = m as i64 - n as i64;
                let power = if e >= 0 {
                    zeta.powu(e as u32)
                } else {
                    zeta.conj().powu((-e) as u32)
                };
                Ok(delta + power * T::of(m.min(n)))
            }
            Self::Custom(c) => c.gram.get(m).and_then(|row| row.get(n)).copied().ok_or_else(|| {
                Error::Evaluation(format!("gram entry ({m}, {n}) outside the {0}x{0} table", c.gram.len()))
            }),
        }
    }

    /// `ro(beta)`.
    pub fn reproducible_order(&self, beta: C<T>) -> Result<ReproducibleOrder> {
        let r = beta.norm();
        if r <= T::lit(ORIGIN_EPS) {
            return Ok(ReproducibleOrder::Infinite);
        }
        if let Self::Custom(c) = self {
            return c
                .reproducibility
                .iter()
                .find(|e| (e.point - beta).norm() <= T::lit(BOUNDARY_EPS))
                .map(|e| e.order)
                .ok_or(Error::MissingReproducibility {
                    re: beta.re.as_f64(),
                    im: beta.im.as_f64(),
                });
        }
        let eps = T::lit(BOUNDARY_EPS);
        if r < T::one() - eps {
            return Ok(ReproducibleOrder::Infinite);
        }
        if r > T::one() + eps {
            return Ok(ReproducibleOrder::None);
        }
        match self {
            Self::Dirichlet { alpha } => Ok(boundary_order(*alpha)),
            Self::Weights { tail_alpha, .. } => Ok(boundary_order(*tail_alpha)),
            Self::LocalDirichlet { zeta } => Ok(if (beta - zeta).norm() <= T::lit(1e-9) {
                ReproducibleOrder::Finite(0)
            } else {
                ReproducibleOrder::None
            }),
            Self::Custom(_) => unreachable!(),
        }
    }

    /// `R(p)`: zeros of `p`, each kept with multiplicity
    /// `min(zero order, ro + 1)`.
    pub fn reproducible_multiset(&self, p: &FactoredPoly<T>) -> Result<ReproducibleMultiset<T>> {
        let mut origin = 0usize;
        let mut entries = Vec::new();
        for root in &p.roots {
            if root.point.norm() <= T::lit(ORIGIN_EPS) {
                origin += root.mult;
                continue;
            }
            let keep = root.mult.min(self.reproducible_order(root.point)?.cap());
            if keep > 0 {
                entries.push(MultisetEntry {
                    point: root.point,
                    mult: keep,
                });
            }
        }
        ReproducibleMultiset::new(origin, entries)
    }
}

fn boundary_order<T: Real>(alpha: T) -> ReproducibleOrder {
    // k^{(m)} at a boundary point lies in the space iff alpha > 2m + 1
    let mut r: Option<usize> = None;
    let mut m = 0usize;
    while alpha > T::of(2 * m + 1) {
        r = Some(m);
        m += 1;
    }
    match r {
        Some(r) => ReproducibleOrder::Finite(r),
        None => ReproducibleOrder::None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftProbe {
    pub drift_at_end: f64,
    pub drift_at_mid: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MultisetEntry<T: Real> {
    pub point: C<T>,
    pub mult: usize,
}

/// `Z = {0 (m_0 times), beta_1 (m_1 times), ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReproducibleMultiset<T: Real> {
    #[serde(rename = "origin", default)]
    pub origin_multiplicity: usize,
    #[serde(rename = "points", default)]
    pub entries: Vec<MultisetEntry<T>>,
}

impl<T: Real> ReproducibleMultiset<T> {
    /// Structural checks: nonzero distinct points, positive multiplicities.
    pub fn new(origin_multiplicity: usize, entries: Vec<MultisetEntry<T>>) -> Result<Self> {
        let z = Self {
            origin_multiplicity,
            entries,
        };
        z.check_structure()?;
        Ok(z)
    }

    pub fn empty() -> Self {
        Self {
            origin_multiplicity: 0,
            entries: Vec::new(),
        }
    }

    /// Simple points plus an origin multiplicity.
    pub fn simple(origin_multiplicity: usize, points: &[C<T>]) -> Result<Self> {
        Self::new(
            origin_multiplicity,
            points.iter().map(|&point| MultisetEntry { point, mult: 1 }).collect(),
        )
    }

    fn check_structure(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.mult == 0 {
                return Err(Error::InadmissibleMultiset("multiplicities must be positive".into()));
            }
            if !is_finite_c(e.point) {
                return Err(Error::InadmissibleMultiset("points must be finite".into()));
            }
            if e.point.norm() <= T::lit(ORIGIN_EPS) {
                return Err(Error::InadmissibleMultiset(
                    "the origin is listed only through origin_multiplicity".into(),
                ));
            }
            for f in &self.entries[..i] {
                if (e.point - f.point).norm() < T::lit(COINCIDENCE_EPS) {
                    return Err(Error::InadmissibleMultiset(format!(
                        "points {} and {} are closer than {COINCIDENCE_EPS:e}",
                        e.point, f.point
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that every multiplicity is within the reproducibility cap.
    pub fn validate_for(&self, space: &SpaceSpec<T>) -> Result<()> {
        self.check_structure()?;
        for e in &self.entries {
            let order = space.reproducible_order(e.point)?;
            if e.mult > order.cap() {
                return Err(Error::InadmissibleMultiset(format!(
                    "point {} has multiplicity {} but reproducible order {:?}",
                    e.point, e.mult, order
                )));
            }
        }
        Ok(())
    }

    /// Number of elements counted with multiplicity.
    pub fn size(&self) -> usize {
        self.origin_multiplicity + self.entries.iter().map(|e| e.mult).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    /// `(point, multiplicity)` including the origin when `m_0 > 0`.
    pub fn all_points(&self) -> Vec<(C<T>, usize)> {
        let mut out = Vec::new();
        if self.origin_multiplicity > 0 {
            out.push((C::zero(), self.origin_multiplicity));
        }
        out.extend(self.entries.iter().map(|e| (e.point, e.mult)));
        out
    }

    /// Kernels spanning the orthogonal complement of `[p_Z]`, ordered as in
    /// the Shapiro-Shields determinant: `k_0^{(m_0-1)}, ..., k_0`, then each
    /// `k_{beta_j}^{(m_j-1)}, ..., k_{beta_j}`.
    pub fn constraint_kernels(&self) -> Vec<KernelTerm<T>> {
        let mut out = Vec::new();
        for order in (0..self.origin_multiplicity).rev() {
            out.push(KernelTerm::new(C::zero(), order));
        }
        for e in &self.entries {
            for order in (0..e.mult).rev() {
                out.push(KernelTerm::new(e.point, order));
            }
        }
        out
    }

    /// `prod (z - beta)` over the multiset.
    pub fn polynomial(&self) -> FactoredPoly<T> {
        let mut roots: Vec<(C<T>, usize)> = Vec::new();
        if self.origin_multiplicity > 0 {
            roots.push((C::zero(), self.origin_multiplicity));
        }
        roots.extend(self.entries.iter().map(|e| (e.point, e.mult)));
        FactoredPoly::new(C::one(), roots).expect("multiset polynomial is valid")
    }

    /// Adds one more copy of `point`.
    pub fn with_point(&self, point: C<T>) -> Result<Self> {
        let mut out = self.clone();
        if point.norm() <= T::lit(ORIGIN_EPS) {
            out.origin_multiplicity += 1;
            return Ok(out);
        }
        match out
            .entries
            .iter_mut()
            .find(|e| (e.point - point).norm() < T::lit(COINCIDENCE_EPS))
        {
            Some(e) => e.mult += 1,
            None => out.entries.push(MultisetEntry { point, mult: 1 }),
        }
        out.check_structure()?;
        Ok(out)
    }

    /// Multiset equality with points matched within `tol`.
    pub fn same_as(&self, other: &Self, tol: T) -> bool {
        if self.origin_multiplicity != other.origin_multiplicity || self.entries.len() != other.entries.len() {
            return false;
        }
        let mut used = vec![false; other.entries.len()];
        for e in &self.entries {
            let hit = other
                .entries
                .iter()
                .enumerate()
                .find(|(i, f)| !used[*i] && (f.point - e.point).norm() <= tol && f.mult == e.mult);
            match hit {
                Some((i, _)) => used[i] = true,
                None => return false,
            }
        }
        true
    }

    /// Elements listed with repetition, origin first, then by real and
    /// imaginary part.
    pub fn elements(&self) -> Vec<C<T>> {
        let mut out = vec![C::zero(); self.origin_multiplicity];
        let mut rest: Vec<C<T>> = self
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.point, e.mult))
            .collect();
        rest.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        out.extend(rest);
        out
    }

    /// True when every point of `self` occurs in `other` with at least the
    /// same multiplicity.
    pub fn is_submultiset_of(&self, other: &Self, tol: T) -> bool {
        if self.origin_multiplicity > other.origin_multiplicity {
            return false;
        }
        self.entries.iter().all(|e| {
            other
                .entries
                .iter()
                .any(|f| (f.point - e.point).norm() <= tol && f.mult >= e.mult)
        })
    }
}

/// Zero multiset `Z(p)` of a polynomial, with no reproducibility cap.
pub fn zero_multiset<T: Real>(p: &FactoredPoly<T>) -> Result<ReproducibleMultiset<T>> {
    let mut origin = 0;
    let mut entries = Vec::new();
    for r in &p.roots {
        if r.point.norm() <= T::lit(ORIGIN_EPS) {
            origin += r.mult;
        } else {
            entries.push(MultisetEntry {
                point: r.point,
                mult: r.mult,
            });
        }
    }
    ReproducibleMultiset::new(origin, entries)
}
