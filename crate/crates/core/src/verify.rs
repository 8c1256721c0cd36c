//! Numerical checks of the structural properties of constructed functions:
//! innerness, zero sets, scalar-multiple relations, subspace equality and
//! extremal optimality, plus a harness that searches for extraneous zeros.

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::construct::{project_functional_fd, shapiro_shields, truncated_span, ConstructionResult, ShapiroOptions};
use crate::error::{Error, Result};
use crate::kernel::{
    combo_derivative_at, combo_norm_sq, kernel_coeff, kernel_pairing, shift_inner_product, KernelCombo, KernelTerm,
    TaylorSeries, TruncationPolicy,
};
use crate::linalg::solve_hpd_scaled;
use crate::poly::{derivative_at, eval_coeffs, newton_polish, polynomial_roots, FactoredPoly};
use crate::scalar::{factorial, Real, C};
use crate::space::{ReproducibleMultiset, SpaceSpec};

/// Roots closer than this are merged into one cluster.
pub const CLUSTER_EPS: f64 = 1e-6;
/// Roots this close to a prescribed zero are attributed to it.
pub const ATTRIBUTION_EPS: f64 = 1e-4;
/// Slack allowed to random samples over the construction's value.
pub const EXTREMAL_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShiftResidual<T: Real> {
    pub k: usize,
    /// `|<z^k B, B>|`
    pub magnitude: T,
    pub err: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InnerReport<T: Real> {
    #[serde(rename = "K")]
    pub k_max: usize,
    pub norm_sq: T,
    pub residuals: Vec<ShiftResidual<T>>,
    pub max_relative_residual: T,
    pub tolerance: T,
    /// The verdict also holds after adding each residual's error bound.
    pub certified: bool,
    pub verdict: bool,
}

/// `<z^k B, B>` for `k = 1..=K`, relative to `||B||^2`.
pub fn inner_report<T: Real>(
    space: &SpaceSpec<T>,
    b: &TaylorSeries<T>,
    k_max: usize,
    tol: T,
) -> Result<InnerReport<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if !b.tail_bound.is_finite() {
        return Err(Error::UnboundedTail);
    }
    let norm_sq = b.truncated_norm_sq(space)?;
    if norm_sq == T::zero() {
        return Err(Error::ZeroFunction);
    }
    let residuals = (1..=k_max)
        .map(|k| {
            let (v, err) = shift_inner_product(space, b, k)?;
            Ok(ShiftResidual {
                k,
                magnitude: v.norm(),
                err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_residual = residuals.iter().fold(T::zero(), |m, r| m.max(r.magnitude / norm_sq));
    let certified = residuals.iter().all(|r| (r.magnitude + r.err) / norm_sq <= tol);
    Ok(InnerReport {
        k_max,
        norm_sq,
        residuals,
        max_relative_residual,
        tolerance: tol,
        certified,
        verdict: max_relative_residual <= tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PrescribedZero<T: Real> {
    pub point: C<T>,
    pub mult: usize,
    /// `|B^(l)(beta)|` for `l < mult`.
    pub residuals: Vec<T>,
    pub errors: Vec<T>,
    /// `|B^(mult)(beta)|` when that derivative is a bounded functional.
    pub first_nonvanishing: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExtraneousZero<T: Real> {
    pub location: C<T>,
    /// `|B(z)| / (||B|| ||k_z||)` at the polished root.
    pub residual: T,
    pub multiplicity: usize,
    /// `|B^(l)(z)| rho^l / l!` for `l = 0..=8` on the circle of radius `rho`
    /// used for the multiplicity count.
    pub derivative_residuals: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ZeroReport<T: Real> {
    pub norm: T,
    pub origin: PrescribedZero<T>,
    pub prescribed: Vec<PrescribedZero<T>>,
    pub extraneous: Vec<ExtraneousZero<T>>,
    /// Zeros inside the scan circle counted by the argument principle.
    pub winding_count: Option<usize>,
    /// Prescribed zeros (with multiplicity) strictly inside the scan circle.
    pub expected_interior: usize,
    pub radius: T,
    pub tolerance: T,
    pub truncation_degree: usize,
    pub verdict: bool,
}

/// `||B||`, from the kernel Gram when a combination is available.
pub fn function_norm<T: Real>(space: &SpaceSpec<T>, result: &ConstructionResult<T>) -> Result<T> {
    if let Some(combo) = &result.combo {
        if space.is_diagonal() {
            let (nsq, _) = combo_norm_sq(space, combo, TruncationPolicy::default())?;
            return Ok(nsq.max(T::zero()).sqrt());
        }
    }
    let t = &result.taylor;
    if !t.tail_bound.is_finite() {
        return Err(Error::UnboundedTail);
    }
    Ok(t.truncated_norm_sq(space)?.sqrt() + t.tail_bound)
}

/// `||k_z||`, or the Hardy-space value `(1 - |z|^2)^{-1/2}` when the space
/// has no closed-form kernel series.
fn kernel_scale<T: Real>(space: &SpaceSpec<T>, z: C<T>) -> T {
    if space.is_diagonal() {
        if let Ok((v, _)) = kernel_pairing(space, KernelTerm::at(z), KernelTerm::at(z), TruncationPolicy::default()) {
            return v.re.max(T::zero()).sqrt();
        }
    }
    (T::one() - z.norm_sqr()).max(T::epsilon()).sqrt().recip()
}

/// `sum_{n > big_n} |c_n| r^n` for a kernel combination, or `None` when
/// no geometric bound closes.
fn combo_radius_tail<T: Real>(space: &SpaceSpec<T>, combo: &KernelCombo<T>, big_n: usize, r: T) -> Option<T> {
    let mut total = T::zero();
    for term in &combo.terms {
        if term.coef.is_zero() {
            continue;
        }
        let k = term.kernel();
        let rho = k.point.norm();
        if rho == T::zero() {
            if k.order > big_n {
                total += term.coef.norm() * kernel_coeff(space, k, k.order).norm() * r.powi(k.order as i32);
            }
            continue;
        }
        let mut acc = T::zero();
        let mut n = big_n + 1;
        loop {
            let a = kernel_coeff(space, k, n).norm() * r.powi(n as i32);
            let growth = T::of(n + 1) / T::of((n + 1).saturating_sub(k.order).max(1));
            let q = growth * rho * r * space.weight_ratio_sup(n)?;
            if q < T::one() {
                acc += a / (T::one() - q);
                break;
            }
            acc += a;
            n += 1;
            if n > big_n + 200_000 {
                return None;
            }
        }
        total += term.coef.norm() * acc;
    }
    Some(total)
}

/// Number of zeros of `f` inside `|z| = r`, or `None` when `|f|` comes
/// within `floor` of zero on the circle or the phase cannot be resolved.
pub fn winding_count<T: Real>(f: impl Fn(C<T>) -> C<T> + Sync, r: T, floor: T) -> Option<usize> {
    let mut n = 256usize;
    let limit = T::FRAC_PI_4();
    while n <= 1 << 16 {
        let values: Vec<C<T>> = (0..n)
            .into_par_iter()
            .map(|k| f(C::from_polar(r, T::TAU() * T::of(k) / T::of(n))))
            .collect();
        if values.iter().any(|v| v.norm() <= floor) {
            return None;
        }
        let mut total = T::zero();
        let mut resolved = true;
        for k in 0..n {
            let step = (values[(k + 1) % n] / values[k]).arg();
            if step.abs() > limit {
                resolved = false;
                break;
            }
            total += step;
        }
        if resolved {
            let turns = (total / T::TAU()).round();
            return turns.to_usize();
        }
        n *= 2;
    }
    None
}

/// Zeros of the polynomial inside `|w - z| < rho`, by the argument
/// principle on that circle.
fn local_multiplicity<T: Real>(coeffs: &[C<T>], z: C<T>, rho: T) -> Option<usize> {
    winding_count(|w| eval_coeffs(coeffs, z + w), rho, T::zero())
}

fn local_coefficients<T: Real>(coeffs: &[C<T>], z: C<T>, rho: T) -> Vec<T> {
    (0..=8)
        .map(|l| derivative_at(coeffs, z, l).norm() * rho.powi(l as i32) / factorial::<T>(l))
        .collect()
}

struct Cluster<T: Real> {
    center: C<T>,
    count: usize,
}

fn cluster_roots<T: Real>(roots: &[C<T>], eps: T) -> Vec<Cluster<T>> {
    let mut out: Vec<Cluster<T>> = Vec::new();
    for &z in roots {
        match out.iter_mut().find(|c| (c.center - z).norm() <= eps) {
            Some(c) => {
                c.center = (c.center * T::of(c.count) + z) / T::of(c.count + 1);
                c.count += 1;
            }
            None => out.push(Cluster { center: z, count: 1 }),
        }
    }
    out
}

/// Prescribed residuals, origin order and an extraneous-zero scan of a
/// constructed function over `|z| <= radius`.
pub fn zero_report<T: Real>(
    space: &SpaceSpec<T>,
    result: &ConstructionResult<T>,
    z: &ReproducibleMultiset<T>,
    radius: T,
    tol: T,
) -> Result<ZeroReport<T>> {
    if !(tol > T::zero()) || !(radius > T::zero() && radius < T::one()) {
        return Err(Error::Config("zero_report needs tol > 0 and 0 < radius < 1".into()));
    }
    let policy = TruncationPolicy::default();
    let norm = function_norm(space, result)?;
    if norm == T::zero() {
        return Err(Error::ZeroFunction);
    }
    let coeffs = &result.taylor.coeffs;
    let threshold = tol * norm;

    let m0 = z.origin_multiplicity;
    let origin = PrescribedZero {
        point: C::zero(),
        mult: m0,
        residuals: (0..m0)
            .map(|l| coeffs.get(l).map_or(T::zero(), |c| c.norm()) * factorial::<T>(l))
            .collect(),
        errors: vec![T::zero(); m0],
        first_nonvanishing: Some(coeffs.get(m0).map_or(T::zero(), |c| c.norm()) * factorial::<T>(m0)),
    };

    let mut prescribed = Vec::new();
    for e in &z.entries {
        let mut residuals = Vec::with_capacity(e.mult);
        let mut errors = Vec::with_capacity(e.mult);
        for l in 0..e.mult {
            let (v, err) = derivative_with_error(space, result, e.point, l, policy)?;
            residuals.push(v);
            errors.push(err);
        }
        let admissible = KernelTerm::new(e.point, e.mult).check_admissible(space).is_ok();
        let first_nonvanishing = if admissible {
            derivative_with_error(space, result, e.point, e.mult, policy)
                .ok()
                .map(|(v, _)| v)
        } else {
            None
        };
        prescribed.push(PrescribedZero {
            point: e.point,
            mult: e.mult,
            residuals,
            errors,
            first_nonvanishing,
        });
    }

    let expected_interior = m0
        + z.entries
            .iter()
            .filter(|e| e.point.norm() < radius)
            .map(|e| e.mult)
            .sum::<usize>();
    let known: Vec<C<T>> = z.all_points().into_iter().map(|(p, _)| p).collect();
    let (winding, extraneous) = scan_interior(space, result, &known, expected_interior, radius, tol, norm)?;

    let prescribed_ok = prescribed.iter().all(|p| p.residuals.iter().all(|r| *r <= threshold));
    let origin_ok =
        origin.residuals.iter().all(|r| *r <= threshold) && origin.first_nonvanishing.is_some_and(|v| v > tol);
    Ok(ZeroReport {
        norm,
        origin,
        prescribed,
        extraneous,
        winding_count: winding,
        expected_interior,
        radius,
        tolerance: tol,
        truncation_degree: result.taylor.truncation_degree,
        verdict: prescribed_ok && origin_ok,
    })
}

fn derivative_with_error<T: Real>(
    space: &SpaceSpec<T>,
    result: &ConstructionResult<T>,
    beta: C<T>,
    l: usize,
    policy: TruncationPolicy<T>,
) -> Result<(T, T)> {
    if let Some(combo) = &result.combo {
        if space.is_diagonal() {
            let (v, err) = combo_derivative_at(space, combo, beta, l, policy)?;
            return Ok((v.norm(), err));
        }
    }
    let t = &result.taylor;
    let v = derivative_at(&t.coeffs, beta, l);
    let err = if t.tail_bound == T::zero() {
        T::zero()
    } else if space.is_diagonal() {
        let k = KernelTerm::new(beta, l);
        let (nsq, e) = kernel_pairing(space, k, k, policy)?;
        t.tail_bound * (nsq.re + e).sqrt()
    } else {
        T::infinity()
    };
    Ok((v.norm(), err))
}

/// Zeros inside `|z| <= radius` that are not attributable to `known`.
fn scan_interior<T: Real>(
    space: &SpaceSpec<T>,
    result: &ConstructionResult<T>,
    known: &[C<T>],
    expected: usize,
    radius: T,
    tol: T,
    norm: T,
) -> Result<(Option<usize>, Vec<ExtraneousZero<T>>)> {
    let attribution = T::lit(ATTRIBUTION_EPS);
    let is_known = |w: C<T>| known.iter().any(|k| (*k - w).norm() <= attribution);

    if let Some(rat) = &result.rational {
        // zeros of a rational form are the numerator's roots
        let inside: Vec<_> = rat
            .numerator
            .roots
            .iter()
            .filter(|r| r.point.norm() <= radius)
            .collect();
        let count = inside.iter().map(|r| r.mult).sum();
        let extraneous = inside
            .iter()
            .filter(|r| !is_known(r.point))
            .map(|r| ExtraneousZero {
                location: r.point,
                residual: (rat.eval(r.point) * result.normalization).norm() / (norm * kernel_scale(space, r.point)),
                multiplicity: r.mult,
                derivative_residuals: Vec::new(),
            })
            .collect();
        return Ok((Some(count), extraneous));
    }

    let coeffs = &result.taylor.coeffs;
    let big_n = result.taylor.truncation_degree;
    let scale = result.normalization;
    let circle_tail = match (&result.combo, result.taylor.tail_bound == T::zero()) {
        (_, true) => T::zero(),
        (Some(combo), false) if space.is_diagonal() => combo_radius_tail(space, combo, big_n, radius)
            .map(|t| t * scale.norm())
            .unwrap_or_else(T::infinity),
        _ => result.taylor.eval_error(space, C::new(radius, T::zero()))?,
    };
    let threshold = tol * norm;
    if !(circle_tail <= threshold) {
        return Err(Error::TruncationDominatesResidual {
            tail: circle_tail.as_f64(),
            threshold: threshold.as_f64(),
        });
    }

    let count = winding_count(|w| eval_coeffs(coeffs, w), radius, circle_tail * T::lit(2.0));
    if count == Some(expected) {
        return Ok((count, Vec::new()));
    }

    // shortest prefix whose discarded part is negligible on the circle
    let mut cut = coeffs.len() - 1;
    let mut dropped = T::zero();
    while cut > expected + 1 {
        let next = dropped + coeffs[cut].norm() * radius.powi(cut as i32);
        if next > T::lit(1e-3) * threshold {
            break;
        }
        dropped = next;
        cut -= 1;
    }
    let roots = polynomial_roots(&coeffs[..=cut])?;
    let grow = radius * (T::one() + T::lit(1e-9));
    let polished: Vec<C<T>> = roots
        .into_iter()
        .filter(|w| w.norm() <= grow)
        .map(|w| newton_polish(coeffs, w, 8))
        .filter(|w| w.norm() <= radius)
        .collect();
    let clusters = cluster_roots(&polished, T::lit(CLUSTER_EPS));
    let mut extraneous = Vec::new();
    for (i, c) in clusters.iter().enumerate() {
        if is_known(c.center) {
            continue;
        }
        let ks = kernel_scale(space, c.center);
        let residual = eval_coeffs(coeffs, c.center).norm() / (norm * ks);
        if residual > tol {
            continue;
        }
        let gap = clusters
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| (o.center - c.center).norm())
            .chain(known.iter().map(|k| (*k - c.center).norm()))
            .fold(T::lit(2e-3), T::min);
        extraneous.push(ExtraneousZero {
            location: c.center,
            residual,
            multiplicity: local_multiplicity(coeffs, c.center, gap / T::lit(2.0)).unwrap_or(c.count),
            derivative_residuals: local_coefficients(coeffs, c.center, gap / T::lit(2.0)),
        });
    }
    Ok((count, extraneous))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ComparisonReport<T: Real> {
    pub is_scalar_multiple: bool,
    /// Least-squares `lambda` in `f ~ lambda g`.
    pub lambda: C<T>,
    pub max_coeff_deviation: T,
    pub compared_degree: usize,
}

/// Fits `f ~ lambda g` over the common coefficient range.
pub fn scalar_multiple_check<T: Real>(f: &TaylorSeries<T>, g: &TaylorSeries<T>, tol: T) -> Result<ComparisonReport<T>> {
    let n = f.coeffs.len().min(g.coeffs.len());
    if n == 0 {
        return Err(Error::ZeroFunction);
    }
    let (a, b) = (&f.coeffs[..n], &g.coeffs[..n]);
    let fa = a.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    let gb = b.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if fa == T::zero() || gb == T::zero() {
        return Err(Error::ZeroFunction);
    }
    let num = a.iter().zip(b).fold(C::zero(), |acc, (x, y)| acc + y.conj() * x);
    let den = b.iter().fold(T::zero(), |acc, y| acc + y.norm_sqr());
    let lambda = num / den;
    let dev = a
        .iter()
        .zip(b)
        .fold(T::zero(), |m, (x, y)| m.max((*x - lambda * y).norm()));
    Ok(ComparisonReport {
        is_scalar_multiple: dev <= tol * fa.max(gb),
        lambda,
        max_coeff_deviation: dev,
        compared_degree: n - 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProbeEvidence<T: Real> {
    pub probe: KernelTerm<T>,
    /// Largest coefficient difference of the two truncated projections,
    /// relative to their largest coefficient.
    pub deviation: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SubspaceReport<T: Real> {
    pub equal: bool,
    pub r_p: ReproducibleMultiset<T>,
    pub r_q: ReproducibleMultiset<T>,
    #[serde(rename = "M")]
    pub big_m: usize,
    pub probes: Vec<ProbeEvidence<T>>,
    pub agreement_tolerance: T,
    /// Oracle evidence points the same way as the multiset decision.
    pub corroborated: bool,
}

/// Probe kernels used as corroborating evidence besides `k_0^{(d)}`.
pub fn default_probes<T: Real>() -> [KernelTerm<T>; 2] {
    [
        KernelTerm::new(C::new(T::lit(0.3), T::lit(0.2)), 0),
        KernelTerm::new(C::new(T::lit(-0.25), T::lit(0.35)), 1),
    ]
}

/// Decides `[p] = [q]` by comparing reproducible zero multisets; the
/// truncated projections of three probe kernels are recorded as evidence.
pub fn subspace_equal<T: Real>(
    space: &SpaceSpec<T>,
    p: &FactoredPoly<T>,
    q: &FactoredPoly<T>,
    big_m: usize,
) -> Result<SubspaceReport<T>> {
    let r_p = space.reproducible_multiset(p)?;
    let r_q = space.reproducible_multiset(q)?;
    let equal = r_p.same_as(&r_q, T::lit(1e-12));
    let agreement_tolerance = T::lit(1e-8);
    let mut kernels = vec![KernelTerm::new(C::zero(), r_p.origin_multiplicity)];
    kernels.extend(default_probes());
    let probes = kernels
        .par_iter()
        .map(|&probe| {
            let (a, _) = project_functional_fd(space, p, probe, big_m)?;
            let (b, _) = project_functional_fd(space, q, probe, big_m)?;
            let big = a.iter().chain(&b).fold(T::zero(), |m, c| m.max(c.norm()));
            let diff = a.iter().zip(&b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()));
            let deviation = if big == T::zero() { T::zero() } else { diff / big };
            Ok(ProbeEvidence { probe, deviation })
        })
        .collect::<Result<Vec<_>>>()?;
    let corroborated = if equal {
        probes.iter().all(|e| e.deviation <= agreement_tolerance)
    } else {
        probes.iter().any(|e| e.deviation > agreement_tolerance)
    };
    Ok(SubspaceReport {
        equal,
        r_p,
        r_q,
        big_m,
        probes,
        agreement_tolerance,
        corroborated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExtremalReport<T: Real> {
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(rename = "M")]
    pub big_m: usize,
    /// `Re B^(d)(0) / ||B||` for the normalized construction.
    pub construction_value: T,
    pub best_sample: T,
    /// Exact supremum over the truncated subspace, when its Gram is usable.
    pub truncated_optimum: Option<T>,
    pub margin: T,
    pub verdict: bool,
}

/// Compares `Re g^(d)(0)` over seeded random unit vectors `g` of
/// `span{z^j p : j <= M - deg p}` with the value attained by the
/// normalized construction. Samples are complex Gaussian coefficient
/// vectors drawn from ChaCha8 seeded with `seed`.
pub fn extremal_check<T: Real>(
    space: &SpaceSpec<T>,
    p: &FactoredPoly<T>,
    result: &ConstructionResult<T>,
    samples: usize,
    seed: u64,
    big_m: usize,
) -> Result<ExtremalReport<T>> {
    let d = result.origin_order;
    let r = space.reproducible_multiset(p)?;
    if r.origin_multiplicity != d {
        return Err(Error::Config(format!(
            "construction is normalized at degree {d} but the origin multiplicity of R(p) is {}",
            r.origin_multiplicity
        )));
    }
    let norm = function_norm(space, result)?;
    let lead = result.taylor.coeffs.get(d).copied().unwrap_or_else(C::zero);
    let construction_value = factorial::<T>(d) * lead.re / norm;

    let (basis, g) = truncated_span(space, p, big_m)?;
    let k = basis.len();
    let dfact = factorial::<T>(d);
    let e: Vec<C<T>> = basis
        .iter()
        .map(|phi| phi.get(d).map_or(C::zero(), |c| *c * dfact))
        .collect();

    let truncated_optimum = solve_hpd_scaled(&g, &e).ok().map(|(x, _)| {
        // sup Re <g, k> over the unit ball is sqrt(e^* G^{-1} e)
        let v = e.iter().zip(&x).fold(C::<T>::zero(), |acc, (a, b)| acc + a.conj() * b);
        v.re.max(T::zero()).sqrt()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::neg_infinity();
    let mut y = vec![C::<T>::zero(); k];
    for _ in 0..samples {
        for yj in y.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *yj = C::new(T::lit(re), T::lit(im));
        }
        // ||sum y_j phi_j||^2 = sum_{i,j} y_j conj(y_i) G[i][j]
        let mut nsq = T::zero();
        for i in 0..k {
            let mut row = C::zero();
            for j in 0..k {
                row += g[(i, j)] * y[j];
            }
            nsq += (y[i].conj() * row).re;
        }
        if !(nsq > T::zero()) {
            continue;
        }
        let val = y.iter().zip(&e).fold(C::<T>::zero(), |acc, (a, b)| acc + *a * b).re / nsq.sqrt();
        best = best.max(val);
    }
    let margin = T::lit(EXTREMAL_MARGIN);
    Ok(ExtremalReport {
        d,
        samples,
        seed,
        big_m,
        construction_value,
        best_sample: best,
        truncated_optimum,
        margin,
        verdict: best <= construction_value + margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScanInstance<T: Real> {
    pub a: C<T>,
    pub b: C<T>,
    pub beta: C<T>,
    pub residual: T,
    pub multiplicity: usize,
    /// `S_A` against `S_{A + beta}`.
    pub comparison: Option<ComparisonReport<T>>,
    pub comparison_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScanFailure<T: Real> {
    pub a: C<T>,
    pub b: C<T>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScanReport<T: Real> {
    pub space: SpaceSpec<T>,
    pub moduli: Vec<T>,
    pub angles: usize,
    pub radius: T,
    pub tolerance: T,
    pub comparison_tolerance: T,
    pub grid_points: usize,
    pub pairs_scanned: usize,
    pub failures: Vec<ScanFailure<T>>,
    pub instances: Vec<ScanInstance<T>>,
    pub found: bool,
    pub statement: String,
    /// SHA-256 of the canonical JSON of this report with an empty signature.
    pub signature: String,
}

impl<T: Real> ScanReport<T> {
    pub fn compute_signature(&self) -> String {
        let mut body = self.clone();
        body.signature = String::new();
        let text = serde_json::to_string(&body).expect("report serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn signature_valid(&self) -> bool {
        self.signature == self.compute_signature()
    }
}

/// Searches two-point multisets `{a, b}` on a polar grid for Shapiro-Shields
/// functions with zeros off their prescribed set inside `|z| <= radius`.
/// Every discovered zero `beta` is checked against `S_{A + beta}` with
/// [`scalar_multiple_check`] at `comparison_tol`.
pub fn extraneous_scan<T: Real>(
    space: &SpaceSpec<T>,
    moduli: &[T],
    angles: usize,
    radius: T,
    tol: T,
    comparison_tol: T,
) -> Result<ScanReport<T>> {
    if angles == 0 || moduli.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    let grid: Vec<C<T>> = moduli
        .iter()
        .flat_map(|&r| (0..angles).map(move |k| C::from_polar(r, T::TAU() * T::of(k) / T::of(angles))))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (i + 1..grid.len()).map(move |j| (i, j)))
        .collect();
    let opts = ShapiroOptions::default();

    let outcomes: Vec<std::result::Result<Vec<ScanInstance<T>>, ScanFailure<T>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (grid[i], grid[j]);
            let fail = |e: Error| ScanFailure {
                a,
                b,
                error: e.to_string(),
            };
            let z = ReproducibleMultiset::simple(0, &[a, b]).map_err(fail)?;
            let s = shapiro_shields(space, &z, opts).map_err(fail)?;
            let report = zero_report(space, &s, &z, radius, tol).map_err(fail)?;
            Ok(report
                .extraneous
                .iter()
                .map(|x| {
                    let enlarged = z
                        .with_point(x.location)
                        .and_then(|z2| shapiro_shields(space, &z2, opts))
                        .and_then(|s2| scalar_multiple_check(&s.taylor, &s2.taylor, comparison_tol));
                    let (comparison, comparison_error) = match enlarged {
                        Ok(c) => (Some(c), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    ScanInstance {
                        a,
                        b,
                        beta: x.location,
                        residual: x.residual,
                        multiplicity: x.multiplicity,
                        comparison,
                        comparison_error,
                    }
                })
                .collect())
        })
        .collect();

    let mut failures = Vec::new();
    let mut instances = Vec::new();
    for o in outcomes {
        match o {
            Ok(v) => instances.extend(v),
            Err(f) => failures.push(f),
        }
    }
    let found = !instances.is_empty();
    let statement = if found {
        format!("{} extraneous zero(s) found in region", instances.len())
    } else {
        "no instance found in region".to_string()
    };
    let mut report = ScanReport {
        space: space.clone(),
        moduli: moduli.to_vec(),
        angles,
        radius,
        tolerance: tol,
        comparison_tolerance: comparison_tol,
        grid_points: grid.len(),
        pairs_scanned: pairs.len(),
        failures,
        instances,
        found,
        statement,
        signature: String::new(),
    };
    report.signature = report.compute_signature();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{classical_blaschke, RouteChoice};
    use crate::scalar::cx;

    fn c(re: f64, im: f64) -> C<f64> {
        cx(re, im)
    }

    #[test]
    fn monomial_is_inner_and_one_plus_z_is_not() {
        let h2 = SpaceSpec::hardy();
        let z = TaylorSeries::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let r = inner_report(&h2, &z, 5, 1e-12).unwrap();
        assert!(r.verdict && r.certified);
        assert!(r.residuals.iter().all(|x| x.magnitude == 0.0));
        let f = TaylorSeries::polynomial(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let r = inner_report(&h2, &f, 1, 1e-8).unwrap();
        assert!(!r.verdict);
        assert!((r.residuals[0].magnitude - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_multiple_examples() {
        let f = TaylorSeries::polynomial(vec![c(1.0, 0.5), c(-0.25, 2.0), c(0.0, 0.0), c(3.0, -1.0)]);
        let r = scalar_multiple_check(&f, &f, 1e-12).unwrap();
        assert!(r.is_scalar_multiple);
        assert!((r.lambda - c(1.0, 0.0)).norm() < 1e-15);
        let g = TaylorSeries::polynomial(f.coeffs.iter().map(|x| x * c(0.0, 2.0)).collect());
        let r = scalar_multiple_check(&f, &g, 1e-12).unwrap();
        assert!(r.is_scalar_multiple);
        assert!((r.lambda - c(0.0, -0.5)).norm() < 1e-15);
        let h = TaylorSeries::polynomial(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(!scalar_multiple_check(&f, &h, 1e-8).unwrap().is_scalar_multiple);
        let zero = TaylorSeries::polynomial(vec![c(0.0, 0.0)]);
        assert_eq!(scalar_multiple_check(&f, &zero, 1e-8), Err(Error::ZeroFunction));
    }

    #[test]
    fn winding_counts_polynomial_zeros() {
        let p = [c(0.1, 0.0), c(-1.1, 0.0), c(1.0, 0.0)];
        // (z - 1)(z - 0.1)
        assert_eq!(winding_count(|z| eval_coeffs(&p, z), 0.5, 0.0), Some(1));
        assert_eq!(winding_count(|z| eval_coeffs(&p, z), 2.0, 0.0), Some(2));
        assert_eq!(winding_count(|z| eval_coeffs(&p, z), 1.0, 0.0), None);
    }

    #[test]
    fn hardy_blaschke_factor_has_only_its_zero() {
        let h2 = SpaceSpec::hardy();
        let z = ReproducibleMultiset::simple(0, &[c(0.5, 0.0)]).unwrap();
        let s = shapiro_shields(&h2, &z, ShapiroOptions::default()).unwrap();
        let r = zero_report(&h2, &s, &z, 0.99, 1e-8).unwrap();
        assert!(r.verdict);
        assert!(r.extraneous.is_empty());
        assert_eq!(r.winding_count, Some(1));
        let cl = classical_blaschke(&[(c(0.5, 0.0), 1)], 64).unwrap();
        let r = zero_report(&h2, &cl, &z, 0.99, 1e-8).unwrap();
        assert!(r.verdict && r.extraneous.is_empty());
    }

    #[test]
    fn zero_report_flags_an_unprescribed_zero() {
        // z - 0.3 in the Hardy space is not inner; its zero at 0.3 is not
        // prescribed when Z is empty
        let h2 = SpaceSpec::hardy();
        let f = ConstructionResult {
            route: crate::construct::Route::Oracle,
            normalization: c(1.0, 0.0),
            combo: None,
            taylor: TaylorSeries::polynomial(vec![c(-0.3, 0.0), c(1.0, 0.0)]),
            rational: None,
            multiset: None,
            gram_entry_error: 0.0,
            pivot_ratio: None,
            origin_order: 0,
        };
        let r = zero_report(&h2, &f, &ReproducibleMultiset::empty(), 0.9, 1e-8).unwrap();
        assert_eq!(r.winding_count, Some(1));
        assert_eq!(r.extraneous.len(), 1);
        assert!((r.extraneous[0].location - c(0.3, 0.0)).norm() < 1e-12);
        assert_eq!(r.extraneous[0].multiplicity, 1);
    }

    #[test]
    fn extremal_value_for_the_monomial() {
        let h2 = SpaceSpec::hardy();
        let p = FactoredPoly::from_zeros(&[c(0.0, 0.0)]).unwrap();
        let z = h2.reproducible_multiset(&p).unwrap();
        let s = shapiro_shields(&h2, &z, ShapiroOptions::with_route(RouteChoice::Solve)).unwrap();
        let r = extremal_check(&h2, &p, &s, 200, 7, 20).unwrap();
        assert!((r.construction_value - 1.0).abs() < 1e-14);
        assert!((r.truncated_optimum.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.verdict);
    }

    #[test]
    fn signature_detects_tampering() {
        let mut r = extraneous_scan(&SpaceSpec::bergman(), &[0.5], 3, 0.9, 1e-8, 1e-7).unwrap();
        assert_eq!(r.pairs_scanned, 3);
        assert!(r.signature_valid());
        r.statement.push('!');
        assert!(!r.signature_valid());
    }
}
