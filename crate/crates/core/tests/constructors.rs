use proptest::prelude::*;
use rkhs_blaschke::construct::{determinant_combo, project_functional_fd, RouteChoice, ShapiroOptions};
use rkhs_blaschke::kernel::{combo_derivative_at, combo_norm_sq};
use rkhs_blaschke::space::MultisetEntry;
use rkhs_blaschke::{
    bergman_rational, classical_blaschke, cx, inner_projection_of, project_kernel_fd, shapiro_shields, Error,
    FactoredPoly, KernelTerm, ReproducibleMultiset, Route, SpaceSpec, TruncationPolicy, C,
};

type Cx = C<f64>;

fn c(re: f64, im: f64) -> Cx {
    cx(re, im)
}

fn max_diff(a: &[Cx], b: &[Cx], upto: usize) -> f64 {
    (0..=upto)
        .map(|k| (a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default()).norm())
        .fold(0.0, f64::max)
}

fn simple(origin: usize, pts: &[Cx]) -> ReproducibleMultiset<f64> {
    ReproducibleMultiset::simple(origin, pts).unwrap()
}

#[test]
fn hardy_single_point_is_a_blaschke_factor() {
    let h2 = SpaceSpec::hardy();
    let r = shapiro_shields(&h2, &simple(0, &[c(0.5, 0.0)]), ShapiroOptions::default()).unwrap();
    // normalized at degree 0: (z - 1/2)/(1 - z/2) divided by its value -1/2 at 0
    let cl = classical_blaschke(&[(c(0.5, 0.0), 1)], 80).unwrap();
    assert!(max_diff(&r.taylor.coeffs, &cl.taylor.coeffs, 80) < 1e-12);
    let raw_at_zero = cl.rational.as_ref().unwrap().eval(c(0.0, 0.0));
    assert!((raw_at_zero - c(-0.5, 0.0)).norm() < 1e-15);
    for k in 0..64 {
        let z = Cx::from_polar(1.0, k as f64 * 0.1);
        assert!((cl.rational.as_ref().unwrap().eval(z).norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn classical_blaschke_examples() {
    let empty = classical_blaschke::<f64>(&[], 10).unwrap();
    assert_eq!(empty.taylor.coeffs[0], c(1.0, 0.0));
    assert!(empty.taylor.coeffs[1..].iter().all(|x| x.norm() == 0.0));
    let two = classical_blaschke(&[(c(0.5, 0.0), 1), (c(-1.0 / 3.0, 0.0), 1)], 10).unwrap();
    assert!((two.rational.as_ref().unwrap().eval(c(0.0, 1.0)).norm() - 1.0).abs() < 1e-14);
    assert!(classical_blaschke(&[(c(1.0, 0.0), 1)], 10).is_err());
}

#[test]
fn hardy_combo_is_supported_on_origin_and_zeros() {
    let pts = [c(0.5, 0.1), c(-0.3, 0.4), c(0.0, -0.6)];
    let r = shapiro_shields(&SpaceSpec::hardy(), &simple(0, &pts), ShapiroOptions::default()).unwrap();
    let combo = r.combo.unwrap();
    assert_eq!(combo.terms.len(), 4);
    assert!(combo.terms.iter().all(|t| t.order == 0));
    assert_eq!(combo.terms[0].point, c(0.0, 0.0));
    for p in pts {
        assert!(combo.terms.iter().any(|t| t.point == p));
    }
}

#[test]
fn bergman_single_point_matches_oracle() {
    let a2 = SpaceSpec::bergman();
    let r = shapiro_shields(&a2, &simple(0, &[c(0.5, 0.0)]), ShapiroOptions::default()).unwrap();
    let p = FactoredPoly::from_zeros(&[c(0.5, 0.0)]).unwrap();
    let o = project_kernel_fd(&a2, &p, 0, 400).unwrap();
    assert_eq!(o.route, Route::Oracle);
    assert!(max_diff(&r.taylor.coeffs, &o.taylor.coeffs, 400) < 1e-8);
}

#[test]
fn oracle_examples() {
    let h2 = SpaceSpec::hardy();
    let z = FactoredPoly::from_zeros(&[c(0.0, 0.0)]).unwrap();
    let o = project_kernel_fd(&h2, &z, 1, 50).unwrap();
    assert!(max_diff(&o.taylor.coeffs, &[c(0.0, 0.0), c(1.0, 0.0)], 50) < 1e-14);

    let p = FactoredPoly::from_zeros(&[c(0.5, 0.0)]).unwrap();
    let o = project_kernel_fd(&h2, &p, 0, 400).unwrap();
    let cl = classical_blaschke(&[(c(0.5, 0.0), 1)], 400).unwrap();
    assert!(max_diff(&o.taylor.coeffs, &cl.taylor.coeffs, 400) < 1e-8);

    let zz2 = FactoredPoly::from_zeros(&[c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
    let o2 = project_kernel_fd(&h2, &zz2, 1, 400).unwrap();
    let o1 = project_kernel_fd(&h2, &z, 1, 400).unwrap();
    assert!(max_diff(&o2.taylor.coeffs, &o1.taylor.coeffs, 400) < 1e-8);
}

#[test]
fn bergman_residue_route_matches_determinant() {
    let a2 = SpaceSpec::bergman();
    for pts in [
        vec![c(0.5, 0.0)],
        vec![c(0.5, 0.0), c(-0.5, 0.0)],
        vec![c(0.3, 0.4), c(-0.6, 0.1), c(0.1, -0.7)],
    ] {
        let res = bergman_rational(&pts, 300).unwrap();
        let det = shapiro_shields(
            &a2,
            &simple(0, &pts),
            ShapiroOptions {
                taylor_degree: Some(300),
                ..ShapiroOptions::with_route(RouteChoice::Determinant)
            },
        )
        .unwrap();
        assert!(max_diff(&res.taylor.coeffs, &det.taylor.coeffs, 300) < 1e-8, "{pts:?}");
        let rat = res.rational.as_ref().unwrap();
        for l in &pts {
            assert!(rat.residue(l.conj().inv()).unwrap().norm() < 1e-10);
        }
        // combination coefficients agree with the determinant route
        let dc = det.combo.unwrap();
        for t in &res.combo.unwrap().terms {
            let other = dc.terms.iter().find(|s| (s.point - t.point).norm() < 1e-14).unwrap();
            assert!((other.coef - t.coef).norm() < 1e-9 * (1.0 + t.coef.norm()));
        }
    }
    assert!(matches!(
        bergman_rational(&[c(0.0, 0.0)], 10),
        Err(Error::InadmissibleMultiset(_))
    ));
}

#[test]
fn inner_projection_examples() {
    let h2 = SpaceSpec::hardy();
    let z = FactoredPoly::from_zeros(&[c(0.0, 0.0)]).unwrap();
    let j = inner_projection_of(&h2, &z, 60).unwrap();
    assert!(max_diff(&j.taylor.coeffs, &[c(0.0, 0.0), c(1.0, 0.0)], 60) < 1e-14);

    // [z(1+z)] = [z] in the Hardy space, so J tends to the constant 1; the
    // boundary zero makes the convergence algebraic in M
    let one_plus_z = FactoredPoly::from_zeros(&[c(-1.0, 0.0)]).unwrap();
    let errs: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&m| {
            let j = inner_projection_of(&h2, &one_plus_z, m).unwrap();
            max_diff(&j.taylor.coeffs, &[c(1.0, 0.0)], m)
        })
        .collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!(errs[2] < 1e-2, "{errs:?}");

    let a2 = SpaceSpec::bergman();
    let f = FactoredPoly::from_zeros(&[c(0.5, 0.0)]).unwrap();
    let j = inner_projection_of(&a2, &f, 400).unwrap();
    let s = shapiro_shields(&a2, &simple(0, &[c(0.5, 0.0)]), ShapiroOptions::default()).unwrap();
    // both normalized at degree 0, so the scalar multiple is 1
    assert!(max_diff(&j.taylor.coeffs, &s.taylor.coeffs, 400) < 1e-8);
}

#[test]
fn inner_projection_is_proportional_to_oracle_at_finite_degree() {
    for space in [SpaceSpec::hardy(), SpaceSpec::bergman(), SpaceSpec::dirichlet(1.0)] {
        let f = FactoredPoly::new(c(2.0, 1.0), [(c(0.0, 0.0), 1), (c(0.4, -0.3), 2), (c(1.5, 0.0), 1)]).unwrap();
        let j = inner_projection_of(&space, &f, 120).unwrap();
        let o = project_kernel_fd(&space, &f, 1, 120).unwrap();
        assert!(max_diff(&j.taylor.coeffs, &o.taylor.coeffs, 120) < 1e-9);
    }
}

#[test]
fn local_dirichlet_oracle_has_prescribed_zeros() {
    let space = SpaceSpec::local_dirichlet(c(1.0, 0.0));
    let p = FactoredPoly::new(c(1.0, 0.0), [(c(0.0, 0.0), 2), (c(0.0, 0.5), 1), (c(1.0, 0.0), 1)]).unwrap();
    let o = project_kernel_fd(&space, &p, 2, 200).unwrap();
    assert!(o.taylor.eval(c(0.0, 0.5)).norm() < 1e-10);
    assert!(o.taylor.eval(c(1.0, 0.0)).norm() < 1e-8);
    assert!((o.taylor.coeffs[2] - c(1.0, 0.0)).norm() < 1e-15);
    assert!(o.taylor.coeffs[0].norm() < 1e-14 && o.taylor.coeffs[1].norm() < 1e-14);
    let (raw, ratio) = project_functional_fd(&space, &p, KernelTerm::new(c(0.2, 0.1), 1), 200).unwrap();
    assert!(ratio >= 1e-12);
    assert!(raw.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
}

#[test]
fn boundary_points_in_smooth_dirichlet_spaces() {
    // D_5 admits k_1 and k_1^(1): Z = {0, 0, i/2, -1, -1, 1, 1}
    let space = SpaceSpec::dirichlet(5.0);
    let z = ReproducibleMultiset::new(
        2,
        vec![
            MultisetEntry {
                point: c(0.0, 0.5),
                mult: 1,
            },
            MultisetEntry {
                point: c(-1.0, 0.0),
                mult: 2,
            },
            MultisetEntry {
                point: c(1.0, 0.0),
                mult: 2,
            },
        ],
    )
    .unwrap();
    let pol = TruncationPolicy::with_tolerance(1e-10);
    let r = shapiro_shields(
        &space,
        &z,
        ShapiroOptions {
            policy: pol,
            ..Default::default()
        },
    )
    .unwrap();
    let combo = r.combo.as_ref().unwrap();
    for (beta, m) in [(c(0.0, 0.5), 1), (c(-1.0, 0.0), 2), (c(1.0, 0.0), 2), (c(0.0, 0.0), 2)] {
        for l in 0..m {
            let (v, e) = combo_derivative_at(&space, combo, beta, l, pol).unwrap();
            assert!(v.norm() <= e + 1e-9, "derivative {l} at {beta}: {v} (err {e})");
        }
    }
    assert!((r.taylor.coeffs[2] - c(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn determinant_last_coefficient_identity_bergman() {
    let space = SpaceSpec::bergman();
    let pol = TruncationPolicy::default();
    let u = KernelTerm::new(c(0.0, 0.0), 0);
    let vs = [
        KernelTerm::new(c(0.5, 0.2), 0),
        KernelTerm::new(c(0.5, 0.2), 1),
        KernelTerm::new(c(-0.4, 0.0), 0),
    ];
    let (full, _) = determinant_combo(&space, u, &vs, pol).unwrap();
    let (partial, _) = determinant_combo(&space, u, &vs[..2], pol).unwrap();
    let last = full.terms.last().unwrap().coef;
    let (pairing, _) = combo_derivative_at(&space, &partial, vs[2].point, vs[2].order, pol).unwrap();
    assert!((last + pairing).norm() <= 1e-9 * (1.0 + last.norm()));
}

#[test]
fn single_precision_construction() {
    let h2 = SpaceSpec::<f32>::hardy();
    let z = ReproducibleMultiset::simple(1, &[C::new(0.5f32, 0.0)]).unwrap();
    let r = shapiro_shields(&h2, &z, ShapiroOptions::default()).unwrap();
    let cl = classical_blaschke(&[(C::new(0.0f32, 0.0), 1), (C::new(0.5f32, 0.0), 1)], 30).unwrap();
    for k in 0..=30 {
        assert!((r.taylor.coeffs[k] - cl.taylor.coeffs[k]).norm() < 1e-4);
    }
}

/// Multisets with pairwise separated points of modulus at most 0.8.
fn multiset_strategy() -> impl Strategy<Value = ReproducibleMultiset<f64>> {
    (
        0usize..=2,
        proptest::collection::vec((0.3f64..0.8, 0.0f64..std::f64::consts::TAU, 1usize..=2), 0..=3),
    )
        .prop_filter_map("points must be separated", |(origin, pts)| {
            let entries: Vec<MultisetEntry<f64>> = pts
                .iter()
                .map(|&(r, t, m)| MultisetEntry {
                    point: Cx::from_polar(r, t),
                    mult: m,
                })
                .collect();
            for (i, e) in entries.iter().enumerate() {
                if entries[..i].iter().any(|f| (f.point - e.point).norm() < 0.25) {
                    return None;
                }
            }
            let z = ReproducibleMultiset::new(origin, entries).ok()?;
            (z.size() >= 1 && z.size() <= 4).then_some(z)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn routes_agree(z in multiset_strategy(), which in 0usize..3) {
        let space = [SpaceSpec::hardy(), SpaceSpec::bergman(), SpaceSpec::dirichlet(1.0)][which].clone();
        let det = shapiro_shields(&space, &z, ShapiroOptions::with_route(RouteChoice::Determinant)).unwrap();
        let sol = shapiro_shields(&space, &z, ShapiroOptions::with_route(RouteChoice::Solve)).unwrap();
        let o = project_kernel_fd(&space, &z.polynomial(), z.origin_multiplicity, 400).unwrap();
        prop_assert!(max_diff(&det.taylor.coeffs, &sol.taylor.coeffs, 40) < 1e-8);
        prop_assert!(max_diff(&det.taylor.coeffs, &o.taylor.coeffs, 40) < 1e-8);
    }

    #[test]
    fn orthogonality_and_origin_order(z in multiset_strategy(), which in 0usize..3) {
        let space = [SpaceSpec::hardy(), SpaceSpec::bergman(), SpaceSpec::dirichlet(1.0)][which].clone();
        let pol = TruncationPolicy::default();
        let r = shapiro_shields(&space, &z, ShapiroOptions::default()).unwrap();
        let combo = r.combo.as_ref().unwrap();
        for (beta, m) in z.all_points() {
            for l in 0..m {
                let (v, e) = combo_derivative_at(&space, combo, beta, l, pol).unwrap();
                prop_assert!(v.norm() <= e + 1e-9 * combo.coef_l1(), "{l} at {beta}: {v}");
            }
        }
        let m0 = z.origin_multiplicity;
        prop_assert!((r.taylor.coeffs[m0] - c(1.0, 0.0)).norm() < 1e-14);
        let (norm_sq, _) = combo_norm_sq(&space, combo, pol).unwrap();
        let low = r.taylor.coeffs[..m0].iter().fold(0.0f64, |m, x| m.max(x.norm()));
        prop_assert!(low <= 1e-8 * norm_sq.sqrt(), "low coefficient {low}, norm {}", norm_sq.sqrt());
    }

    #[test]
    fn hardy_matches_classical(pts in proptest::collection::vec((0.15f64..0.85, 0.0f64..std::f64::consts::TAU), 1..=4)) {
        let v: Vec<Cx> = pts.iter().map(|&(r, t)| Cx::from_polar(r, t)).collect();
        let Ok(z) = ReproducibleMultiset::simple(0, &v) else { return Ok(()); };
        if v.iter().enumerate().any(|(i, a)| v[..i].iter().any(|b| (a - b).norm() < 0.2)) {
            return Ok(());
        }
        let s = shapiro_shields(&SpaceSpec::hardy(), &z, ShapiroOptions::default()).unwrap();
        let zeros: Vec<(Cx, usize)> = v.iter().map(|p| (*p, 1)).collect();
        let cl = classical_blaschke(&zeros, 60).unwrap();
        prop_assert!(max_diff(&s.taylor.coeffs, &cl.taylor.coeffs, 60) < 1e-8);
    }
}
