use std::f64::consts::PI;

use quadrature::double_exponential::integrate;
use rkhs_blaschke::space::{CustomGram, MultisetEntry, ReproEntry};
use rkhs_blaschke::{cx, FactoredPoly, ReproducibleMultiset, ReproducibleOrder, SpaceSpec, C};

/// `(m n / pi) * integral over the disk of z^{m-1} conj(z)^{n-1} P(z)`,
/// with `P(z) = (1 - |z|^2) / |z - zeta|^2`, by nested tanh-sinh
/// quadrature. The angular variable is reparametrized so that
/// `P dtheta = dphi`; this keeps the inner integrand bounded as `|z| -> 1`.
fn local_dirichlet_part(zeta_angle: f64, m: usize, n: usize) -> C<f64> {
    let k = m as f64 - n as f64;
    let angular = |r: f64, part: fn(f64) -> f64| -> f64 {
        let c = (1.0 - r) / (1.0 + r);
        let f = |phi: f64| {
            let theta = 2.0 * (c * (phi / 2.0).tan()).atan();
            part(k * (zeta_angle + theta))
        };
        integrate(f, -PI, 0.0, 1e-13).integral + integrate(f, 0.0, PI, 1e-13).integral
    };
    let radial =
        |part: fn(f64) -> f64| integrate(|r| r.powi((m + n) as i32 - 1) * angular(r, part), 0.0, 1.0, 1e-12).integral;
    let scale = (m * n) as f64 / PI;
    cx(radial(f64::cos) * scale, radial(f64::sin) * scale)
}

#[test]
fn local_dirichlet_gram_matches_area_integral() {
    for zeta_angle in [0.0, 0.7, -2.3] {
        let zeta = C::from_polar(1.0, zeta_angle);
        let space = SpaceSpec::local_dirichlet(zeta);
        for m in 1..=8 {
            for n in 1..=8 {
                let hardy: C<f64> = if m == n { cx(1.0, 0.0) } else { cx(0.0, 0.0) };
                let quad = hardy + local_dirichlet_part(zeta_angle, m, n);
                let closed = space.monomial_inner(m, n).unwrap();
                assert!(
                    (quad - closed).norm() <= 1e-8,
                    "zeta angle {zeta_angle}, ({m}, {n}): quadrature {quad} vs closed form {closed}"
                );
            }
        }
        // constants have no derivative, so only the Hardy part survives
        for n in 0..=8 {
            let expected = if n == 0 { cx(1.0, 0.0) } else { cx(0.0, 0.0) };
            assert_eq!(space.monomial_inner(0, n).unwrap(), expected);
        }
    }
}

#[test]
fn space_json_forms_round_trip() {
    let cases = [
        r#"{"type":"dirichlet","alpha":-1.0}"#,
        r#"{"type":"weights","rule":"table","values":[1.0,0.5,0.25],"tail_alpha":-1.0}"#,
        r#"{"type":"local_dirichlet","zeta":[0.0,1.0]}"#,
    ];
    for text in cases {
        let s: SpaceSpec<f64> = serde_json::from_str(text).unwrap();
        s.validate().unwrap();
        let back: SpaceSpec<f64> = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
    let plain: SpaceSpec<f64> = serde_json::from_str(r#"{"type":"weights","rule":"table","values":[2.0]}"#).unwrap();
    assert_eq!(plain.weight(10), Some(2.0));
    let custom = r#"{"type":"custom","gram":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[2.0,0.0]]],
        "reproducibility":[{"point":[0.5,0.0],"order":"infinite"},{"point":[1.0,0.0],"order":{"finite":2}}]}"#;
    let s: SpaceSpec<f64> = serde_json::from_str(custom).unwrap();
    s.validate().unwrap();
    assert_eq!(
        s.reproducible_order(cx(1.0, 0.0)).unwrap(),
        ReproducibleOrder::Finite(2)
    );
    assert!(serde_json::from_str::<SpaceSpec<f64>>(r#"{"type":"hilbert"}"#).is_err());
}

#[test]
fn factored_poly_json() {
    let text = r#"{"leading":[2.0,0.0],"roots":[{"point":[0.0,0.5],"mult":1},{"point":[1.0,0.0],"mult":2}]}"#;
    let p: FactoredPoly<f64> = serde_json::from_str(text).unwrap();
    assert_eq!(p.degree(), 3);
    assert_eq!(serde_json::to_string(&p).unwrap(), text);
}

fn f_example() -> FactoredPoly<f64> {
    FactoredPoly::new(
        cx(1.0, 0.0),
        [
            (cx(0.0, 0.0), 2),
            (cx(0.0, 0.5), 1),
            (cx(-1.0, 0.0), 2),
            (cx(1.0, 0.0), 2),
        ],
    )
    .unwrap()
}

#[test]
fn four_space_reproducible_zeros() {
    let f = f_example();
    let expect = |pts: &[(f64, usize)]| {
        let mut entries = vec![MultisetEntry {
            point: cx(0.0, 0.5),
            mult: 1,
        }];
        entries.extend(pts.iter().map(|&(x, m)| MultisetEntry {
            point: cx(x, 0.0),
            mult: m,
        }));
        ReproducibleMultiset::new(2, entries).unwrap()
    };
    for alpha in [-1.0, 0.0, 0.5, 1.0] {
        let r = SpaceSpec::dirichlet(alpha).reproducible_multiset(&f).unwrap();
        assert!(r.same_as(&expect(&[]), 0.0), "alpha {alpha}");
    }
    for alpha in [1.5, 2.0, 3.0] {
        let r = SpaceSpec::dirichlet(alpha).reproducible_multiset(&f).unwrap();
        assert!(r.same_as(&expect(&[(-1.0, 1), (1.0, 1)]), 0.0), "alpha {alpha}");
    }
    for alpha in [3.5, 5.0] {
        let r = SpaceSpec::dirichlet(alpha).reproducible_multiset(&f).unwrap();
        assert!(r.same_as(&expect(&[(-1.0, 2), (1.0, 2)]), 0.0), "alpha {alpha}");
    }
    let r = SpaceSpec::local_dirichlet(cx(1.0, 0.0))
        .reproducible_multiset(&f)
        .unwrap();
    assert!(r.same_as(&expect(&[(1.0, 1)]), 0.0));
    assert_eq!(r.elements().len(), 4);
}

#[test]
fn order_two_boundary_point_keeps_three_copies() {
    // a space in which evaluation of f, f', f'' is bounded at 1
    let mut g = CustomGram::from_fn(6, |m, n| {
        if m == n {
            cx::<f64>(1.0 + m as f64, 0.0)
        } else {
            cx(0.0, 0.0)
        }
    });
    g.reproducibility = vec![
        ReproEntry {
            point: cx(1.0, 0.0),
            order: ReproducibleOrder::Finite(2),
        },
        ReproEntry {
            point: cx(0.0, PI),
            order: ReproducibleOrder::None,
        },
    ];
    let space = SpaceSpec::Custom(g);
    let p = FactoredPoly::new(cx(1.0, 0.0), [(cx(0.0, 0.0), 1), (cx(1.0, 0.0), 3), (cx(0.0, PI), 1)]).unwrap();
    let r = space.reproducible_multiset(&p).unwrap();
    assert_eq!(r.origin_multiplicity, 1);
    assert_eq!(r.entries.len(), 1);
    assert_eq!(r.entries[0].mult, 3);
}

#[test]
fn exterior_zeros_are_dropped() {
    let p = FactoredPoly::from_zeros(&[cx::<f64>(0.0, 0.0), cx(2.0, 0.0)]).unwrap();
    let r = SpaceSpec::hardy().reproducible_multiset(&p).unwrap();
    assert_eq!(r.size(), 1);
    assert_eq!(r.origin_multiplicity, 1);
}

#[test]
fn single_precision_space_model() {
    let s = SpaceSpec::<f32>::dirichlet(4.0);
    assert_eq!(
        s.reproducible_order(C::new(1.0f32, 0.0)).unwrap(),
        ReproducibleOrder::Finite(1)
    );
    assert_eq!(s.monomial_inner(1, 1).unwrap(), C::new(16.0f32, 0.0));
}
