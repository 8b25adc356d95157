mod common;

use common::{corpus, ex, generic, hyperbolic, sphere};
use kundt::catalog::{random_case, CASE_IDS};
use kundt::curvature::{check_structure, riemann_frame, weyl_component, weyl_null_components};
use kundt::frame::{build_connection, check_commutators, commutator_test_fields, frame_derivative};
use kundt::oracle::{check_ccnv, oracle_compare};
use kundt::report::all_passed;
use kundt::{Coord, Expr, KundtMetric, Point, SamplePlan};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn failing(checks: &[kundt::report::Check]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:e}", c.name, c.max_value))
        .collect()
}

#[test]
fn connection_examples() {
    let p = Point::new(vec![0.8, -0.4, 0.6, -0.3]);
    let c = build_connection(&KundtMetric::minkowski(4), &p).unwrap();
    assert!(c.gamma.iter().chain(&c.j).all(|x| *x == 0.0));

    let wave = KundtMetric::flat_transverse(4, ex("x3^2", 4), vec![Expr::zero(); 2]);
    let c = build_connection(&wave, &p).unwrap();
    assert_eq!(c.j, vec![2.0 * 0.6, 0.0]);
    assert!(c.a.iter().chain(&c.b).flatten().all(|x| *x == 0.0));
    assert!(c.d.iter().flatten().flatten().all(|x| *x == 0.0));

    let m = vec![vec![ex("exp(u)", 4), Expr::zero()], vec![Expr::zero(), Expr::one()]];
    let stretched = KundtMetric::new(4, Expr::zero(), vec![Expr::zero(); 2], m).unwrap();
    let c = build_connection(&stretched, &p).unwrap();
    assert!((c.b[0][0] - 1.0).abs() < 1e-15);
    assert_eq!((c.b[0][1], c.b[1][0], c.b[1][1]), (0.0, 0.0, 0.0));
}

#[test]
fn frame_derivative_examples() {
    let m = common::generic();
    let plan = SamplePlan::new(5, 10, 1);
    let d1 = frame_derivative(1, &ex("x3*sin(u) + x5", 5), &m);
    let d2 = frame_derivative(2, &ex("u^2", 5), &m);
    for p in plan.points() {
        assert_eq!(d1.eval(&p).unwrap(), 0.0);
        assert!((d2.eval(&p).unwrap() - 2.0 * p[0]).abs() < 1e-15);
    }
    let flat = KundtMetric::minkowski(5);
    assert_eq!(
        frame_derivative(3, &ex("x3", 5), &flat)
            .eval(&Point::new(vec![0.0; 5]))
            .unwrap(),
        1.0
    );
}

#[test]
fn commutators_hold() {
    let flat = KundtMetric::minkowski(4);
    let plan = SamplePlan::new(4, 20, 1);
    let checks = check_commutators(&flat, &[ex("x3*u", 4)], &plan);
    assert!(checks.iter().all(|c| c.max_value == 0.0));

    // [D2, D3] v = J3 D1 v = 2 x3 on the pp-wave.
    let wave = KundtMetric::flat_transverse(4, ex("x3^2", 4), vec![Expr::zero(); 2]);
    assert!(all_passed(&check_commutators(&wave, &[Expr::v()], &plan)));
    let lhs = frame_derivative(2, &frame_derivative(3, &Expr::v(), &wave), &wave)
        - frame_derivative(3, &frame_derivative(2, &Expr::v(), &wave), &wave);
    for p in plan.points() {
        assert!((lhs.eval(&p).unwrap() - 2.0 * p[2]).abs() < 1e-14);
    }

    for s in corpus() {
        let n = s.metric.dimension();
        let checks = check_commutators(&s.metric, &commutator_test_fields(n), &s.plan(30, 2));
        assert!(all_passed(&checks), "{}: {:?}", s.name, failing(&checks));
    }
}

/// `B_ij + B_ji = -m_ie m_jf ∂_u g^ef`, with `∂_u g^ef = -g^ea ∂_u g_ab g^bf`
/// taken from the symbolic transverse metric.
fn b_identity_error(m: &KundtMetric, p: &Point) -> f64 {
    let t = m.transverse_dim();
    let g = m.transverse_metric();
    let gm = DMatrix::from_fn(t, t, |e, f| g[e][f].eval(p).unwrap());
    let gu = DMatrix::from_fn(t, t, |e, f| g[e][f].diff(Coord::U).eval(p).unwrap());
    let ginv = gm.try_inverse().unwrap();
    let dginv = -&ginv * gu * &ginv;
    let frame = m.frame_at(p).unwrap();
    let rhs = -(&frame * dginv * frame.transpose());
    let c = build_connection(m, p).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..t {
        for j in 0..t {
            worst = worst.max((c.b[i][j] + c.b[j][i] - rhs[(i, j)]).abs());
        }
    }
    worst
}

#[test]
fn symmetric_part_of_b() {
    for s in corpus() {
        for p in s.plan(20, 3).points() {
            assert!(b_identity_error(&s.metric, &p) <= 1e-10, "{}", s.name);
        }
    }
}

#[test]
fn pp_wave_curvature() {
    let wave = KundtMetric::flat_transverse(4, ex("x3^2", 4), vec![Expr::zero(); 2]);
    for p in SamplePlan::new(4, 10, 4).points() {
        let c = riemann_frame(&wave, &p).unwrap();
        assert!((c.r2ij2[0][0] - 2.0).abs() < 1e-12);
        assert!(c.r2ij2[0][1].abs() < 1e-12 && c.r2ij2[1][1].abs() < 1e-12);
        assert!(c.r2ijk.iter().flatten().flatten().all(|x| x.abs() < 1e-12));
        assert!(c.rijkl.iter().flatten().flatten().flatten().all(|x| x.abs() < 1e-12));
        assert!((c.ricci_22 + 2.0).abs() < 1e-12);
        assert!(c.ricci_2i.iter().all(|x| x.abs() < 1e-12));
        assert!(c.ricci_scalar.abs() < 1e-12);
        let w = weyl_null_components(&c);
        assert!(w.c1212.abs() < 1e-12 && w.c12i2.iter().all(|x| x.abs() < 1e-12));
    }
}

#[test]
fn sphere_curvature_matches_closed_form() {
    // Radius a: m33 = a, m44 = a sin(x3); sectional curvature 1/a².
    for a in [1.0, 0.5, 2.0] {
        let m = KundtMetric::new(
            4,
            Expr::zero(),
            vec![Expr::zero(); 2],
            vec![
                vec![Expr::constant(a), Expr::zero()],
                vec![Expr::zero(), ex(&format!("{a}*sin(x3)"), 4)],
            ],
        )
        .unwrap();
        let plan = SamplePlan::new(4, 10, 5).with_x_range(0.3, 2.5);
        for p in plan.points() {
            let c = riemann_frame(&m, &p).unwrap();
            let k = 1.0 / (a * a);
            assert!((c.rijkl[0][1][0][1] - k).abs() < 1e-12);
            assert!(c.r2ij2.iter().flatten().all(|x| x.abs() < 1e-12));
            assert!((c.ricci_ij[0][0] - k).abs() < 1e-12 && (c.ricci_ij[1][1] - k).abs() < 1e-12);
            assert!((c.ricci_scalar - 2.0 * k).abs() < 1e-12);
            let w = weyl_null_components(&c);
            assert!(w.c1212 < 0.0);
            assert!((w.c1212 + c.ricci_scalar / 6.0).abs() < 1e-12);
        }
    }
}

#[test]
fn weyl_formulas_agree_with_the_trace_decomposition() {
    for s in corpus() {
        let n = s.metric.dimension();
        for p in s.plan(5, 6).points() {
            let c = riemann_frame(&s.metric, &p).unwrap();
            let w = weyl_null_components(&c);
            let scale = 1.0 + c.ricci_scalar.abs();
            assert!(
                (w.c1212 - weyl_component(&c, 0, 1, 0, 1)).abs() <= 1e-10 * scale,
                "{}",
                s.name
            );
            for i in 0..n - 2 {
                assert!(
                    (w.c12i2[i] - weyl_component(&c, 0, 1, i + 2, 1)).abs() <= 1e-10 * scale,
                    "{}",
                    s.name
                );
                for j in 0..n - 2 {
                    assert!((w.c1i2j[i][j] - weyl_component(&c, 0, i + 2, 1, j + 2)).abs() <= 1e-10 * scale);
                }
            }
        }
    }
    // A vacuum wave has no Weyl component with an ℓ slot.
    let vacuum = KundtMetric::flat_transverse(4, ex("x3^2 - x4^2", 4), vec![Expr::zero(); 2]);
    let c = riemann_frame(&vacuum, &Point::new(vec![1.0, 0.0, 0.3, 0.2])).unwrap();
    let w = weyl_null_components(&c);
    assert!(w.c1212 == 0.0 && w.c12i2.iter().chain(w.c1i2j.iter().flatten()).all(|x| x.abs() < 1e-14));
}

#[test]
fn printed_four_dimensional_trace_term_differs_elsewhere() {
    let c4 = riemann_frame(&sphere("0", "0"), &Point::new(vec![1.0, 0.0, 1.0, 0.5])).unwrap();
    let w4 = weyl_null_components(&c4);
    assert!((w4.c1i2j[0][0] - w4.c1i2j_dim4_form[0][0]).abs() < 1e-14);
    let c5 = riemann_frame(&hyperbolic("0"), &Point::new(vec![1.0, 0.0, 0.2, 0.1, 0.3])).unwrap();
    let w5 = weyl_null_components(&c5);
    assert!((w5.c1i2j[0][0] - w5.c1i2j_dim4_form[0][0]).abs() > 0.1);
}

#[test]
fn frame_curvature_matches_the_coordinate_oracle() {
    for s in corpus() {
        let cmp = oracle_compare(&s.metric, &s.plan(40, 7), 1e-8, true);
        assert!(cmp.passed(), "{}: {:?}", s.name, failing(&cmp.checks));
    }
}

#[test]
fn structure_identities_hold_on_the_corpus() {
    for s in corpus() {
        let checks = check_structure(&s.metric, &s.plan(30, 8));
        assert!(all_passed(&checks), "{}: {:?}", s.name, failing(&checks));
    }
}

#[test]
fn ell_is_covariantly_constant() {
    for s in corpus() {
        let checks = check_ccnv(&s.metric, &s.plan(30, 9));
        assert!(all_passed(&checks), "{}: {:?}", s.name, failing(&checks));
    }
    let flat = check_ccnv(&KundtMetric::minkowski(4), &SamplePlan::new(4, 10, 1));
    assert!(flat.iter().all(|c| c.max_value == 0.0));
}

#[test]
fn injected_v_dependence_is_caught() {
    let bad = KundtMetric::flat_transverse(4, ex("v*u", 4), vec![Expr::zero(); 2]);
    let checks = check_ccnv(&bad, &SamplePlan::new(4, 20, 1));
    let nab = checks.iter().find(|c| c.name == "nabla_ell").unwrap();
    assert!(!nab.passed && nab.max_value > 0.1);

    let w = KundtMetric::flat_transverse(4, Expr::zero(), vec![Expr::zero(), ex("v*x3", 4)]);
    assert!(!all_passed(&check_ccnv(&w, &SamplePlan::new(4, 20, 1))));
}

#[test]
fn nabla_riemann_has_no_ell_component_for_a_u_dependent_wave() {
    let wave = KundtMetric::flat_transverse(4, ex("u*x3^2", 4), vec![Expr::zero(); 2]);
    let checks = check_structure(&wave, &SamplePlan::new(4, 30, 10));
    let c = checks
        .iter()
        .find(|c| c.name == "ell_contraction_nabla_riemann")
        .unwrap();
    assert!(c.passed, "{c:?}");
}

#[test]
fn connection_does_not_depend_on_v() {
    let m = generic();
    for p in SamplePlan::new(5, 10, 11).points() {
        let a = build_connection(&m, &p).unwrap();
        let b = build_connection(&m, &p.with(1, p[1] + 3.7)).unwrap();
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.j, b.j);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn catalog_metrics_satisfy_the_frame_identities(k in 0usize..CASE_IDS.len(), seed in 0u64..1000) {
        let plan = SamplePlan::new(5, 8, seed);
        let m = random_case(CASE_IDS[k], 5, seed, &plan).unwrap().metric;
        let checks = check_commutators(&m, &commutator_test_fields(5), &plan);
        prop_assert!(all_passed(&checks), "{:?}", failing(&checks));
        let checks = check_structure(&m, &plan);
        prop_assert!(all_passed(&checks), "{:?}", failing(&checks));
        for p in plan.points() {
            prop_assert!(b_identity_error(&m, &p) <= 1e-10);
        }
    }
}
