use kundt::catalog::{random_case, CASE_IDS};
use kundt::metric::{qr_upper_triangularize, triangular_factor, TriangularFrame};
use kundt::{parse_expr, Coord, Expr, KundtMetric, Point, SamplePlan};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn ex(s: &str) -> Expr {
    parse_expr(s, 5).unwrap()
}

fn twisted() -> KundtMetric {
    KundtMetric::new(
        5,
        ex("x3*x4^2 + sin(u)*x5"),
        vec![Expr::zero(), ex("u*x3 + x5"), ex("x4^2")],
        vec![
            vec![ex("exp(u*x4/3)"), ex("x5/4"), Expr::zero()],
            vec![Expr::zero(), ex("1 + x3^2/5"), ex("u/3")],
            vec![Expr::zero(), Expr::zero(), ex("2 + cos(x4)")],
        ],
    )
    .unwrap()
}

/// `Jᵀ g(Φ(p)) J`: the old metric pulled back along the chart map `old = Φ(new)`.
fn pullback(old: &KundtMetric, phi: &[Expr], p: &Point) -> DMatrix<f64> {
    let n = old.dimension();
    let x = Point::new(phi.iter().map(|f| f.eval(p).unwrap()).collect());
    let g = old.coordinate_metric_at(&x).unwrap();
    let j = DMatrix::from_fn(n, n, |mu, a| phi[mu].diff(Coord(a)).eval(p).unwrap());
    j.transpose() * g * j
}

fn assert_pullback(old: &KundtMetric, new: &KundtMetric, phi: &[Expr], plan: &SamplePlan) {
    for p in plan.points() {
        let want = pullback(old, phi, &p);
        let got = new.coordinate_metric_at(&p).unwrap();
        let err = (&want - &got).abs().max();
        assert!(err < 1e-12, "pullback differs by {err:e} at {p:?}");
    }
}

#[test]
fn assembled_blocks() {
    let p = Point::new(vec![0.7, 0.3, 1.5, -0.2]);
    let g = KundtMetric::minkowski(4).coordinate_metric_at(&p).unwrap();
    assert_eq!(
        g,
        DMatrix::from_row_slice(4, 4, &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.])
    );
    let wave = KundtMetric::flat_transverse(4, parse_expr("x3^2", 4).unwrap(), vec![Expr::zero(); 2]);
    assert_eq!(wave.coordinate_metric_at(&p).unwrap()[(0, 0)], 2.0 * 1.5 * 1.5);
    let tw = KundtMetric::flat_transverse(4, Expr::zero(), vec![Expr::zero(), parse_expr("x3", 4).unwrap()]);
    let g = tw.coordinate_metric_at(&p).unwrap();
    assert_eq!((g[(0, 3)], g[(3, 0)]), (1.5, 1.5));
    assert_eq!((g[(0, 1)], g[(1, 1)], g[(1, 2)]), (1.0, 0.0, 0.0));
}

#[test]
fn validation_examples() {
    let plan = SamplePlan::new(4, 50, 1);
    assert!(KundtMetric::minkowski(4).validate(&plan).passed());

    let bad = KundtMetric::flat_transverse(4, parse_expr("v*u", 4).unwrap(), vec![Expr::zero(); 2]);
    assert_eq!(bad.validate(&plan).first_failure().unwrap().name, "v_independence");

    let m = vec![
        vec![parse_expr("u - u", 4).unwrap(), Expr::zero()],
        vec![Expr::zero(), Expr::one()],
    ];
    let degenerate = KundtMetric::new(4, Expr::zero(), vec![Expr::zero(); 2], m).unwrap();
    let report = degenerate.validate(&plan);
    assert!(!report.check("diagonal_nonvanishing").unwrap().passed);
    assert!(!report.passed());
}

#[test]
fn coordinate_metric_inverts_for_catalog_metrics() {
    let mut metrics = vec![twisted()];
    for (k, id) in CASE_IDS.iter().enumerate() {
        let plan = SamplePlan::new(5, 10, 1);
        metrics.push(random_case(id, 5, k as u64 + 1, &plan).unwrap().metric);
    }
    for m in &metrics {
        for p in SamplePlan::new(5, 20, 2).points() {
            let g = m.coordinate_metric_at(&p).unwrap();
            let inv = g.clone().try_inverse().unwrap();
            let err = (g * inv - DMatrix::identity(5, 5)).abs().max();
            assert!(err <= 1e-12, "g g^-1 off by {err:e}");
        }
    }
}

#[test]
fn shift_of_v_is_a_chart_change() {
    let m = twisted();
    let h = ex("u^2*x3 + sin(x4)*x5");
    let shifted = m.transform_shift_v(&h);
    // v_old = v_new - h
    let phi = vec![Expr::u(), Expr::v() - &h, ex("x3"), ex("x4"), ex("x5")];
    let plan = SamplePlan::new(5, 30, 4);
    assert_pullback(&m, &shifted, &phi, &plan);
    let back = shifted.transform_shift_v(&-&h);
    assert!(back.max_field_difference(&m, &plan).unwrap() <= 1e-12);
}

#[test]
fn w3_is_removed_by_its_primitive() {
    let m = KundtMetric::flat_transverse(5, ex("x4"), vec![ex("u*x3 + x4"), ex("x3"), Expr::zero()]);
    let plan = SamplePlan::new(5, 30, 5);
    let out = m.eliminate_w3(&ex("u*x3^2/2 + x3*x4"), &plan).unwrap();
    assert!(out.w()[0].is_zero());
    assert!(out.validate(&plan).passed());
    assert!(m.eliminate_w3(&ex("u*x3^2"), &plan).is_err());
}

#[test]
fn affine_reparametrization_is_a_chart_change() {
    let m = twisted();
    let plan = SamplePlan::new(5, 30, 6);
    let out = m.transform_reparam_u(&ex("2*u + 1"), &plan).unwrap();
    // u_old = (u - 1)/2, v_old = 2 v
    let phi = vec![ex("(u - 1)/2"), ex("2*v"), ex("x3"), ex("x4"), ex("x5")];
    assert_pullback(&m, &out, &phi, &plan);
    // H is rescaled by 1/c1^2 after re-expressing u.
    for p in plan.points() {
        let old = m.h().eval(&p.with(0, (p[0] - 1.0) / 2.0)).unwrap();
        assert!((out.h().eval(&p).unwrap() - old / 4.0).abs() < 1e-14);
    }
    assert!(m.transform_reparam_u(&ex("u^2"), &plan).is_err());
    assert!(m.transform_reparam_u(&ex("3"), &plan).is_err());
}

#[test]
fn spatial_map_is_a_chart_change() {
    let m = twisted();
    let plan = SamplePlan::new(5, 30, 7);
    let phi_t = vec![ex("x3 + sin(u) + x4/3"), ex("1.5*x4 + u*x5/4"), ex("x5 + u^2")];
    let out = m.transform_spatial(&phi_t, &plan).unwrap();
    // The map reintroduces a nonzero W3; that gauge is the only thing validation objects to.
    let report = out.validate(&plan);
    let failing: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    assert_eq!(failing, ["w3_gauge"]);
    let mut phi = vec![Expr::u(), Expr::v()];
    phi.extend(phi_t);
    assert_pullback(&m, &out, &phi, &plan);

    let same = m.transform_spatial(&[ex("x3"), ex("x4"), ex("x5")], &plan).unwrap();
    let d = same.max_field_difference(&m, &plan).unwrap();
    assert!(d <= 1e-15, "{d:e}");
    assert!(m
        .transform_spatial(&[ex("x3"), ex("x4 + x3"), ex("x5")], &plan)
        .is_err());
    assert!(m
        .transform_spatial(&[ex("x3"), ex("x4 - x4"), ex("x5")], &plan)
        .is_err());
}

#[test]
fn qr_of_the_two_by_two_example() {
    let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
    let r = triangular_factor(&f).unwrap();
    // Gram-Schmidt on the columns (1,1), (1,0).
    let s = 2f64.sqrt();
    let want = DMatrix::from_row_slice(2, 2, &[s, 1.0 / s, 0.0, 1.0 / s]);
    assert!((&r - want).abs().max() < 1e-15);
    let g = r.transpose() * r;
    assert!((g - DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])).abs().max() < 1e-15);
}

#[test]
fn qr_keeps_triangular_input_and_factors_lower_input() {
    let plan = SamplePlan::new(4, 10, 8);
    let id = vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::one()]];
    assert!(matches!(qr_upper_triangularize(&id, &plan).unwrap(), TriangularFrame::Symbolic(ref m) if *m == id));

    let lower = vec![
        vec![parse_expr("1 + u", 4).unwrap(), Expr::zero()],
        vec![parse_expr("x3", 4).unwrap(), parse_expr("exp(x4)", 4).unwrap()],
    ];
    let TriangularFrame::Pointwise(rs) = qr_upper_triangularize(&lower, &plan).unwrap() else {
        panic!("lower input needs pointwise factors");
    };
    for (p, r) in rs {
        let f = DMatrix::from_fn(2, 2, |i, e| lower[i][e].eval(&p).unwrap());
        assert!(r[(1, 0)].abs() <= 1e-14);
        assert!((r.transpose() * &r - f.transpose() * f).abs().max() <= 1e-12);
    }

    let singular = vec![vec![Expr::u(), Expr::u()], vec![Expr::one(), Expr::one()]];
    assert!(qr_upper_triangularize(&singular, &plan).is_err());
}

proptest! {
    #[test]
    fn qr_factor_is_triangular_and_keeps_the_transverse_metric(
        entries in prop::collection::vec(-2.0f64..2.0, 16),
    ) {
        let mut f = DMatrix::from_row_slice(4, 4, &entries);
        f += DMatrix::identity(4, 4) * 5.0;
        let r = triangular_factor(&f).unwrap();
        for i in 0..4 {
            prop_assert!(r[(i, i)] > 0.0);
            for e in 0..i {
                prop_assert!(r[(i, e)].abs() <= 1e-14);
            }
        }
        let err = (r.transpose() * &r - f.transpose() * &f).abs().max();
        prop_assert!(err <= 1e-12, "{:e}", err);
    }

    #[test]
    fn shift_and_unshift_agree(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..100) {
        let m = twisted();
        let h = ex(&format!("{a}*u*x3^2 + {b}*sin(x4 + u) + x5*x3"));
        let plan = SamplePlan::new(5, 10, seed);
        let back = m.transform_shift_v(&h).transform_shift_v(&-&h);
        prop_assert!(back.max_field_difference(&m, &plan).unwrap() <= 1e-12);
    }
}
