use kundt::expr::jet::JetSpace;
use kundt::expr::DomainKind;
use kundt::{parse_expr, Coord, Expr, ParseError, Point, SamplePlan};
use proptest::prelude::*;

fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec())
}

#[test]
fn evaluates_simple_sources() {
    let e = parse_expr("2*u + x3^2", 4).unwrap();
    assert_eq!(e.eval(&pt(&[1.0, 0.0, 2.0, 0.0])).unwrap(), 6.0);
    assert!(parse_expr("sin(u)*exp(x4)", 4).is_ok());
    assert_eq!(parse_expr("exp(0)", 4).unwrap().eval(&pt(&[0.0; 4])).unwrap(), 1.0);
    assert_eq!(
        parse_expr("sqrt(x3)", 4)
            .unwrap()
            .eval(&pt(&[0.0, 0.0, 4.0, 0.0]))
            .unwrap(),
        2.0
    );
}

#[test]
fn trailing_plus_is_a_syntax_error_at_its_end() {
    match parse_expr("x3 +", 4) {
        Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn identifiers_outside_the_chart_are_rejected() {
    assert!(matches!(
        parse_expr("x5", 4),
        Err(ParseError::CoordinateOutOfRange { .. })
    ));
    assert!(matches!(
        parse_expr("x2", 4),
        Err(ParseError::CoordinateOutOfRange { .. })
    ));
    assert!(matches!(
        parse_expr("tan(u)", 4),
        Err(ParseError::UnknownIdentifier { .. })
    ));
    assert!(matches!(
        parse_expr("ln(u)", 4),
        Err(ParseError::UnknownIdentifier { .. })
    ));
    assert!(parse_expr("x3^1.5", 4).is_err());
    // v parses; the metric layer is what refuses it.
    assert!(parse_expr("v*u", 4).unwrap().depends_on(Coord::V));
}

#[test]
fn derivative_examples() {
    let d = parse_expr("x3^2", 4).unwrap().diff(Coord::x(3));
    assert_eq!(d.eval(&pt(&[0.0, 0.0, 3.0, 0.0])).unwrap(), 6.0);
    assert!(parse_expr("x3^2", 4).unwrap().diff(Coord::x(4)).is_zero());
    assert!(Expr::constant(5.0).diff(Coord::U).is_zero());
    let d = parse_expr("sin(u)*x3", 4).unwrap().diff(Coord::U);
    let want = parse_expr("cos(u)*x3", 4).unwrap();
    for p in SamplePlan::new(4, 20, 3).points() {
        assert!((d.eval(&p).unwrap() - want.eval(&p).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn domain_errors() {
    let e = parse_expr("1/(u - 1)", 4).unwrap();
    let err = e.eval(&pt(&[1.0, 0.0, 0.0, 0.0])).unwrap_err();
    assert_eq!(err.kind, DomainKind::DivisionByZero);
    let err = parse_expr("x3 + log(u)", 4)
        .unwrap()
        .eval(&pt(&[-1.0, 0.0, 0.0, 0.0]))
        .unwrap_err();
    assert_eq!(err.kind, DomainKind::LogNonPositive);
    assert!(err.subexpr.contains("log"));
    let err = parse_expr("sqrt(x4)", 4)
        .unwrap()
        .eval(&pt(&[0.0, 0.0, 0.0, -2.0]))
        .unwrap_err();
    assert_eq!(err.kind, DomainKind::SqrtNegative);
}

#[test]
fn sampling_is_seeded_and_bounded() {
    let plan = SamplePlan::new(5, 3, 7);
    assert_eq!(plan.points(), plan.points());
    assert_eq!(plan.points().len(), 3);
    assert!(SamplePlan::new(5, 0, 7).points().is_empty());
    let plan = SamplePlan::new(6, 200, 11).with_range(1, -5.0, 5.0);
    let pts = plan.points();
    assert!(pts.iter().all(|p| (0.5..=2.0).contains(&p[0])));
    assert!(pts.iter().any(|p| p[1] < 0.0));
    assert!(pts.iter().all(|p| p.dimension() == 6));
}

// Random sources drawn from the grammar, kept smooth on u in [0.5, 2] and
// |x| <= 1 so that the derivative comparisons are well conditioned.
fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        (1u32..9).prop_map(|k| format!("{}", k as f64 / 4.0)),
        Just("u".to_string()),
        Just("x3".to_string()),
        Just("x4".to_string()),
        Just("x5".to_string()),
    ]
}

fn source() -> impl Strategy<Value = String> {
    atom().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}/(2 + ({b})^2)")),
            (inner.clone(), 0i32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp({a}/4)")),
            inner.clone().prop_map(|a| format!("log(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("sqrt(2 + sin({a}))")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

fn coord() -> impl Strategy<Value = Coord> {
    prop_oneof![Just(Coord::U), Just(Coord::x(3)), Just(Coord::x(4)), Just(Coord::x(5))]
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_form_reparses_to_the_same_tree(src in source()) {
        let e = parse_expr(&src, 5).unwrap();
        let again = parse_expr(&e.to_string(), 5).unwrap();
        prop_assert_eq!(&again, &e, "printed as {}", e);
    }

    #[test]
    fn mixed_partials_commute(src in source(), a in coord(), b in coord(), seed in 0u64..1000) {
        let e = parse_expr(&src, 5).unwrap();
        let ab = e.diff(a).diff(b);
        let ba = e.diff(b).diff(a);
        for p in SamplePlan::new(5, 5, seed).points() {
            let (x, y) = (ab.eval(&p).unwrap(), ba.eval(&p).unwrap());
            prop_assert!(close(x, y, 1e-12, 1e-12), "{} vs {} at {:?}", x, y, p);
        }
    }

    #[test]
    fn derivative_matches_central_difference(src in source(), c in coord(), seed in 0u64..1000) {
        let e = parse_expr(&src, 5).unwrap();
        let d = e.diff(c);
        let h = 1e-6;
        for p in SamplePlan::new(5, 5, seed).points() {
            let k = c.index();
            let fd = (e.eval(&p.with(k, p[k] + h)).unwrap() - e.eval(&p.with(k, p[k] - h)).unwrap()) / (2.0 * h);
            let exact = d.eval(&p).unwrap();
            // Central differences carry ~1e-10 absolute rounding noise at this step.
            prop_assert!(close(exact, fd, 1e-6, 1e-8), "{} vs {} for d/d{} of {}", exact, fd, c, e);
        }
    }

    #[test]
    fn jets_agree_with_symbolic_derivatives(src in source(), seed in 0u64..1000) {
        let e = parse_expr(&src, 5).unwrap();
        let space = JetSpace::new(5, 2);
        for p in SamplePlan::new(5, 3, seed).points() {
            let jet = e.eval_jet(&space, &p).unwrap();
            prop_assert!(close(jet.value(), e.eval(&p).unwrap(), 1e-13, 1e-13));
            for a in [Coord::U, Coord::x(3), Coord::x(5)] {
                let j1 = jet.diff(a.index());
                prop_assert!(close(j1.value(), e.diff(a).eval(&p).unwrap(), 1e-11, 1e-11));
                for b in [Coord::U, Coord::x(4)] {
                    let want = e.diff(a).diff(b).eval(&p).unwrap();
                    prop_assert!(close(j1.diff(b.index()).value(), want, 1e-10, 1e-10));
                }
            }
        }
    }
}
