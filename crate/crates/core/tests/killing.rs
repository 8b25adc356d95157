mod common;

use common::{corpus, ex};
use kundt::catalog::{build_case, random_case, CaseSpec};
use kundt::killing::{
    causal_character, classify, frame_bracket, killing_plan, killing_residuals, lie_derivative_of_metric,
    max_component_difference, rotate_frame_to_candidate, type_c_algebra, CausalVerdict, FrameVector, KillingCandidate,
    KillingError, KillingType,
};
use kundt::report::all_passed;
use kundt::{Expr, KundtMetric, SamplePlan};
use proptest::prelude::*;

fn cand(f1: &str, f2: &str, f3: &str, n: usize) -> KillingCandidate {
    KillingCandidate::new(ex(f1, n), ex(f2, n), ex(f3, n))
}

#[test]
fn ell_is_always_killing() {
    for s in corpus() {
        let n = s.metric.dimension();
        let plan = s.plan(50, 1).with_range(1, -5.0, 5.0);
        let ell = cand("0", "1", "0", n).assemble(&s.metric);
        assert!(killing_residuals(&s.metric, &ell, &plan).max() <= 1e-12, "{}", s.name);
        assert!(
            lie_derivative_of_metric(&s.metric, &ell, &plan).value <= 1e-12,
            "{}",
            s.name
        );
    }
}

#[test]
fn n_is_killing_in_flat_space_only() {
    let plan = killing_plan(5, 50, 2);
    let flat = KundtMetric::minkowski(5);
    let n = cand("1", "0", "0", 5);
    assert_eq!(killing_residuals(&flat, &n.assemble(&flat), &plan).max(), 0.0);
    let wave = KundtMetric::flat_transverse(5, ex("u*x3^2", 5), vec![Expr::zero(); 3]);
    assert!(!killing_residuals(&wave, &n.assemble(&wave), &plan).passed());
}

#[test]
fn residuals_and_the_chart_lie_derivative_agree() {
    let plan = killing_plan(5, 40, 3);
    let inst = build_case(&CaseSpec::new("2.26", 5), &plan).unwrap();
    let x = inst.candidate.assemble(&inst.metric);
    assert!(killing_residuals(&inst.metric, &x, &plan).max() <= 1e-9);
    assert!(lie_derivative_of_metric(&inst.metric, &x, &plan).value <= 1e-9);

    let wrong = cand("x3", "u", "1", 5).assemble(&inst.metric);
    let r = killing_residuals(&inst.metric, &wrong, &plan);
    assert!(!r.passed() && r.worst().unwrap().worst_point.is_some());
    assert!(lie_derivative_of_metric(&inst.metric, &wrong, &plan).value > 1e-3);
}

#[test]
fn rotation_along_m3_is_the_identity() {
    let m = common::generic();
    let plan = SamplePlan::new(5, 20, 4);
    let rot = rotate_frame_to_candidate(&m, &[ex("1 + x4^2", 5), Expr::zero(), Expr::zero()], &plan).unwrap();
    assert!(all_passed(&rot.checks));
    assert!(rot.qr_returns_original);
    let out = rot.metric.unwrap();
    assert!(out.max_field_difference(&m, &plan).unwrap() <= 1e-15);
}

#[test]
fn rotation_by_forty_five_degrees() {
    let m = KundtMetric::minkowski(5);
    let plan = SamplePlan::new(5, 20, 5);
    let h = Expr::constant(0.5f64.sqrt());
    let rot = rotate_frame_to_candidate(&m, &[h.clone(), h, Expr::zero()], &plan).unwrap();
    let p = &plan.points()[0];
    let r = |i: usize, j: usize| rot.rotation[i][j].eval(p).unwrap();
    let s = 0.5f64.sqrt();
    assert!((r(0, 0) - s).abs() < 1e-15 && (r(0, 1) - s).abs() < 1e-15);
    assert!((r(1, 0).abs() - s).abs() < 1e-15 && (r(1, 0) + r(1, 1)).abs() < 1e-15);
    assert!((r(2, 2) - 1.0).abs() < 1e-15);
    let passed: Vec<(&str, bool)> = rot.checks.iter().map(|c| (c.name.as_str(), c.passed)).collect();
    assert!(passed.contains(&("transverse_metric_preserved", true)));
    assert!(passed.contains(&("spatial_part_along_m3", true)));
    // The rotated frame has an entry below the diagonal; QR puts it back.
    assert!(rot.metric.is_none() && rot.qr_returns_original);
}

#[test]
fn rotation_needs_a_spatial_part() {
    let m = KundtMetric::minkowski(5);
    let err = rotate_frame_to_candidate(
        &m,
        &[Expr::zero(), Expr::zero(), Expr::zero()],
        &SamplePlan::new(5, 5, 1),
    );
    assert!(matches!(err, Err(KillingError::VanishingSpatialPart(_))));
}

#[test]
fn type_a_commutes_with_ell() {
    let plan = killing_plan(5, 30, 6);
    let inst = build_case(&CaseSpec::new("1.12", 5), &plan).unwrap();
    assert!(matches!(
        classify(&inst.candidate, &plan).unwrap(),
        KillingType::A { .. }
    ));
    let x = inst.candidate.assemble(&inst.metric);
    let b = frame_bracket(&inst.metric, &x, &FrameVector::ell(3), &plan);
    assert!(b.consistency.passed);
    assert!(max_component_difference(&b.bracket, &FrameVector::zero(3), &plan).value <= 1e-12);
}

#[test]
fn type_b_bracket_with_ell_is_plus_ell() {
    // Standard bracket: [u∂u - v∂v + …, ∂v] = ∂v. The sign-flipped value is what
    // the catalog prints; see the acceptance report.
    let plan = killing_plan(5, 30, 7);
    let inst = build_case(&CaseSpec::new("1.11", 5), &plan).unwrap();
    assert!(matches!(
        classify(&inst.candidate, &plan).unwrap(),
        KillingType::B { .. }
    ));
    let x = inst.candidate.assemble(&inst.metric);
    let b = frame_bracket(&inst.metric, &x, &FrameVector::ell(3), &plan);
    assert!(b.consistency.passed);
    assert!(max_component_difference(&b.bracket, &FrameVector::ell(3), &plan).value <= 1e-12);
}

#[test]
fn type_c_in_flat_space() {
    let m = KundtMetric::minkowski(5);
    let plan = killing_plan(5, 30, 8);
    let alg = type_c_algebra(&m, &cand("x3", "0", "0", 5), &plan).unwrap();
    let p = &plan.points()[0];
    let y = alg.y_c.eval(p).unwrap();
    assert_eq!(alg.y_c.metric_norm().eval(p).unwrap(), 1.0);
    assert!(
        alg.y_c.x2.is_zero() && alg.y_c.x1.is_zero() && alg.y_c.xs[0].is_one(),
        "{y:?}"
    );

    let alg = type_c_algebra(&m, &cand("u + x3", "0", "0", 5), &plan).unwrap();
    assert!(alg.y_c.x2.is_one() && alg.y_c.xs[0].is_one());
    assert_eq!(alg.z_c.x1.eval(p).unwrap(), -1.0);
    for c in &alg.checks {
        // [ℓ, X_C] carries the opposite sign to the printed Y_C.
        assert_eq!(c.passed, c.name != "ell_X_C_matches_Y_C", "{c:?}");
    }
    assert!(
        alg.sign_flipped
            .iter()
            .find(|c| c.name == "X_C_ell_matches_Y_C")
            .unwrap()
            .passed
    );

    assert!(matches!(
        type_c_algebra(&m, &cand("u", "0", "0", 5), &plan),
        Err(KillingError::NotTypeC(_))
    ));
}

#[test]
fn causal_character_examples() {
    let m = KundtMetric::minkowski(5);
    let plan = SamplePlan::new(5, 30, 9);
    let v = |c: KillingCandidate| causal_character(&m, &c, &plan).unwrap().verdict;
    assert_eq!(v(cand("1", "1", "0", 5)), CausalVerdict::TimelikeForAllV);
    assert_eq!(
        v(cand("1", "(1 + x4^2)^2/2", "1 + x4^2", 5)),
        CausalVerdict::NullForAllV
    );
    assert_eq!(v(cand("u", "0", "0", 5)), CausalVerdict::SpacelikeSomewhere);
    assert_eq!(v(cand("x3", "0", "1", 5)), CausalVerdict::SpacelikeSomewhere);
    // The quadratic is X3² - 2 X1 X2; g(X, X) carries +2 X1 X2. They agree when X1 = 0.
    let r = causal_character(&m, &cand("0", "x4", "sin(u)", 5), &plan).unwrap();
    assert!(r.metric_norm_difference <= 1e-12);
    let r = causal_character(&m, &cand("1", "1", "0", 5), &plan).unwrap();
    assert!(
        (r.metric_norm_difference - 4.0).abs() <= 1e-12,
        "{}",
        r.metric_norm_difference
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn type_c_algebra_closes_on_random_draws(seed in 0u64..10_000) {
        let plan = killing_plan(5, 40, seed);
        let inst = random_case("2.26", 5, seed, &plan).unwrap();
        let alg = type_c_algebra(&inst.metric, &inst.candidate, &plan).unwrap();
        for c in &alg.checks {
            if c.name != "ell_X_C_matches_Y_C" {
                prop_assert!(c.passed, "{:?}", c);
            }
        }
        let x = inst.candidate.assemble(&inst.metric);
        for y in [&alg.y_c, &alg.z_c] {
            let b = frame_bracket(&inst.metric, &x, y, &plan);
            prop_assert!(killing_residuals(&inst.metric, &b.bracket, &plan).max() <= 1e-9);
        }
    }

    #[test]
    fn type_b_and_c_are_never_causal(seed in 0u64..10_000, k in 0usize..6) {
        let id = ["1.11", "1.21", "2.21", "2.23", "2.26", "1.21a"][k];
        let plan = killing_plan(5, 40, seed);
        let inst = random_case(id, 5, seed, &plan).unwrap();
        let kind = classify(&inst.candidate, &plan).unwrap();
        prop_assert!(kind.tag() != "A");
        let c = causal_character(&inst.metric, &inst.candidate, &plan).unwrap();
        prop_assert_eq!(c.verdict, CausalVerdict::SpacelikeSomewhere);
    }
}
