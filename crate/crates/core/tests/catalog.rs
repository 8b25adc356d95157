mod common;

use common::ex;
use kundt::catalog::{
    binding_names, build_case, build_worked_example, check_case2_structure, check_csi_case_constraints, random_case,
    CaseSpec, CatalogError, CASE_IDS,
};
use kundt::frame::build_connection;
use kundt::invariants::{compute_invariants, csi_verdict, Verdict};
use kundt::killing::{causal_character, killing_plan, killing_residuals, CausalVerdict};
use kundt::{Expr, KundtMetric, SamplePlan};

fn residual(inst: &kundt::catalog::CaseInstance, plan: &SamplePlan) -> f64 {
    killing_residuals(&inst.metric, &inst.candidate.assemble(&inst.metric), plan).max()
}

#[test]
fn every_row_is_killing_for_random_draws() {
    for id in CASE_IDS {
        for seed in 0..5u64 {
            let plan = killing_plan(5, 100, 100 + seed);
            let inst = random_case(id, 5, seed, &plan).unwrap_or_else(|e| panic!("{id}/{seed}: {e}"));
            assert!(inst.relations_passed(), "{id}/{seed}: {:?}", inst.relations);
            let r = residual(&inst, &plan);
            assert!(r <= 1e-9, "{id}/{seed}: residual {r:e}");
            assert!(inst.metric.validate(&plan).passed(), "{id}/{seed}");
        }
    }
}

#[test]
fn default_rows_build_in_four_and_six_dimensions() {
    for n in [4, 6] {
        for id in CASE_IDS {
            let plan = killing_plan(n, 40, 11);
            match build_case(&CaseSpec::new(id, n), &plan) {
                Ok(inst) => assert!(residual(&inst, &plan) <= 1e-9, "{id} N={n}"),
                // Case-2 rows split off x3 and need another transverse direction.
                Err(CatalogError::Dimension { min, .. }) => assert!(min > n, "{id} N={n}"),
                Err(e) => panic!("{id} N={n}: {e}"),
            }
        }
    }
}

#[test]
fn row_1_12_with_explicit_functions() {
    let n = 5;
    let plan = killing_plan(n, 100, 12);
    let spec = CaseSpec::new("1.12", n)
        .bind("F2", ex("x3^2", n))
        .bind("A0", ex("sin(u)", n))
        .bind("Q", ex("-cos(u)", n));
    let inst = build_case(&spec, &plan).unwrap();
    assert!(inst.relations_passed());
    assert!(residual(&inst, &plan) <= 1e-9);
    for p in plan.points() {
        let want = p[2] * p[2] + p[0].sin();
        assert!((inst.metric.h().eval(&p).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn row_1_11_profile() {
    let n = 5;
    let plan = killing_plan(n, 100, 13);
    let spec = CaseSpec::new("1.11", n)
        .bind("f2", ex("x3", n))
        .bind("g2", ex("u^2", n));
    let inst = build_case(&spec, &plan).unwrap();
    assert!(residual(&inst, &plan) <= 1e-9);
    // H = f2/u² - g2'/u + g2/u²
    for p in plan.points() {
        let want = p[2] / (p[0] * p[0]) - 1.0;
        assert!((inst.metric.h().eval(&p).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn case_two_rows_carry_the_transport_relations() {
    let plan = killing_plan(5, 60, 14);
    for id in ["2.21", "2.22", "2.23", "2.24", "2.25", "2.1"] {
        let inst = build_case(&CaseSpec::new(id, 5), &plan).unwrap();
        let names: Vec<&str> = inst.relations.iter().map(|c| c.name.as_str()).collect();
        for want in ["Gamma_3n2 = 0", "Gamma_3ni = 0"] {
            assert!(names.contains(&want), "{id}: {names:?}");
        }
        assert!(inst.relations_passed(), "{id}");
        assert!(check_case2_structure(&inst.metric, &plan).unwrap().passed, "{id}");
    }
    let inst = build_case(&CaseSpec::new("2.21", 5), &plan).unwrap();
    assert!(inst.relations.iter().any(|c| c.name == "D3Wn = 0" && c.passed));
}

#[test]
fn case_two_structure_detects_a_twisted_frame() {
    let n = 5;
    let plan = SamplePlan::new(n, 40, 15);
    let m = vec![
        vec![Expr::one(), ex("x3", n), Expr::zero()],
        vec![Expr::zero(), Expr::one(), Expr::zero()],
        vec![Expr::zero(), Expr::zero(), Expr::one()],
    ];
    let metric = KundtMetric::new(n, Expr::zero(), vec![Expr::zero(); 3], m).unwrap();
    let r = check_case2_structure(&metric, &plan).unwrap();
    assert!(!r.passed);
    assert!(r.definitive.iter().any(|c| c.name == "Gamma_3ni = 0" && !c.passed));

    let flat = check_case2_structure(&KundtMetric::minkowski(n), &plan).unwrap();
    assert!(flat.passed && flat.form.iter().all(|c| c.passed));
}

#[test]
fn csi_constraints() {
    let n = 5;
    let plan = SamplePlan::new(n, 40, 16);
    let diag = |a: &str, b: &str, c: &str| {
        vec![
            vec![ex(a, n), Expr::zero(), Expr::zero()],
            vec![Expr::zero(), ex(b, n), Expr::zero()],
            vec![Expr::zero(), Expr::zero(), ex(c, n)],
        ]
    };
    assert!(
        check_csi_case_constraints(&KundtMetric::minkowski(n), &plan)
            .unwrap()
            .passed
    );

    let product = KundtMetric::new(n, Expr::zero(), vec![Expr::zero(); 3], diag("1", "exp(x5)", "1")).unwrap();
    let r = check_csi_case_constraints(&product, &plan).unwrap();
    assert!(r.passed && r.form.iter().all(|c| c.passed), "{r:?}");

    let tilted = KundtMetric::new(n, Expr::zero(), vec![Expr::zero(); 3], diag("1 + x4", "1", "1")).unwrap();
    let r = check_csi_case_constraints(&tilted, &plan.clone().with_x_range(0.0, 1.0)).unwrap();
    assert!(
        r.form.iter().any(|c| c.name == "m33,3 m3r = (m33^2),r" && !c.passed),
        "{r:?}"
    );

    let moving = KundtMetric::new(n, Expr::zero(), vec![Expr::zero(); 3], diag("1 + u", "1", "1")).unwrap();
    assert!(!check_csi_case_constraints(&moving, &plan).unwrap().passed);
}

#[test]
fn causal_character_of_the_rows() {
    let plan = SamplePlan::new(5, 60, 17);
    for id in ["N1.1", "N1.2", "N2.1", "N2.2"] {
        let inst = build_case(&CaseSpec::new(id, 5), &plan).unwrap();
        let r = causal_character(&inst.metric, &inst.candidate, &plan).unwrap();
        assert_eq!(r.verdict, CausalVerdict::NullForAllV, "{id}");
    }
    let timelike = [
        CaseSpec::new("1.12", 5).bind("F2", ex("1 + x3^2", 5)),
        CaseSpec::new("1.22", 5).bind("phi", ex("3 + x3^2", 5)),
        CaseSpec::new("2.22", 5),
        CaseSpec::new("2.24", 5),
        CaseSpec::new("1.22b", 5),
    ];
    for spec in &timelike {
        let inst = build_case(spec, &plan).unwrap();
        let r = causal_character(&inst.metric, &inst.candidate, &plan).unwrap();
        assert_eq!(r.verdict, CausalVerdict::TimelikeForAllV, "{}", spec.id);
    }
    for id in ["1.11", "1.21", "1.23", "2.26"] {
        let inst = build_case(&CaseSpec::new(id, 5), &plan).unwrap();
        let r = causal_character(&inst.metric, &inst.candidate, &plan).unwrap();
        assert_eq!(r.verdict, CausalVerdict::SpacelikeSomewhere, "{id}");
    }
}

#[test]
fn static_frame_rows_have_no_b() {
    let plan = SamplePlan::new(5, 30, 18);
    for id in ["1.11", "1.12", "2.21", "2.22", "N1.1", "N2.1"] {
        let inst = build_case(&CaseSpec::new(id, 5), &plan).unwrap();
        for p in plan.points() {
            let c = build_connection(&inst.metric, &p).unwrap();
            let worst = c.b.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(worst <= 1e-12, "{id}: B = {worst:e}");
        }
    }
}

#[test]
fn homogeneous_rows_are_csi() {
    let plan = SamplePlan::new(5, 30, 19);
    for id in ["1.21a", "1.21b", "1.22a", "1.22b", "1.23a", "1.23b"] {
        let inst = build_case(&CaseSpec::new(id, 5), &plan).unwrap();
        let v = csi_verdict(&compute_invariants(&inst.metric, &plan).unwrap(), 1e-9, 1e-12).unwrap();
        assert_ne!(v.verdict, Verdict::NonCsi, "{id}: {:?}", v.spreads);
    }
}

#[test]
fn worked_null_example() {
    let n = 5;
    let plan = SamplePlan::new(n, 60, 20);
    let w = [ex("x3", n), Expr::zero()];
    let e = build_worked_example(n, &ex("x4", n), &w, &Expr::zero(), &plan).unwrap();
    assert!(e.passed(), "{:?} {:?}", e.x_residuals.worst(), e.y_norm);
    assert_eq!(e.x_causal.verdict, CausalVerdict::NullForAllV);

    let e = build_worked_example(
        n,
        &Expr::zero(),
        &[Expr::zero(), Expr::zero()],
        &ex("sin(x3)", n),
        &plan,
    )
    .unwrap();
    assert!(e.passed());

    let flat = build_worked_example(n, &Expr::zero(), &[Expr::zero(), Expr::zero()], &Expr::zero(), &plan).unwrap();
    assert!(flat.passed());

    // W4,3 + W4,u must equal H,4.
    assert!(build_worked_example(n, &ex("x4", n), &[Expr::zero(), Expr::zero()], &Expr::zero(), &plan).is_err());
    assert!(build_worked_example(n, &ex("x3", n), &[ex("x3", n), Expr::zero()], &Expr::zero(), &plan).is_err());
}

#[test]
fn alias_and_errors() {
    let plan = killing_plan(5, 20, 21);
    assert_eq!(build_case(&CaseSpec::new("2.27", 5), &plan).unwrap().id, "2.26");
    assert!(matches!(
        build_case(&CaseSpec::new("3.1", 5), &plan),
        Err(CatalogError::UnknownCase(_))
    ));
    let err = build_case(&CaseSpec::new("1.12", 5).bind("nope", Expr::one()), &plan).unwrap_err();
    assert!(matches!(err, CatalogError::UnknownBinding { .. }), "{err}");
    let names = binding_names("1.12", 5).unwrap();
    assert!(
        ["F2", "Q", "A0", "C4", "C5"]
            .iter()
            .all(|k| names.iter().any(|n| n == k)),
        "{names:?}"
    );
    let err = build_case(
        &CaseSpec::new("1.12", 5)
            .bind("Q", ex("u", 5))
            .bind("A0", ex("sin(u)", 5)),
        &plan,
    )
    .unwrap_err();
    assert!(matches!(err, CatalogError::Primitive { .. }), "{err}");
    let err = build_case(&CaseSpec::new("1.12", 5).bind("F2", ex("u*x3", 5)), &plan).unwrap_err();
    assert!(matches!(err, CatalogError::Dependence { .. }), "{err}");
}
