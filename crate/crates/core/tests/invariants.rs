mod common;

use common::{corpus, ex, hyperbolic, sphere, Sample};
use kundt::catalog::{random_case, CASE_IDS};
use kundt::invariants::{compute_invariants, csi_verdict, InvariantError, Verdict, INVARIANT_NAMES};
use kundt::{Expr, KundtMetric, SamplePlan};

const REL: f64 = 1e-9;
const ABS: f64 = 1e-12;

fn verdict(m: &KundtMetric, plan: &SamplePlan) -> kundt::invariants::CsiVerdict {
    csi_verdict(&compute_invariants(m, plan).unwrap(), REL, ABS).unwrap()
}

fn value(v: &kundt::invariants::CsiVerdict, name: &str) -> (f64, f64) {
    let s = v.spreads.iter().find(|s| s.name == name).unwrap();
    (s.min, s.max)
}

fn conformal(n: usize, factor: &str) -> KundtMetric {
    let t = n - 2;
    let m = (0..t)
        .map(|i| {
            (0..t)
                .map(|e| if i == e { ex(factor, n) } else { Expr::zero() })
                .collect()
        })
        .collect();
    KundtMetric::new(n, ex("x3*u", n), vec![Expr::zero(); t], m).unwrap()
}

#[test]
fn minkowski_is_vsi() {
    let v = verdict(&KundtMetric::minkowski(4), &SamplePlan::new(4, 20, 1));
    assert_eq!(v.verdict, Verdict::VsiConsistent);
    assert!(v.spreads.iter().all(|s| s.max_abs == 0.0));
}

#[test]
fn flat_transverse_is_vsi_whatever_h_and_w() {
    let m = KundtMetric::flat_transverse(
        5,
        ex("sin(u)*x3^2*x4 + exp(x5)", 5),
        vec![Expr::zero(), ex("u*x3^3", 5), ex("x4*x3", 5)],
    );
    let v = verdict(&m, &SamplePlan::new(5, 30, 2));
    assert_eq!(v.verdict, Verdict::VsiConsistent);
    assert!(v.spreads.iter().all(|s| s.max_abs <= ABS));
}

#[test]
fn unit_sphere_values() {
    let plan = SamplePlan::new(4, 30, 3).with_x_range(0.3, 2.5);
    let v = verdict(&sphere("u*x3^2 + x4", "x3*u"), &plan);
    assert_eq!(v.verdict, Verdict::CsiConsistent);
    for (name, want) in [
        ("R", 2.0),
        ("r2", 2.0),
        ("K", 4.0),
        ("R3", 2.0),
        ("dR2", 0.0),
        ("dRiem2", 0.0),
    ] {
        let (lo, hi) = value(&v, name);
        assert!(
            (lo - want).abs() <= 1e-9 * want.max(1e-3) && (hi - want).abs() <= 1e-9 * want.max(1e-3),
            "{name}: {lo} {hi}"
        );
    }
}

#[test]
fn hyperbolic_space_is_csi_not_vsi() {
    // Three-dimensional, curvature -1: R = -6, R_ab R^ab = 12, K = 12, R3 = -24.
    let v = verdict(&hyperbolic("x4*sin(u) + x5^2"), &SamplePlan::new(5, 30, 4));
    assert_eq!(v.verdict, Verdict::CsiConsistent);
    for (name, want) in [("R", -6.0), ("r2", 12.0), ("K", 12.0), ("R3", -24.0)] {
        let (lo, hi) = value(&v, name);
        assert!(
            (lo - want).abs() <= 1e-9 * want.abs() && (hi - want).abs() <= 1e-9 * want.abs(),
            "{name}: {lo} {hi}"
        );
    }
}

#[test]
fn inhomogeneous_transverse_space_is_not_csi() {
    let v = verdict(&conformal(4, "1 + x3^2"), &SamplePlan::new(4, 30, 5));
    assert_eq!(v.verdict, Verdict::NonCsi);
    let (lo, hi) = value(&v, "R");
    assert!(hi - lo > 1e-3);

    // Stretching x3 alone is only a reparametrization of a flat plane.
    let m = vec![vec![ex("1 + x3^2", 4), Expr::zero()], vec![Expr::zero(), Expr::one()]];
    let stretched = KundtMetric::new(4, Expr::zero(), vec![Expr::zero(); 2], m).unwrap();
    assert_eq!(
        verdict(&stretched, &SamplePlan::new(4, 30, 5)).verdict,
        Verdict::VsiConsistent
    );
}

#[test]
fn verdict_needs_ten_points() {
    let set = compute_invariants(&KundtMetric::minkowski(4), &SamplePlan::new(4, 9, 1)).unwrap();
    assert_eq!(
        csi_verdict(&set, REL, ABS).unwrap_err(),
        InvariantError::TooFewPoints(9)
    );
}

#[test]
fn invariants_only_see_the_transverse_metric() {
    let mut samples = corpus();
    samples.push(Sample {
        name: "conformal",
        metric: conformal(5, "1 + x3^2 + x4^2/2"),
        x_range: (-1.0, 1.0),
    });
    for s in &samples {
        let v = verdict(&s.metric, &s.plan(20, 6));
        assert!(v.transverse_equivalent, "{}: {:e}", s.name, v.transverse_difference);
    }

    let plan = SamplePlan::new(4, 20, 7).with_x_range(0.3, 2.5);
    let a = compute_invariants(&sphere("0", "0"), &plan).unwrap();
    let b = compute_invariants(&sphere("exp(u)*x3*x4^2", "u^2*x3"), &plan).unwrap();
    for (x, y) in a.full.iter().zip(&b.full) {
        for (p, q) in x.as_array().into_iter().zip(y.as_array()) {
            assert!((p - q).abs() <= 1e-9 * p.abs().max(q.abs()).max(1e-12));
        }
    }
}

#[test]
fn vanishing_ricci_square_forces_every_invariant_to_vanish() {
    let mut metrics: Vec<(String, KundtMetric, SamplePlan)> = corpus()
        .into_iter()
        .map(|s| {
            let plan = s.plan(20, 8);
            (s.name.to_string(), s.metric, plan)
        })
        .collect();
    for (k, id) in CASE_IDS.iter().enumerate() {
        let plan = SamplePlan::new(5, 20, 9);
        metrics.push((
            id.to_string(),
            random_case(id, 5, k as u64 + 10, &plan).unwrap().metric,
            plan,
        ));
    }
    let mut vanishing = 0;
    for (name, m, plan) in &metrics {
        let set = compute_invariants(m, plan).unwrap();
        let r2 = INVARIANT_NAMES.iter().position(|n| *n == "r2").unwrap();
        if set.series(r2).iter().all(|x| x.abs() <= ABS) {
            vanishing += 1;
            for (k, inv) in INVARIANT_NAMES.iter().enumerate() {
                assert!(set.series(k).iter().all(|x| x.abs() <= ABS), "{name}: {inv} nonzero");
            }
        }
    }
    assert!(vanishing >= 3);
}
