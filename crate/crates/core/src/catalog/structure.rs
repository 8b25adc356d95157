//! Structural checks on the transverse frame and the null worked example.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{eval_at, CaseInstance, CatalogError};
use crate::expr::jet::JetSpace;
use crate::expr::{Coord, Expr};
use crate::frame::FrameJets;
use crate::killing::{
    causal_character, killing_plan, killing_residuals, CausalReport, FrameVector, KillingCandidate, KillingResiduals,
};
use crate::metric::{identity_frame, KundtMetric};
use crate::report::{all_passed, Check, Worst};
use crate::sample::SamplePlan;

const GAMMA_TOL: f64 = 1e-11;

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    /// The deciding checks; `passed` is their conjunction.
    pub definitive: Vec<Check>,
    /// Intermediate coordinate relations.
    pub lemma: Vec<Check>,
    /// The normal form, or printed variants of the relations.
    pub form: Vec<Check>,
    pub passed: bool,
}

fn max_abs_over(exprs: &[Expr], plan: &SamplePlan) -> Result<Worst, CatalogError> {
    let mut worst = Worst::new();
    for p in plan.points() {
        for e in exprs {
            worst.observe(eval_at(e, &p)?.abs(), &p);
        }
    }
    Ok(worst)
}

fn xc(k: usize) -> Coord {
    Coord::x(k + 3)
}

/// Whether the connection satisfies `Γ_3ia = 0`, with the coordinate
/// relations that lead there and the normal form of the frame.
pub fn check_case2_structure(metric: &KundtMetric, plan: &SamplePlan) -> Result<StructureReport, CatalogError> {
    let t = metric.transverse_dim();
    let m = metric.frame();
    let w = metric.w();
    let g = metric.transverse_metric();
    let x3 = xc(0);
    let mut anti_w = Vec::new();
    let mut m33r = Vec::new();
    let mut m3rs = Vec::new();
    let mut grs3 = Vec::new();
    let mut m3r = Vec::new();
    let mut m33_r = Vec::new();
    let mut mnr3 = Vec::new();
    for r in 1..t {
        let lhs = 0.5 * (w[0].diff(xc(r)) - w[r].diff(x3));
        let rhs = m[0][r].diff(Coord::U) * &m[0][0] - m[0][0].diff(Coord::U) * &m[0][r];
        anti_w.push(lhs - rhs);
        m33r.push(m[0][0].diff(xc(r)) - m[0][r].diff(x3));
        m3r.push(m[0][r].clone());
        m33_r.push(m[0][0].diff(xc(r)));
        for s in 1..t {
            m3rs.push(m[0][r].diff(xc(s)) - m[0][s].diff(xc(r)));
            grs3.push(g[r][s].diff(x3));
            if s >= r {
                mnr3.push(m[r][s].diff(x3));
            }
        }
    }
    let lemma = vec![
        Check::bounded("W[3,r] = m3r,u m33 - m33,u m3r", &max_abs_over(&anti_w, plan)?, 1e-9),
        Check::bounded("m3[3,r] = 0", &max_abs_over(&m33r, plan)?, 1e-9),
        Check::bounded("m3[r,s] = 0", &max_abs_over(&m3rs, plan)?, 1e-9),
        Check::bounded("g_rs,3 = 0", &max_abs_over(&grs3, plan)?, 1e-9),
    ];
    let form = vec![
        Check::bounded("m3r = 0", &max_abs_over(&m3r, plan)?, 1e-12),
        Check::bounded("m33,r = 0", &max_abs_over(&m33_r, plan)?, 1e-12),
        Check::bounded("m_nr,3 = 0", &max_abs_over(&mnr3, plan)?, 1e-12),
    ];
    let space = JetSpace::new(metric.dimension(), 1);
    let (mut g2, mut gi) = (Worst::new(), Worst::new());
    for p in plan.points() {
        let fj = FrameJets::build(metric, &space, &p)?;
        for nn in 1..t {
            g2.observe(fj.gamma(2, nn + 2, 1).value().abs(), &p);
            for i in 0..t {
                gi.observe(fj.gamma(2, nn + 2, i + 2).value().abs(), &p);
            }
        }
    }
    let definitive = vec![
        Check::bounded("Gamma_3n2 = 0", &g2, GAMMA_TOL),
        Check::bounded("Gamma_3ni = 0", &gi, GAMMA_TOL),
    ];
    let passed = all_passed(&definitive);
    Ok(StructureReport {
        definitive,
        lemma,
        form,
        passed,
    })
}

/// Constraints on a u-independent transverse frame needed when `F₃ ≠ 0` in
/// the CSI rows. `form` holds the commutator relation with the catalog
/// coefficients; `definitive` uses `[D_n, D_m] = Σ_p (Γ_pmn - Γ_pnm) D_p` on
/// v- and u-independent functions.
pub fn check_csi_case_constraints(metric: &KundtMetric, plan: &SamplePlan) -> Result<StructureReport, CatalogError> {
    let t = metric.transverse_dim();
    let m = metric.frame();
    let static_frame = m.iter().flatten().all(|e| !e.depends_on(Coord::U));
    let mut mnr3 = Vec::new();
    let mut m3r3 = Vec::new();
    let mut gef4 = Vec::new();
    for r in 1..t {
        m3r3.push(m[0][r].diff(xc(0)));
        gef4.push(m[0][0].diff(xc(0)) * &m[0][r] - m[0][0].powi(2).diff(xc(r)));
        for s in r..t {
            mnr3.push(m[r][s].diff(xc(0)));
        }
    }
    let space = JetSpace::new(metric.dimension(), 2);
    let (mut w1, mut w2, mut w3, mut w3t) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
    for p in plan.points() {
        let fj = FrameJets::build(metric, &space, &p)?;
        let g3 = |nn: usize| fj.gamma(2, nn + 2, 2).clone();
        for nn in 1..t {
            w1.observe(fj.frame_derivative(2, &g3(nn)).value().abs(), &p);
            let mut s = 0.0;
            for mm in 1..t {
                let anti = 0.5 * (fj.gamma(mm + 2, 2, nn + 2).value() - fj.gamma(mm + 2, nn + 2, 2).value());
                s += anti * g3(mm).value();
            }
            w2.observe(s.abs(), &p);
            for mm in 1..t {
                let lhs = fj.frame_derivative(nn + 2, &g3(mm)).value() - fj.frame_derivative(mm + 2, &g3(nn)).value();
                let (mut derived, mut table) = (0.0, 0.0);
                for q in 0..t {
                    let gpmn = fj.gamma(q + 2, mm + 2, nn + 2).value();
                    let gpnm = fj.gamma(q + 2, nn + 2, mm + 2).value();
                    let g3p3 = fj.gamma(2, q + 2, 2).value();
                    derived += (gpmn - gpnm) * g3p3;
                    table += 0.5 * (gpnm - gpmn) * g3p3;
                }
                w3.observe((lhs - derived).abs(), &p);
                w3t.observe((lhs - table).abs(), &p);
            }
        }
    }
    let twist_free = max_abs_over(&m3r3, plan)?.value <= 1e-12;
    let definitive = vec![
        Check::structural("transverse frame u-independent", static_frame, ""),
        Check::bounded("m_nr,3 = 0", &max_abs_over(&mnr3, plan)?, 1e-9),
        Check::bounded("D3 Gamma_3n3 = 0", &w1, 1e-8),
        Check::bounded("Gamma^m_[3n] Gamma_3m3 = 0", &w2, 1e-9),
        Check::bounded(
            "Dn Gamma_3m3 - Dm Gamma_3n3 = (Gamma_pmn - Gamma_pnm) Gamma_3p3",
            &w3,
            1e-8,
        ),
    ];
    let mut form = vec![Check::bounded(
        "Gamma^p_[nm] Gamma_3p3 = Dn Gamma_3m3 - Dm Gamma_3n3 (catalog coefficients)",
        &w3t,
        1e-8,
    )];
    if twist_free {
        form.push(Check::bounded(
            "m33,3 m3r = (m33^2),r",
            &max_abs_over(&gef4, plan)?,
            1e-9,
        ));
    }
    let passed = all_passed(&definitive);
    Ok(StructureReport {
        definitive,
        lemma: Vec::new(),
        form,
        passed,
    })
}

#[derive(Clone, Debug)]
pub struct WorkedExample {
    pub instance: CaseInstance,
    pub x_residuals: KillingResiduals,
    /// `Y = n + m³`.
    pub y: KillingCandidate,
    pub y_residuals: KillingResiduals,
    /// `|Y|² - 1` from the metric, pointwise.
    pub y_norm: Check,
    pub x_causal: CausalReport,
    pub y_causal: CausalReport,
}

impl WorkedExample {
    pub fn passed(&self) -> bool {
        self.x_residuals.passed() && self.y_residuals.passed() && self.y_norm.passed
    }
}

/// Flat transverse space, `H(u, x^r)` and `Ŵ_r = w_r + g(x3 - u)` where each
/// `w_r` solves `Ŵ_r,3 + Ŵ_r,u = H,r`. `g` is written in `x3`.
pub fn build_worked_example(
    n: usize,
    h: &Expr,
    w: &[Expr],
    g: &Expr,
    plan: &SamplePlan,
) -> Result<WorkedExample, CatalogError> {
    if n < 4 {
        return Err(CatalogError::Dimension {
            case: "worked example".into(),
            min: 4,
            got: n,
        });
    }
    let t = n - 2;
    for c in [Coord::V, xc(0)] {
        if h.depends_on(c) {
            return Err(CatalogError::Dependence {
                name: "H".into(),
                coord: if c == Coord::V { "v".into() } else { "x3".into() },
            });
        }
    }
    if (0..n).map(Coord).any(|c| c != xc(0) && g.depends_on(c)) {
        return Err(CatalogError::Restriction {
            name: "g".into(),
            detail: "a function of one variable, written in x3".into(),
        });
    }
    if w.len() != t - 1 {
        return Err(CatalogError::Restriction {
            name: "W".into(),
            detail: format!("expected {} components W4..W{n}", t - 1),
        });
    }
    let shifted = g.substitute(xc(0), &(Expr::x(3) - Expr::u()));
    let mut wh = vec![Expr::zero()];
    wh.extend(w.iter().map(|wr| wr + &shifted));
    let mut worst = Worst::new();
    for r in 1..t {
        let rel = wh[r].diff(xc(0)) + wh[r].diff(Coord::U) - h.diff(xc(r));
        for p in plan.points() {
            let v = eval_at(&rel, &p)?.abs();
            worst.observe(v, &p);
            if v > 1e-9 {
                return Err(CatalogError::Restriction {
                    name: format!("W{}", r + 3),
                    detail: format!("violates W_r,3 + W_r,u = H,r by {v:e} at {:?}", p.coords()),
                });
            }
        }
    }
    let metric = KundtMetric::new(n, h.clone(), wh, identity_frame(t))?;
    metric.ensure_valid(plan)?;
    let candidate = KillingCandidate::with_constants(0.0, 1.0, Expr::constant(0.5), Expr::one());
    let y = KillingCandidate::with_constants(0.0, 1.0, Expr::zero(), Expr::one());
    let kplan = killing_plan(n, plan.count, plan.seed);
    let x_residuals = killing_residuals(&metric, &candidate.assemble(&metric), &kplan);
    let yv: FrameVector = y.assemble(&metric);
    let y_residuals = killing_residuals(&metric, &yv, &kplan);
    let norm = yv.metric_norm() - 1.0;
    let y_norm = Check::bounded("|Y|^2 = 1", &max_abs_over(&[norm], &kplan)?, 1e-12);
    let x_causal = causal_character(&metric, &candidate, &kplan).map_err(|e| CatalogError::Restriction {
        name: "X".into(),
        detail: e.to_string(),
    })?;
    let y_causal = causal_character(&metric, &y, &kplan).map_err(|e| CatalogError::Restriction {
        name: "Y".into(),
        detail: e.to_string(),
    })?;
    let mut bindings = BTreeMap::new();
    bindings.insert("H".to_string(), h.clone());
    bindings.insert("g".to_string(), g.clone());
    for (r, wr) in w.iter().enumerate() {
        bindings.insert(format!("w{}", r + 4), wr.clone());
    }
    let instance = CaseInstance {
        id: "worked-example".into(),
        metric,
        candidate,
        bindings,
        provenance: vec![
            "null isometry with flat transverse space: X = n + l/2 + m3, Y = n + m3".into(),
            "W_r = w_r + g(x3 - u) with W_r,3 + W_r,u = H,r along the characteristics".into(),
        ],
        relations: vec![Check::bounded("W_r,3 + W_r,u = H,r", &worst, 1e-9)],
        table_relations: Vec::new(),
    };
    Ok(WorkedExample {
        instance,
        x_residuals,
        y,
        y_residuals,
        y_norm,
        x_causal,
        y_causal,
    })
}
