//! The constructors, grouped by the form of `X₁`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::structure::{check_case2_structure, check_csi_case_constraints};
use super::{eval_at, min_abs, vanishes, verify_identity, Binder, CatalogError, Draw, Vars};
use crate::expr::jet::JetSpace;
use crate::expr::{parse_expr, Coord, Expr};
use crate::frame::{FrameJets, FrameOperators};
use crate::killing::KillingCandidate;
use crate::metric::{compose_spatial, KundtMetric};
use crate::report::{Check, Worst};
use crate::sample::SamplePlan;

pub(super) struct Built {
    pub metric: KundtMetric,
    pub candidate: KillingCandidate,
    pub provenance: Vec<String>,
    pub relations: Vec<Check>,
    pub table_relations: Vec<Check>,
}

/// How much freedom the transverse frame has.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Transverse {
    /// Whatever the family's Killing vector leaves free.
    General,
    /// u-independent and locally homogeneous by default.
    Homogeneous,
    /// `m₃₃ = M,₃`, `m₃r = 0`, `m_nr(x^r)`.
    Split,
    /// As `Split` but `m_nr(u, x^r)`.
    SplitMoving,
}

/// What the final spatial map may do to `m₃r,₃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Twist {
    Any,
    Required,
    Forbidden,
    /// `Φ(x3)` only.
    Straight,
    /// No spatial map.
    Identity,
}

struct Parts {
    h: Expr,
    /// Coordinate `Ŵ_e`, `e = 3..=N`.
    w: Vec<Expr>,
    m: Vec<Vec<Expr>>,
    candidate: KillingCandidate,
}

pub(super) fn build_family(b: &mut Binder<'_>, plan: &SamplePlan) -> Result<Built, CatalogError> {
    use Transverse::*;
    use Twist::*;
    match b.id {
        "1.11" => zero_f3_linear(b, plan, false),
        "2.21" => zero_f3_linear(b, plan, true),
        "1.12" => zero_f3_const(b, plan, false, false),
        "2.22" => zero_f3_const(b, plan, true, false),
        "N1.1" => zero_f3_const(b, plan, false, true),
        "N2.1" => zero_f3_const(b, plan, true, true),
        "1.21" => type_b(b, plan, General, Any),
        "1.21a" => type_b(b, plan, Homogeneous, Required),
        "1.21b" => type_b(b, plan, Homogeneous, Forbidden),
        "2.23" => type_b(b, plan, Split, Straight),
        "1.22" => type_a(b, plan, General, Any, false),
        "1.22a" => type_a(b, plan, Homogeneous, Required, false),
        "1.22b" => type_a(b, plan, Homogeneous, Forbidden, false),
        "2.24" => type_a(b, plan, Split, Straight, false),
        "N1.2" => type_a(b, plan, General, Any, true),
        "N2.2" => type_a(b, plan, Split, Straight, true),
        "1.23" => type_zero(b, plan, General, Required),
        "1.24" => type_zero(b, plan, General, Forbidden),
        "1.23a" => type_zero(b, plan, Homogeneous, Required),
        "1.23b" => type_zero(b, plan, Homogeneous, Forbidden),
        "2.1" => type_zero(b, plan, SplitMoving, Straight),
        "2.25" => type_zero(b, plan, Split, Straight),
        "2.26" => type_c(b, plan),
        other => Err(CatalogError::UnknownCase(other.to_string())),
    }
}

fn px(src: &str, n: usize) -> Expr {
    parse_expr(src, n).expect("built-in default parses")
}

fn u() -> Expr {
    Expr::u()
}

fn x(e: usize) -> Expr {
    Expr::x(e)
}

fn frame_name(i: usize, e: usize) -> String {
    if i < 10 && e < 10 {
        format!("m{i}{e}")
    } else {
        format!("m{i}_{e}")
    }
}

/// One template entry: allowed variables and fixed default; `None` means the
/// entry is forced to zero and not bindable.
type EntryRule<'r> = dyn Fn(usize, usize) -> Option<(Vars, Expr)> + 'r;

/// Read the upper-triangular frame template entry by entry (0-based `i ≤ e`).
/// Random draws are positive on the diagonal and free off it.
fn frame_template(b: &mut Binder<'_>, rule: &EntryRule<'_>) -> Result<Vec<Vec<Expr>>, CatalogError> {
    let t = b.n - 2;
    let mut m = vec![vec![Expr::zero(); t]; t];
    for i in 0..t {
        for e in i..t {
            let Some((vars, fixed)) = rule(i, e) else {
                continue;
            };
            let d = if i == e {
                b.pick(fixed, Draw::Positive, vars)
            } else {
                let d = b.pick(fixed, Draw::Free, vars);
                if b.is_random() {
                    0.5 * d
                } else {
                    d
                }
            };
            m[i][e] = b.take(&frame_name(i + 3, e + 3), vars, d)?;
        }
    }
    Ok(m)
}

/// Locally homogeneous transverse frames: `H²(x3, x4)` with curvature
/// `-λ²` for twisted rows, `R × H²(x4, x5)` otherwise.
fn homogeneous_rule(n: usize, lambda: f64, twisted: bool) -> impl Fn(usize, usize) -> Option<(Vars, Expr)> {
    move |i, e| {
        let fixed = if i != e {
            Expr::zero()
        } else if (twisted && i == 0) || (!twisted && i == 2 && n >= 5) {
            (lambda * x(4)).exp()
        } else {
            Expr::one()
        };
        Some((Vars::XR, fixed))
    }
}

fn ramp(rng: &mut ChaCha8Rng, log: bool) -> Expr {
    let c: f64 = rng.gen_range(0.6..1.3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let lead = if log { c * u().ln() } else { c * u() };
    lead + 0.1 * (rng.gen_range(0.3..1.0) * u() + rng.gen_range(-1.0..1.0)).sin()
}

/// `m₃₃ = c·exp(αx3 + βx4)` with its `x3`-primitive of `m₃₃²`.
fn m33_with_primitive(rng: &mut ChaCha8Rng, with_xr: bool) -> (Expr, Expr) {
    let c = rng.gen_range(0.8..1.3);
    let alpha = rng.gen_range(0.15..0.4) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let beta = if with_xr { rng.gen_range(-0.3..0.3) } else { 0.0 };
    let arg = alpha * x(3) + beta * x(4);
    let m33 = c * arg.exp();
    let g = (c * c / (2.0 * alpha)) * (2.0 * arg).exp();
    (m33, g)
}

fn monotone_map(rng: &mut ChaCha8Rng, twist: Twist) -> Expr {
    let base = x(3) + rng.gen_range(-0.2..0.2) * (rng.gen_range(0.5..1.2) * x(3)).sin();
    match twist {
        Twist::Required => base + rng.gen_range(0.1..0.2) * x(3) * x(4),
        Twist::Forbidden | Twist::Any => base + rng.gen_range(-0.3..0.3) * x(4) * x(4),
        Twist::Straight => base + rng.gen_range(0.0..0.08) * x(3).powi(3),
        Twist::Identity => x(3),
    }
}

/// Shared tail: `Φ` pullback, metric assembly, structural relations.
#[allow(clippy::too_many_arguments)]
fn finish(
    b: &mut Binder<'_>,
    plan: &SamplePlan,
    parts: Parts,
    twist: Twist,
    mut provenance: Vec<String>,
    mut relations: Vec<Check>,
    mut table_relations: Vec<Check>,
    f3_nonzero: bool,
) -> Result<Built, CatalogError> {
    let n = b.n;
    let fixed = match twist {
        Twist::Required => px("x3 + 0.2*x3*x4", n),
        Twist::Forbidden => px("x3 + 0.1*x3^3 + 0.2*x4^2", n),
        Twist::Any | Twist::Straight => px("x3 + 0.1*x3^3", n),
        Twist::Identity => x(3),
    };
    let phi = if twist == Twist::Identity {
        fixed
    } else {
        let phi_vars = if twist == Twist::Straight { Vars::X3 } else { Vars::XE };
        let d = b.pick_with(fixed, |rng| monotone_map(rng, twist));
        b.take("Phi", phi_vars, d)?
    };
    if min_signed(&phi.diff(Coord::x(3)), plan)? <= 0.0 {
        return Err(CatalogError::Restriction {
            name: "Phi".into(),
            detail: "∂Φ/∂x3 must stay positive on the samples".into(),
        });
    }
    let mut w = parts.w;
    w[0] = Expr::zero();
    let adapted = KundtMetric::new(n, parts.h, w, parts.m)?;
    let identity = phi == x(3);
    let (metric, candidate) = if identity {
        (adapted, parts.candidate)
    } else {
        let mut map = vec![phi.clone()];
        map.extend((4..=n).map(x));
        let metric = adapted.transform_spatial(&map, plan)?;
        let c = &parts.candidate;
        let cand = KillingCandidate::new(
            compose_spatial(&c.f1, &map, n),
            compose_spatial(&c.f2, &map, n),
            compose_spatial(&c.f3, &map, n),
        );
        provenance.push(format!("pulled back along x3 -> {phi}"));
        (metric, cand)
    };
    metric.ensure_valid(plan)?;

    let twist_size = {
        let mut worst = 0.0f64;
        for r in 1..metric.transverse_dim() {
            let d = metric.frame()[0][r].diff(Coord::x(3));
            for p in plan.points() {
                worst = worst.max(eval_at(&d, &p)?.abs());
            }
        }
        worst
    };
    match twist {
        Twist::Required if twist_size <= 1e-8 => {
            return Err(CatalogError::Restriction {
                name: "Phi".into(),
                detail: "this row needs m3r,3 ≠ 0 somewhere; choose Φ with ∂²Φ/∂x3∂x^r ≠ 0".into(),
            })
        }
        Twist::Forbidden | Twist::Straight if twist_size > 1e-10 => {
            return Err(CatalogError::Restriction {
                name: "Phi".into(),
                detail: format!("this row needs m3r,3 = 0, found {twist_size:e}"),
            })
        }
        _ => {}
    }
    if twist != Twist::Identity {
        relations.push(Check {
            name: "m3r,3 max abs".into(),
            passed: true,
            max_value: twist_size,
            tolerance: 0.0,
            worst_point: None,
            detail: match twist {
                Twist::Required => "row requires nonzero".into(),
                Twist::Any => String::new(),
                _ => "row requires zero".into(),
            },
        });
    }
    candidate.check_dependence().map_err(|e| CatalogError::Restriction {
        name: "candidate".into(),
        detail: e.to_string(),
    })?;
    if f3_nonzero {
        let m = min_abs(&candidate.f3, plan)?;
        if m <= 1e-8 {
            return Err(CatalogError::Restriction {
                name: "F3".into(),
                detail: "this row needs F3 ≠ 0 on the samples".into(),
            });
        }
        relations.push(Check {
            name: "min |F3|".into(),
            passed: true,
            max_value: m,
            tolerance: 0.0,
            worst_point: None,
            detail: String::new(),
        });
    }
    if metric.frame().iter().flatten().all(|e| !e.depends_on(Coord::U)) {
        relations.push(b_vanishes(&metric, plan)?);
    }
    if b.id.starts_with('2') || b.id == "N2.1" || b.id == "N2.2" {
        let ops = FrameOperators::new(&metric);
        let wf = frame_w(&metric);
        let mut worst = Worst::new();
        for (i, wi) in wf.iter().enumerate().skip(1) {
            let d3 = ops.apply(3, wi);
            for p in plan.points() {
                worst.observe(eval_at(&d3, &p)?.abs(), &p);
            }
            let _ = i;
        }
        relations.push(Check::bounded("D3Wn = 0", &worst, 1e-9));
        let s = check_case2_structure(&metric, plan)?;
        relations.extend(s.definitive);
        table_relations.extend(s.lemma);
        table_relations.extend(s.form);
    }
    if b.id.ends_with('a') || b.id.ends_with('b') {
        let s = check_csi_case_constraints(&metric, plan)?;
        table_relations.extend(s.definitive);
        table_relations.extend(s.lemma);
        table_relations.extend(s.form);
    }
    Ok(Built {
        metric,
        candidate,
        provenance,
        relations,
        table_relations,
    })
}

fn min_signed(e: &Expr, plan: &SamplePlan) -> Result<f64, CatalogError> {
    let mut m = f64::INFINITY;
    for p in plan.points() {
        m = m.min(eval_at(e, &p)?);
    }
    Ok(m)
}

/// `B_ij = 0` pointwise, expected whenever the frame is u-independent.
fn b_vanishes(metric: &KundtMetric, plan: &SamplePlan) -> Result<Check, CatalogError> {
    let space = JetSpace::new(metric.dimension(), 1);
    let mut worst = Worst::new();
    for p in plan.points() {
        let fj = FrameJets::build(metric, &space, &p)?;
        for row in &fj.b {
            for v in row {
                worst.observe(v.value().abs(), &p);
            }
        }
    }
    Ok(Check::bounded("B_ij = 0", &worst, 1e-12))
}

/// Frame components `W_i = Σ_e E_ie Ŵ_e`.
fn frame_w(metric: &KundtMetric) -> Vec<Expr> {
    let ops = FrameOperators::new(metric);
    let e = ops.inverse_frame();
    (0..metric.transverse_dim())
        .map(|i| (0..=i).map(|c| &e[i][c] * &metric.w()[c]).sum())
        .collect()
}

/// Coordinate `Ŵ_c = Σ_i m_ic W_i` from frame components.
fn coordinate_w(m: &[Vec<Expr>], wf: &[Expr]) -> Vec<Expr> {
    let t = m.len();
    (0..t).map(|c| (0..=c).map(|i| &m[i][c] * &wf[i]).sum()).collect()
}

/// Residual of a frame-form relation `lhs_n = rhs_n` for every `n ≥ 4`.
fn frame_relation(
    name: &str,
    metric: &KundtMetric,
    plan: &SamplePlan,
    tol: f64,
    residual: &dyn Fn(&FrameOperators, &[Expr], usize) -> Expr,
) -> Result<Check, CatalogError> {
    let ops = FrameOperators::new(metric);
    let wf = frame_w(metric);
    let mut worst = Worst::new();
    for i in 1..metric.transverse_dim() {
        let r = residual(&ops, &wf, i);
        for p in plan.points() {
            worst.observe(eval_at(&r, &p)?.abs(), &p);
        }
    }
    Ok(Check::bounded(name, &worst, tol))
}

fn require_positive_u(plan: &SamplePlan) -> Result<(), CatalogError> {
    if plan.points().iter().any(|p| p[0] <= 0.0) {
        return Err(CatalogError::Domain("rows with X1 = u need samples with u > 0".into()));
    }
    Ok(())
}

/// `X₁ = u`, `F₃ = 0`: rows 1.11 and 2.21.
fn zero_f3_linear(b: &mut Binder<'_>, plan: &SamplePlan, split: bool) -> Result<Built, CatalogError> {
    require_positive_u(plan)?;
    let n = b.n;
    let t = n - 2;
    let rule = move |i: usize, e: usize| -> Option<(Vars, Expr)> {
        if split {
            match (i, e) {
                (0, 0) => Some((Vars::X3, px("1 + 0.2*x3^2", n))),
                (0, _) => None,
                _ if i == e => Some((Vars::XR, px("1 + 0.1*x4^2", n))),
                _ => Some((Vars::XR, Expr::zero())),
            }
        } else if i == e {
            Some((Vars::XE, px("1 + 0.1*x3*x4 + 0.2*x4^2", n)))
        } else if (i, e) == (0, 1) {
            Some((Vars::XE, px("0.3*x3", n)))
        } else {
            Some((Vars::XE, Expr::zero()))
        }
    };
    let m = frame_template(b, &rule)?;
    let f2 = b.free("f2", Vars::XE, px("x3 + 0.5*x4^2", n))?;
    let g2 = b.free("g2", Vars::U, px("u^2", n))?;
    let bvars = if split { Vars::XR } else { Vars::XE };
    let mut wf = vec![Expr::zero(); t];
    for (k, slot) in wf.iter_mut().enumerate().skip(1) {
        let fixed = if split {
            0.5 * x(4)
        } else {
            0.5 * x(3) * x(4) + 0.1 * x(k + 3)
        };
        let bn = b.free(&format!("B{}", k + 3), bvars, fixed)?;
        *slot = bn / u();
    }
    let h = &f2 / u().powi(2) - g2.diff(Coord::U) / u() + &g2 / u().powi(2);
    let f2_total = (&f2 + &g2) / u();
    let w = coordinate_w(&m, &wf);
    let parts = Parts {
        h,
        w,
        m,
        candidate: KillingCandidate::with_constants(1.0, 0.0, f2_total, Expr::zero()),
    };
    let provenance = vec![
        format!("case {}: X1 = u, F3 = 0, m u-independent", b.id),
        "F2 = (f2(x^e) + g2(u))/u, H = f2/u^2 - g2'/u + g2/u^2, W_n = B_n/u".into(),
    ];
    let relations = vec![Check::structural("W3 = 0", true, "gauge")];
    finish(
        b,
        plan,
        parts,
        Twist::Identity,
        provenance,
        relations,
        Vec::new(),
        false,
    )
}

/// `X₁ = 1`, `F₃ = 0`: rows 1.12, 2.22 and the null rows N1.1, N2.1.
fn zero_f3_const(b: &mut Binder<'_>, plan: &SamplePlan, split: bool, null: bool) -> Result<Built, CatalogError> {
    let n = b.n;
    let t = n - 2;
    let rule = move |i: usize, e: usize| -> Option<(Vars, Expr)> {
        if split {
            match (i, e) {
                (0, 0) => Some((Vars::X3, px("1 + 0.2*x3^2", n))),
                (0, _) => None,
                _ if i == e => Some((Vars::XR, px("exp(0.3*x4)", n))),
                _ => Some((Vars::XR, Expr::zero())),
            }
        } else if i == e {
            Some((Vars::XE, px("1 + 0.1*x3^2", n)))
        } else if (i, e) == (0, 1) {
            Some((Vars::XE, px("0.2*x3*x4", n)))
        } else {
            Some((Vars::XE, Expr::zero()))
        }
    };
    let m = frame_template(b, &rule)?;
    let f2 = if null {
        Expr::zero()
    } else {
        b.free("F2", Vars::XE, px("x3^2", n))?
    };
    let (qname, aname) = if null { ("Q", "A2") } else { ("Q", "A0") };
    let q = b.free(qname, Vars::U_XR, px("-cos(u) + 0.3*u^2*x4", n))?;
    let a0 = b.take(aname, Vars::U_XR, q.diff(Coord::U))?;
    let mut relations = vec![verify_identity(
        qname,
        &format!("dQ/du = {aname}"),
        &q.diff(Coord::U),
        &a0,
        plan,
    )?];
    let h = &f2 + &a0;
    // W_n = D_n Q + C_n: the u-primitive of D_n A0 since m is u-independent.
    let shell = KundtMetric::new(n, h.clone(), vec![Expr::zero(); t], m.clone())?;
    let ops = FrameOperators::new(&shell);
    let cvars = if split { Vars::XR } else { Vars::XE };
    let mut wf = vec![Expr::zero(); t];
    for (k, slot) in wf.iter_mut().enumerate().skip(1) {
        let fixed = if split {
            0.3 * x(4)
        } else {
            0.3 * x(3) + 0.1 * x(k + 3).powi(2)
        };
        let cname = if null {
            format!("A7_{}", k + 3)
        } else {
            format!("C{}", k + 3)
        };
        let c = b.free(&cname, cvars, fixed)?;
        *slot = ops.apply(k + 3, &q) + c;
    }
    let w = coordinate_w(&m, &wf);
    let candidate = KillingCandidate::with_constants(0.0, 1.0, f2, Expr::zero());
    let mut provenance = vec![format!(
        "case {}{}: X1 = 1, F3 = 0, F2 u-independent, m u-independent",
        b.id,
        if null { " (null isometry)" } else { "" }
    )];
    provenance.push(format!(
        "H = F2 + {aname}(u, x^r), W_n = D_n Q + {} with dQ/du = {aname}",
        if null { "A7_n" } else { "C_n" }
    ));
    let mut table = Vec::new();
    let metric = KundtMetric::new(
        n,
        h,
        {
            let mut w = w.clone();
            w[0] = Expr::zero();
            w
        },
        m.clone(),
    )?;
    // D2 W_n = D_n A: the transport of W along n with F3 = 0.
    let a0c = a0.clone();
    let transport = frame_relation("D2Wn = Dn(H - F2)", &metric, plan, 1e-9, &|ops, wf, i| {
        ops.apply(2, &wf[i]) - ops.apply(i + 3, &a0c)
    })?;
    if null && split {
        let a0c = a0.clone();
        table.push(frame_relation(
            "D2Wn = -DnA2 (catalog sign)",
            &metric,
            plan,
            1e-9,
            &|ops, wf, i| ops.apply(2, &wf[i]) + ops.apply(i + 3, &a0c),
        )?);
    }
    relations.push(transport);
    let parts = Parts {
        h: metric.h().clone(),
        w,
        m,
        candidate,
    };
    finish(b, plan, parts, Twist::Identity, provenance, relations, table, false)
}

fn adapted_template(
    b: &mut Binder<'_>,
    plan: &SamplePlan,
    shape: Transverse,
    twist: Twist,
    relations: &mut Vec<Check>,
) -> Result<(Vec<Vec<Expr>>, Expr), CatalogError> {
    let n = b.n;
    let lambda = b.pick_with(Expr::one(), |rng| {
        Expr::constant(rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
    });
    let lambda = lambda.as_const().unwrap_or(1.0);
    let (m33_fixed, g_fixed) = match shape {
        Transverse::General => (px("exp(0.2*x3 + 0.1*x4)", n), px("exp(0.4*x3 + 0.2*x4)/0.4", n)),
        Transverse::Split | Transverse::SplitMoving => (px("exp(0.2*x3)", n), px("exp(0.4*x3)/0.4", n)),
        Transverse::Homogeneous => {
            let m = if twist == Twist::Required {
                (lambda * x(4)).exp()
            } else {
                Expr::one()
            };
            let g = m.powi(2) * x(3);
            (m, g)
        }
    };
    let (m33_d, g_d) = match shape {
        Transverse::Homogeneous => (m33_fixed.clone(), g_fixed.clone()),
        _ => {
            if b.is_random() {
                b.pick_pair(shape == Transverse::General)
            } else {
                (m33_fixed.clone(), g_fixed.clone())
            }
        }
    };
    let homog = homogeneous_rule(n, lambda, twist == Twist::Required);
    let rule = move |i: usize, e: usize| -> Option<(Vars, Expr)> {
        match shape {
            Transverse::Homogeneous => homog(i, e),
            Transverse::General => {
                if (i, e) == (0, 0) {
                    Some((Vars::XE, m33_d.clone()))
                } else if i == e {
                    Some((Vars::XE, px("1 + 0.1*x3^2 + 0.1*x4^2", n)))
                } else if (i, e) == (0, 1) {
                    Some((Vars::XE, px("0.2*x3*x4", n)))
                } else {
                    Some((Vars::XE, Expr::zero()))
                }
            }
            Transverse::Split | Transverse::SplitMoving => match (i, e) {
                (0, 0) => Some((Vars::X3, m33_d.clone())),
                (0, _) => None,
                _ if i == e => Some((Vars::XR, px("1 + 0.2*x4^2", n))),
                _ => Some((Vars::XR, Expr::zero())),
            },
        }
    };
    let m = frame_template_with_m33(b, &rule, shape)?;
    let m33 = m[0][0].clone();
    let gvars = if shape == Transverse::General || shape == Transverse::Homogeneous {
        Vars::XE
    } else {
        Vars::X3
    };
    let g_default = if !m33.depends_on(Coord::x(3)) {
        m33.powi(2) * x(3)
    } else {
        g_d
    };
    let g = b.take("G33", gvars, g_default)?;
    relations.push(verify_identity(
        "G33",
        "dG33/dx3 = m33^2",
        &g.diff(Coord::x(3)),
        &m33.powi(2),
        plan,
    )?);
    Ok((m, g))
}

/// Like [`frame_template`] but the `m₃₃` default is taken as given (it was
/// drawn together with its primitive).
fn frame_template_with_m33(
    b: &mut Binder<'_>,
    rule: &EntryRule<'_>,
    shape: Transverse,
) -> Result<Vec<Vec<Expr>>, CatalogError> {
    let t = b.n - 2;
    let mut m = vec![vec![Expr::zero(); t]; t];
    for i in 0..t {
        for e in i..t {
            let Some((vars, fixed)) = rule(i, e) else {
                continue;
            };
            let d = if (i, e) == (0, 0) || shape == Transverse::Homogeneous {
                fixed
            } else if i == e {
                b.pick(fixed, Draw::Positive, vars)
            } else {
                let d = b.pick(fixed, Draw::Free, vars);
                if b.is_random() {
                    0.3 * d
                } else {
                    d
                }
            };
            m[i][e] = b.take(&frame_name(i + 3, e + 3), vars, d)?;
        }
    }
    Ok(m)
}

impl Binder<'_> {
    fn pick_pair(&mut self, with_xr: bool) -> (Expr, Expr) {
        let mut out = (Expr::one(), x(3));
        let _ = self.pick_with(Expr::zero(), |rng| {
            out = m33_with_primitive(rng, with_xr);
            Expr::zero()
        });
        out
    }
}

fn substitute_x3(m: &[Vec<Expr>], s: &Expr) -> Vec<Vec<Expr>> {
    m.iter()
        .map(|row| row.iter().map(|e| e.substitute(Coord::x(3), s)).collect())
        .collect()
}

/// `X₁ = 1`, `F₃ = κ m₃₃`, fields constant along `∂_u + κ∂₃`.
fn type_a(
    b: &mut Binder<'_>,
    plan: &SamplePlan,
    shape: Transverse,
    twist: Twist,
    null: bool,
) -> Result<Built, CatalogError> {
    let n = b.n;
    let t = n - 2;
    let mut relations = Vec::new();
    let (big_k, kappa) = if null {
        let d = b.pick(Expr::constant(0.8), Draw::NonzeroConst, Vars::NONE);
        let kappa = b.take("kappa", Vars::NONE, d)?;
        let big_k = b.take("K", Vars::U, &kappa * u())?;
        (big_k, kappa)
    } else {
        let d = b.pick_with(px("u + 0.2*sin(u)", n), |rng| ramp(rng, false));
        let big_k = b.take("K", Vars::U, d)?;
        let kappa = b.take("kappa", Vars::U, big_k.diff(Coord::U))?;
        (big_k, kappa)
    };
    relations.push(verify_identity(
        "K",
        "dK/du = kappa",
        &big_k.diff(Coord::U),
        &kappa,
        plan,
    )?);
    if min_abs(&kappa, plan)? <= 1e-6 {
        return Err(CatalogError::Restriction {
            name: "kappa".into(),
            detail: "must not vanish on the samples".into(),
        });
    }
    let (template, g33t) = adapted_template(b, plan, shape, twist, &mut relations)?;
    let s = x(3) - &big_k;
    let m = substitute_x3(&template, &s);
    let g_big = g33t.substitute(Coord::x(3), &s);
    let m33 = m[0][0].clone();
    let g33 = m33.powi(2);
    let kp = kappa.diff(Coord::U);
    let xs_vars = if matches!(shape, Transverse::Split | Transverse::SplitMoving) {
        Vars::XR
    } else {
        Vars::XE
    };
    let phi = if null {
        &kappa * &kappa * g33t.diff(Coord::x(3)).substitute(Coord::x(3), &s)
    } else {
        let f = b.free("phi", Vars::XE, px("2 + 0.5*x3^2 + 0.3*x4", n))?;
        f.substitute(Coord::x(3), &s)
    };
    let q = b.free("Q", Vars::U_XR, px("0.5*u^2*x4 - cos(u)", n))?;
    let a2 = b.take("A2", Vars::U_XR, q.diff(Coord::U))?;
    relations.push(verify_identity("Q", "dQ/du = A2", &q.diff(Coord::U), &a2, plan)?);
    let f3 = &kappa * &m33;
    let f2 = &phi - 0.5 * &kappa * &kappa * &g33;
    let h = &f2 + &kp * &g_big + &a2;
    let mut w = vec![Expr::zero(); t];
    for (c, slot) in w.iter_mut().enumerate().skip(1) {
        let xr = Coord::x(c + 3);
        let fixed = if xs_vars == Vars::XR {
            0.2 * x(4).powi(2)
        } else {
            0.3 * x(3) * x(4)
        };
        let psi = b.free(&format!("psi{}", c + 3), xs_vars, fixed)?;
        let g3r = &m33 * &m[0][c];
        *slot = &kappa * (g_big.diff(xr) - g3r) + q.diff(xr) + psi.substitute(Coord::x(3), &s);
    }
    let family = if null {
        " (null isometry)"
    } else if shape == Transverse::Homogeneous {
        " (CSI)"
    } else {
        ""
    };
    let mut provenance = vec![
        format!("case {}{family}: X1 = 1, F3 = kappa(u) m33 ≠ 0", b.id),
        "adapted variable s = x3 - K(u), dK/du = kappa; transverse frame a function of (s, x^r)".into(),
        "F2 = phi(s, x^r) - kappa^2 m33^2/2, H = F2 + kappa' G33 + A2, W_r = kappa(dG33/dx^r - g3r) + dQ/dx^r + psi_r(s, x^r)"
            .into(),
    ];
    if null {
        provenance.push("null row: kappa constant and phi = kappa^2 m33^2, so F2 = F3^2/2 and H = F3^2/2 + A2".into());
    }
    let parts = Parts {
        h,
        w,
        m,
        candidate: KillingCandidate::with_constants(0.0, 1.0, f2, f3),
    };
    let mut built = finish(b, plan, parts, twist, provenance, relations, Vec::new(), true)?;
    let metric = built.metric.clone();
    let cand = built.candidate.clone();
    let (f2c, f3c) = (cand.f2.clone(), cand.f3.clone());
    let h = metric.h().clone();
    let derived = frame_relation("D2Wn + F3 D3Wn = Dn(H - F2)", &metric, plan, 1e-8, &|ops, wf, i| {
        ops.apply(2, &wf[i]) + &f3c * ops.apply(3, &wf[i]) - ops.apply(i + 3, &(&h - &f2c))
    })?;
    let h = metric.h().clone();
    let printed = frame_relation(
        "D2Wn + F3 D3Wn = DnH (catalog form)",
        &metric,
        plan,
        1e-8,
        &|ops, wf, i| ops.apply(2, &wf[i]) + &f3c * ops.apply(3, &wf[i]) - ops.apply(i + 3, &h),
    )?;
    built.relations.push(derived);
    built.table_relations.push(printed);
    if shape == Transverse::Homogeneous {
        let (h, f2c) = (metric.h().clone(), cand.f2.clone());
        built.table_relations.push(frame_relation(
            "D2Wn + F3 D3Wn = DnF2 - DnH (catalog form)",
            &metric,
            plan,
            1e-8,
            &|ops, wf, i| ops.apply(2, &wf[i]) + &f3c * ops.apply(3, &wf[i]) - ops.apply(i + 3, &(&f2c - &h)),
        )?);
    }
    if null && shape == Transverse::Split {
        let a2 = a2.clone();
        built
            .relations
            .push(frame_relation("D2Wn = DnA2", &metric, plan, 1e-8, &|ops, wf, i| {
                ops.apply(2, &wf[i]) - ops.apply(i + 3, &a2)
            })?);
        built.table_relations.push(frame_relation(
            "D2Wn = -DnA2 (catalog sign)",
            &metric,
            plan,
            1e-8,
            &|ops, wf, i| ops.apply(2, &wf[i]) + ops.apply(i + 3, &a2),
        )?);
    }
    if null {
        built.table_relations.push(vanishes(
            "H,3 = 0 (catalog form)",
            &metric.h().diff(Coord::x(3)),
            plan,
            1e-9,
        )?);
        let gap = metric.h() - &cand.f2;
        built
            .relations
            .push(vanishes("(H - F2),3 = 0", &gap.diff(Coord::x(3)), plan, 1e-9)?);
    }
    Ok(built)
}

/// `X₁ = u`, `F₃ = κ m₃₃`, fields constant along `u∂_u + κ∂₃`.
fn type_b(b: &mut Binder<'_>, plan: &SamplePlan, shape: Transverse, twist: Twist) -> Result<Built, CatalogError> {
    require_positive_u(plan)?;
    let n = b.n;
    let t = n - 2;
    let mut relations = Vec::new();
    let d = b.pick_with(px("log(u) + 0.1*sin(u)", n), |rng| ramp(rng, true));
    let big_l = b.take("L", Vars::U, d)?;
    let kappa = b.take("kappa", Vars::U, u() * big_l.diff(Coord::U))?;
    relations.push(verify_identity(
        "L",
        "dL/du = kappa/u",
        &big_l.diff(Coord::U),
        &(&kappa / u()),
        plan,
    )?);
    if min_abs(&kappa, plan)? <= 1e-6 {
        return Err(CatalogError::Restriction {
            name: "kappa".into(),
            detail: "must not vanish on the samples".into(),
        });
    }
    let (template, g33t) = adapted_template(b, plan, shape, twist, &mut relations)?;
    let s = x(3) - &big_l;
    let m = substitute_x3(&template, &s);
    let g_big = g33t.substitute(Coord::x(3), &s);
    let m33 = m[0][0].clone();
    let g33 = m33.powi(2);
    let kp = kappa.diff(Coord::U);
    let split = matches!(shape, Transverse::Split | Transverse::SplitMoving);
    let psi = if split {
        let p1 = b.free("Psi", Vars::X3, px("0.5*x3^2", n))?;
        let p2 = b.free("Psi2", Vars::XR, px("x4", n))?;
        p1 + p2
    } else {
        b.free("Psi", Vars::XE, px("0.5*x3^2 + x4", n))?
    };
    let bb = b.free("b", Vars::U_XR, px("sin(u) + 0.2*u*x4", n))?;
    let f3 = &kappa * &m33;
    let f2 =
        -(&kappa * &g_big) / u() - 0.5 * &kappa * &kappa * &g33 / u() + psi.substitute(Coord::x(3), &s) / u() + &bb;
    let h = -f2.diff(Coord::U) - &kappa * (f2.diff(Coord::x(3)) + &g33 * &kp) / u();
    let xs_vars = if split { Vars::XR } else { Vars::XE };
    let mut w = vec![Expr::zero(); t];
    for (c, slot) in w.iter_mut().enumerate().skip(1) {
        let xr = Coord::x(c + 3);
        let fixed = if split { 0.3 * x(4) } else { 0.2 * x(3) * x(4) };
        let nn = b.free(&format!("N{}", c + 3), xs_vars, fixed)?;
        let g3r = &m33 * &m[0][c];
        *slot = -f2.diff(xr) - 0.5 * &kappa * &kappa * g33.diff(xr) / u() - &kappa * g3r / u()
            + nn.substitute(Coord::x(3), &s) / u();
    }
    let family = if shape == Transverse::Homogeneous { " (CSI)" } else { "" };
    let provenance = vec![
        format!("case {}{family}: X1 = u, F3 = kappa(u) m33 ≠ 0", b.id),
        "adapted variable s = x3 - L(u), dL/du = kappa/u; transverse frame a function of (s, x^r)".into(),
        "F2 = -kappa G33/u - kappa^2 m33^2/(2u) + Psi(s, x^r)/u + b(u, x^r), H = -F2,u - kappa(F2,3 + m33^2 kappa')/u"
            .into(),
        "W_r = -F2,r - kappa^2 (m33^2),r/(2u) - kappa g3r/u + N_r(s, x^r)/u".into(),
    ];
    let parts = Parts {
        h,
        w,
        m,
        candidate: KillingCandidate::with_constants(1.0, 0.0, f2, f3),
    };
    let mut built = finish(b, plan, parts, twist, provenance, relations, Vec::new(), true)?;
    let metric = built.metric.clone();
    let cand = built.candidate.clone();
    let (f2c, f3c, h) = (cand.f2.clone(), cand.f3.clone(), metric.h().clone());
    built.table_relations.push(frame_relation(
        "D2(u Wn) + F3 D3Wn + Dn(F2 - u H) = 0",
        &metric,
        plan,
        1e-8,
        &|ops, wf, i| {
            ops.apply(2, &(u() * &wf[i])) + &f3c * ops.apply(3, &wf[i]) + ops.apply(i + 3, &(&f2c - u() * &h))
        },
    )?);
    Ok(built)
}

/// `X₁ = 0`, `F₃ = κ m₃₃` with the transverse frame x3-independent in the
/// adapted chart.
fn type_zero(b: &mut Binder<'_>, plan: &SamplePlan, shape: Transverse, twist: Twist) -> Result<Built, CatalogError> {
    let n = b.n;
    let t = n - 2;
    let mut relations = Vec::new();
    let d = b.pick_with(px("1 + 0.2*sin(u)", n), |rng| {
        let c: f64 = rng.gen_range(0.7..1.3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        c + 0.15 * (rng.gen_range(0.5..1.5) * u() + rng.gen_range(-1.0..1.0)).sin()
    });
    let kappa = b.take("kappa", Vars::U, d)?;
    if min_abs(&kappa, plan)? <= 1e-6 {
        return Err(CatalogError::Restriction {
            name: "kappa".into(),
            detail: "must not vanish on the samples".into(),
        });
    }
    let lambda = b.pick_with(Expr::one(), |rng| {
        Expr::constant(rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
    });
    let lambda = lambda.as_const().unwrap_or(1.0);
    let homog = homogeneous_rule(n, lambda, twist == Twist::Required);
    let rule = move |i: usize, e: usize| -> Option<(Vars, Expr)> {
        match shape {
            Transverse::Homogeneous => homog(i, e),
            Transverse::General => {
                if i == e {
                    Some((Vars::U_XR, px("exp(0.2*u*x4)", n)))
                } else if (i, e) == (0, 1) {
                    Some((Vars::U_XR, px("0.3*u*x4", n)))
                } else {
                    Some((Vars::U_XR, Expr::zero()))
                }
            }
            Transverse::Split | Transverse::SplitMoving => match (i, e) {
                (0, 0) => Some((Vars::U, px("exp(0.2*u)", n))),
                (0, _) => None,
                _ => {
                    let vars = if shape == Transverse::SplitMoving {
                        Vars::U_XR
                    } else {
                        Vars::XR
                    };
                    let fixed = if i != e {
                        Expr::zero()
                    } else if shape == Transverse::SplitMoving {
                        px("1 + 0.2*u^2 + 0.1*x4^2", n)
                    } else {
                        px("1 + 0.1*x4^2", n)
                    };
                    Some((vars, fixed))
                }
            },
        }
    };
    let m = if shape == Transverse::Homogeneous {
        frame_template_with_m33(b, &rule, shape)?
    } else {
        frame_template(b, &rule)?
    };
    let split = matches!(shape, Transverse::Split | Transverse::SplitMoving);
    let beta = if split {
        b.free("beta", Vars::U, px("0.3*u + 0.2*u^2", n))?
    } else {
        b.free("beta", Vars::U_XR, px("0.3*u + 0.2*u*x4", n))?
    };
    let a3 = b.free("A3", Vars::U_XR, px("sin(u)*x4", n))?;
    let m33 = m[0][0].clone();
    let g33 = m33.powi(2);
    let kp = kappa.diff(Coord::U);
    let x3 = x(3);
    let f3 = &kappa * &m33;
    let f2 = -(&g33 * &kp * &x3) + &beta;
    let h = ((&g33 * &kp).diff(Coord::U) * x3.powi(2) * 0.5 - beta.diff(Coord::U) * &x3) / &kappa + &a3;
    let mut w = vec![Expr::zero(); t];
    for (c, slot) in w.iter_mut().enumerate().skip(1) {
        let xr = Coord::x(c + 3);
        let e = b.free(&format!("E{}", c + 3), Vars::U_XR, 0.2 * u() * x(4))?;
        let g3r = &m33 * &m[0][c];
        *slot = (g33.diff(xr) * &kp * x3.powi(2) * 0.5 - beta.diff(xr) * &x3 - g3r * &kp * &x3) / &kappa + e;
    }
    let family = if shape == Transverse::Homogeneous { " (CSI)" } else { "" };
    let provenance = vec![
        format!("case {}{family}: X1 = 0, F3 = kappa(u) m33 ≠ 0", b.id),
        "transverse frame independent of x3 in the adapted chart".into(),
        "F2 = -m33^2 kappa' x3 + beta, H = ((m33^2 kappa')_u x3^2/2 - beta_u x3)/kappa + A3".into(),
        "W_r = ((m33^2),r kappa' x3^2/2 - beta,r x3 - g3r kappa' x3)/kappa + E_r".into(),
    ];
    let parts = Parts {
        h,
        w,
        m,
        candidate: KillingCandidate::new(Expr::zero(), f2, f3),
    };
    let _ = &mut relations;
    finish(b, plan, parts, twist, provenance, relations, Vec::new(), true)
}

/// Polynomial coefficients (low to high) of a product.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_expr(c: &[f64]) -> Expr {
    c.iter()
        .enumerate()
        .filter(|(_, &k)| k != 0.0)
        .map(|(i, &k)| k * u().powi(i as i32))
        .sum()
}

/// Row 2.26: `F₁ = a x3 + g(u)` with `g` quadratic.
fn type_c(b: &mut Binder<'_>, plan: &SamplePlan) -> Result<Built, CatalogError> {
    let n = b.n;
    let t = n - 2;
    let d = b.pick(Expr::constant(1.5), Draw::NonzeroConst, Vars::NONE);
    let a = b.take("a", Vars::NONE, d)?;
    let d = b.pick_with(px("0.3*u^2 + 0.2*u + 1", n), |rng| {
        rng.gen_range(0.0..0.3) * u().powi(2) + rng.gen_range(0.3..1.0) * u() + rng.gen_range(-1.0..1.0)
    });
    let g = b.take("g", Vars::U, d)?;
    let d = b.pick(Expr::constant(0.7), Draw::Free, Vars::NONE);
    let c0 = b.take("c0", Vars::NONE, d)?;
    let d = b.pick_with(px("sin(u)*x4 + 2", n), |rng| {
        let vars: Vec<Coord> = (0..n).map(Coord).filter(|c| c.0 == 0 || c.0 >= 3).collect();
        2.0 + super::random_function(rng, &vars, 0.3)
    });
    let f3 = b.take("F3", Vars::U_XR, d)?;

    let g1 = g.diff(Coord::U);
    let g2 = g1.diff(Coord::U);
    let third = vanishes("g''' = 0", &g2.diff(Coord::U), plan, 1e-9)?;
    if !third.passed {
        return Err(CatalogError::Restriction {
            name: "g".into(),
            detail: "must be quadratic in u".into(),
        });
    }
    let slope = min_abs(&g1, plan)?;
    if slope <= 1e-6 {
        return Err(CatalogError::Restriction {
            name: "g".into(),
            detail: "g' must not vanish on the samples".into(),
        });
    }
    let aval = a.as_const().unwrap_or(f64::NAN);
    if !(aval.is_finite() && aval != 0.0) {
        return Err(CatalogError::Restriction {
            name: "a".into(),
            detail: "must be a nonzero constant".into(),
        });
    }
    let integrand = &g1 * (0.5 * g1.powi(2) + &g * &g2) / (&a * &a) - &c0 * &g1 / &a;
    // g is quadratic, so the primitive is a quartic computed from coefficients.
    let origin = crate::sample::Point::new(vec![0.0; n]);
    let gc = [
        eval_at(&g, &origin)?,
        eval_at(&g1, &origin)?,
        0.5 * eval_at(&g2, &origin)?,
    ];
    let c0v = eval_at(&c0, &origin)?;
    let dg = [gc[1], 2.0 * gc[2]];
    let ddg = [2.0 * gc[2]];
    let half_sq: Vec<f64> = poly_mul(&dg, &dg).iter().map(|c| 0.5 * c).collect();
    let g_gg = poly_mul(&gc, &ddg);
    let mut inner = vec![0.0; half_sq.len().max(g_gg.len())];
    for (k, c) in half_sq.iter().enumerate() {
        inner[k] += c;
    }
    for (k, c) in g_gg.iter().enumerate() {
        inner[k] += c;
    }
    let mut p: Vec<f64> = poly_mul(&dg, &inner).iter().map(|c| c / (aval * aval)).collect();
    for (k, c) in dg.iter().enumerate() {
        p[k] -= c0v * c / aval;
    }
    let mut prim = vec![0.0];
    prim.extend(p.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)));
    let k = b.take("k", Vars::U, poly_expr(&prim))?;
    let mut relations = vec![
        third,
        verify_identity(
            "k",
            "dk/du = g'(g'^2/2 + g g'')/a^2 - c0 g'/a",
            &k.diff(Coord::U),
            &integrand,
            plan,
        )?,
        Check {
            name: "min |g'|".into(),
            passed: true,
            max_value: slope,
            tolerance: 0.0,
            worst_point: None,
            detail: "the row divides by g'".into(),
        },
    ];
    let rule = move |i: usize, e: usize| -> Option<(Vars, Expr)> {
        match (i, e) {
            (0, _) => None,
            _ if i == e => Some((Vars::XR, px("1 + 0.2*x4^2", n))),
            _ => Some((Vars::XR, Expr::zero())),
        }
    };
    let mut m = frame_template(b, &rule)?;
    m[0][0] = Expr::one();
    let x3 = x(3);
    let h = -(&g2 * &x3) / &a - f3.diff(Coord::U) / &a - (0.5 * g1.powi(2) + &g * &g2) / (&a * &a) + &c0 / &a;
    let mut w = vec![Expr::zero(); t];
    for (c, slot) in w.iter_mut().enumerate().skip(1) {
        *slot = -f3.diff(Coord::x(c + 3)) / &a;
    }
    let f1 = &a * &x3 + &g;
    let f2 = &x3 * (0.5 * g1.powi(2) / &a - &c0) + &g1 * &f3 / &a + &k;
    let provenance = vec![
        "case 2.26 (alias 2.27): F1 = a M + g(u) with M,3 = m33, g quadratic, g' ≠ 0".into(),
        "H = -g'' x3/a - F3,u/a - (g'^2/2 + g g'')/a^2 + c0/a, W_r = -F3,r/a".into(),
        "F2 = x3(g'^2/(2a) - c0) + g' F3/a + k(u)".into(),
    ];
    relations.push(Check::structural("a constant", true, format!("a = {aval}")));
    let parts = Parts {
        h,
        w,
        m,
        candidate: KillingCandidate::new(f1, f2, f3),
    };
    finish(
        b,
        plan,
        parts,
        Twist::Straight,
        provenance,
        relations,
        Vec::new(),
        false,
    )
}
