use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use kundt::catalog::{self, CaseInstance, CaseSpec, CASE_IDS};
use kundt::curvature::{check_structure, riemann_frame, weyl_null_components};
use kundt::format::{write_candidate, write_metric};
use kundt::frame::{check_commutators, commutator_test_fields};
use kundt::invariants::{compute_invariants, csi_verdict, Verdict};
use kundt::killing::{
    causal_character, classify, frame_bracket, killing_residuals_with_tol, lie_derivative_of_metric, type_c_algebra,
    FrameVector, KillingType, KILLING_V_RANGE, RESIDUAL_TOL,
};
use kundt::oracle::{self, check_ccnv, max_coordinate_ell_contraction};
use kundt::report::{all_passed, Check};
use kundt::{parse_expr, KundtMetric, SamplePlan};

use crate::input::{digest, load_candidate, load_metric, InstanceFile};
use crate::report::{PlanInfo, Report};
use crate::Options;

const ORACLE_REL_TOL: f64 = 1e-8;
const INVARIANT_REL_TOL: f64 = 1e-9;
const INVARIANT_ABS_TOL: f64 = 1e-12;
const ELL_TOL: f64 = 1e-10;

fn plan(n: usize, opts: &Options, killing: bool) -> Result<SamplePlan> {
    let mut p = SamplePlan::new(n, opts.points, opts.seed);
    if killing {
        p = p.with_range(1, KILLING_V_RANGE.0, KILLING_V_RANGE.1);
    }
    if let Some((a, b)) = opts.u_range {
        p = p.with_range(0, a, b);
    }
    if let Some((a, b)) = opts.v_range {
        p = p.with_range(1, a, b);
    }
    if let Some((a, b)) = opts.x_range {
        p = p.with_x_range(a, b);
    }
    p.validate(n)?;
    if p.count == 0 {
        bail!("--points must be positive");
    }
    Ok(p)
}

fn summarize(checks: &[Check]) -> String {
    match checks.iter().find(|c| !c.passed) {
        Some(c) => format!("{} = {:e} > {:e}", c.name, c.max_value, c.tolerance),
        None => format!("{} checks passed", checks.len()),
    }
}

fn checks_json(checks: &[Check]) -> Value {
    json!({ "checks": checks })
}

fn start(command: &str, opts: &Options) -> Report {
    Report::new(command, !opts.no_timestamp)
}

pub fn validate(file: &Path, opts: &Options) -> Result<Report> {
    let loaded = load_metric(file)?;
    let metric = &loaded.metric;
    let plan = plan(metric.dimension(), opts, false)?;
    let mut r = start("validate", opts);
    r.inputs.push(loaded.digest.clone());
    r.plan = Some(PlanInfo::from(&plan));
    let v = metric.validate(&plan);
    r.section("validation", v.passed(), summarize(&v.checks), checks_json(&v.checks));
    let ccnv = check_ccnv(metric, &plan);
    r.section("ccnv", all_passed(&ccnv), summarize(&ccnv), checks_json(&ccnv));
    Ok(r)
}

pub fn curvature(file: &Path, opts: &Options) -> Result<Report> {
    let loaded = load_metric(file)?;
    let metric = &loaded.metric;
    let plan = plan(metric.dimension(), opts, false)?;
    metric.ensure_valid(&plan)?;
    let mut r = start("curvature", opts);
    r.inputs.push(loaded.digest.clone());
    r.plan = Some(PlanInfo::from(&plan));
    let comm = check_commutators(metric, &commutator_test_fields(metric.dimension()), &plan);
    r.section("frame", all_passed(&comm), summarize(&comm), checks_json(&comm));
    let checks = check_structure(metric, &plan);
    let first = plan.points().into_iter().next().expect("positive point count");
    let values = riemann_frame(metric, &first)?;
    let weyl = weyl_null_components(&values);
    r.section(
        "curvature",
        all_passed(&checks),
        summarize(&checks),
        json!({
            "checks": checks,
            "first_sample": { "point": first.coords(), "values": values, "weyl": weyl },
        }),
    );
    Ok(r)
}

pub fn oracle_compare(file: &Path, opts: &Options) -> Result<Report> {
    let loaded = load_metric(file)?;
    let metric = &loaded.metric;
    let plan = plan(metric.dimension(), opts, false)?;
    metric.ensure_valid(&plan)?;
    let rel_tol = opts.rel_tol.unwrap_or(ORACLE_REL_TOL);
    let mut r = start("oracle-compare", opts);
    r.inputs.push(loaded.digest.clone());
    r.plan = Some(PlanInfo::from(&plan));
    r.tolerances.rel_tol = Some(rel_tol);
    let cmp = oracle::oracle_compare(metric, &plan, rel_tol, true);
    let mut checks = cmp.checks.clone();
    let ell = max_coordinate_ell_contraction(metric, &plan)?;
    checks.push(Check {
        name: "coordinate_ell_contraction".into(),
        passed: ell <= ELL_TOL,
        max_value: ell,
        tolerance: ELL_TOL,
        worst_point: None,
        detail: String::new(),
    });
    let passed = all_passed(&checks);
    r.section(
        "oracle-compare",
        passed,
        format!("max relative error {:e}; {}", cmp.max_rel_error(), summarize(&checks)),
        json!({ "points": cmp.points, "max_rel_error": cmp.max_rel_error(), "checks": checks }),
    );
    Ok(r)
}

pub fn invariants(file: &Path, opts: &Options) -> Result<Report> {
    let loaded = load_metric(file)?;
    let metric = &loaded.metric;
    let plan = plan(metric.dimension(), opts, false)?;
    metric.ensure_valid(&plan)?;
    let rel_tol = opts.rel_tol.unwrap_or(INVARIANT_REL_TOL);
    let abs_tol = opts.abs_tol.unwrap_or(INVARIANT_ABS_TOL);
    let mut r = start("invariants", opts);
    r.inputs.push(loaded.digest.clone());
    r.plan = Some(PlanInfo::from(&plan));
    r.tolerances.rel_tol = Some(rel_tol);
    r.tolerances.abs_tol = Some(abs_tol);
    let set = compute_invariants(metric, &plan)?;
    let v = csi_verdict(&set, rel_tol, abs_tol)?;
    let label = match v.verdict {
        Verdict::VsiConsistent => "VSI-consistent",
        Verdict::CsiConsistent => "CSI-consistent",
        Verdict::NonCsi => "non-CSI",
    };
    let summary = format!("{label}; transverse difference {:e}", v.transverse_difference);
    r.section("invariants", v.transverse_equivalent, summary, json!(v));
    Ok(r)
}

fn bracket_row(metric: &KundtMetric, x: &FrameVector, with: &str, y: &FrameVector, plan: &SamplePlan) -> Value {
    let b = frame_bracket(metric, x, y, plan);
    json!({ "with": with, "first_sample": b.first_sample, "consistency": b.consistency })
}

pub fn killing_check(file: &Path, candidate: Option<&Path>, opts: &Options) -> Result<Report> {
    let loaded = load_metric(file)?;
    let metric = &loaded.metric;
    let (cand, cand_digest) = load_candidate(candidate, &loaded)?;
    let plan = plan(metric.dimension(), opts, true)?;
    metric.ensure_valid(&plan)?;
    let tol = opts.abs_tol.unwrap_or(RESIDUAL_TOL);
    let mut r = start("killing-check", opts);
    r.inputs.push(loaded.digest.clone());
    r.inputs.extend(cand_digest);
    r.plan = Some(PlanInfo::from(&plan));
    r.tolerances.abs_tol = Some(tol);

    let kind = classify(&cand, &plan)?;
    let x = cand.assemble(metric);
    let res = killing_residuals_with_tol(metric, &x, &plan, tol);
    let lie = Check::bounded(
        "lie_derivative_oracle",
        &lie_derivative_of_metric(metric, &x, &plan),
        tol,
    );
    let causal = causal_character(metric, &cand, &plan)?;
    let t = metric.transverse_dim();
    let brackets = vec![
        bracket_row(metric, &x, "l", &FrameVector::ell(t), &plan),
        bracket_row(metric, &x, "n", &FrameVector::n(t), &plan),
    ];
    let mut body = json!({
        "candidate": { "F1": cand.f1.to_string(), "F2": cand.f2.to_string(), "F3": cand.f3.to_string() },
        "type": kind,
        "samples": res.samples,
        "equations": res.equations,
        "max_residual": res.max(),
        "worst": res.worst(),
        "lie_derivative_oracle": lie,
        "causal": causal,
        "brackets": brackets,
    });
    if kind == KillingType::C {
        let alg = type_c_algebra(metric, &cand, &plan)?;
        body["type_c_algebra"] = json!(alg);
    }
    let passed = res.passed();
    let summary = match res.worst() {
        Some(w) if !passed => format!(
            "type {}; {} residual {:e} at {:?}",
            kind.tag(),
            w.name,
            w.max_value,
            w.worst_point.clone().unwrap_or_default()
        ),
        _ => format!("type {}; max residual {:e}", kind.tag(), res.max()),
    };
    r.section("killing", passed, summary, body);
    Ok(r)
}

fn parse_binds(binds: &[String], n: usize) -> Result<CaseSpec> {
    binds.iter().try_fold(CaseSpec::new("", n), |spec, b| {
        let (name, src) = b
            .split_once('=')
            .ok_or_else(|| anyhow!("--bind expects name=expr, got `{b}`"))?;
        let e = parse_expr(src.trim(), n).with_context(|| format!("binding `{}`", name.trim()))?;
        Ok::<_, anyhow::Error>(spec.bind(name.trim(), e))
    })
}

fn instance_json(inst: &CaseInstance, kplan: &SamplePlan, tol: f64) -> Result<(bool, Value)> {
    let x = inst.candidate.assemble(&inst.metric);
    let res = killing_residuals_with_tol(&inst.metric, &x, kplan, tol);
    let causal = causal_character(&inst.metric, &inst.candidate, kplan)?;
    let kind = classify(&inst.candidate, kplan)?;
    let passed = inst.relations_passed() && res.passed();
    Ok((
        passed,
        json!({
            "id": inst.id,
            "provenance": inst.provenance,
            "bindings": catalog::summarize_bindings(&inst.bindings),
            "metric": write_metric(&inst.metric),
            "candidate": write_candidate(&inst.candidate),
            "type": kind,
            "relations": inst.relations,
            "table_relations": inst.table_relations,
            "equations": res.equations,
            "max_residual": res.max(),
            "causal": causal,
        }),
    ))
}

pub fn case_build(
    id: &str,
    n: usize,
    binds: &[String],
    random: Option<u64>,
    out: Option<&Path>,
    opts: &Options,
) -> Result<Report> {
    let plan = plan(n, opts, false)?;
    let kplan = plan.clone().with_range(
        1,
        opts.v_range.map_or(KILLING_V_RANGE.0, |r| r.0),
        opts.v_range.map_or(KILLING_V_RANGE.1, |r| r.1),
    );
    let tol = opts.abs_tol.unwrap_or(RESIDUAL_TOL);
    let inst = match random {
        Some(seed) => catalog::random_case(id, n, seed, &plan)?,
        None => {
            let mut spec = parse_binds(binds, n)?;
            spec.id = id.to_string();
            catalog::build_case(&spec, &plan)?
        }
    };
    let mut r = start("case build", opts);
    let spec_text = format!("{id} N={n} random={random:?} binds={binds:?}");
    r.inputs.push(digest("case", &spec_text));
    r.plan = Some(PlanInfo::from(&kplan));
    r.tolerances.abs_tol = Some(tol);
    let (passed, body) = instance_json(&inst, &kplan, tol)?;
    if let Some(path) = out {
        let file = InstanceFile {
            case: inst.id.clone(),
            dimension: n,
            metric: write_metric(&inst.metric),
            candidate: write_candidate(&inst.candidate),
            bindings: inst.bindings.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            provenance: inst.provenance.clone(),
        };
        let text = serde_json::to_string_pretty(&file)? + "\n";
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = format!(
        "{}: {} relations, max residual {:e}",
        inst.id,
        inst.relations.len(),
        body["max_residual"].as_f64().unwrap_or(f64::NAN)
    );
    r.section("case", passed, summary, body);
    Ok(r)
}

pub fn case_list(n: usize, opts: &Options) -> Result<Report> {
    let mut r = start("case list", opts);
    let mut rows = Vec::new();
    for id in CASE_IDS {
        rows.push(json!({ "id": id, "bindings": catalog::binding_names(id, n)? }));
    }
    r.section(
        "cases",
        true,
        format!("{} cases", rows.len()),
        json!({ "dimension": n, "cases": rows }),
    );
    Ok(r)
}

pub fn example_7_3(n: usize, h: &str, w: &[String], g: &str, opts: &Options) -> Result<Report> {
    if n < 4 {
        bail!("dimension must be at least 4");
    }
    let plan = plan(n, opts, false)?;
    let h_e = parse_expr(h, n).context("--h")?;
    let g_e = parse_expr(g, n).context("--g")?;
    let mut w_e = w
        .iter()
        .map(|s| parse_expr(s, n).context("--w"))
        .collect::<Result<Vec<_>>>()?;
    // The default H = x4 comes with its particular solution w4 = x3.
    if w_e.is_empty() && h == "x4" {
        w_e.push(parse_expr("x3", n)?);
    }
    w_e.resize(n - 3, kundt::Expr::zero());
    let ex = catalog::build_worked_example(n, &h_e, &w_e, &g_e, &plan)?;
    let mut r = start("example-7-3", opts);
    r.inputs.push(digest("example", &format!("N={n} H={h} w={w:?} g={g}")));
    r.plan = Some(PlanInfo::from(&plan));
    let passed = ex.passed() && ex.instance.relations_passed();
    let summary = format!(
        "X residual {:e}, Y residual {:e}, |Y|^2 - 1 <= {:e}; X {:?}, Y {:?}",
        ex.x_residuals.max(),
        ex.y_residuals.max(),
        ex.y_norm.max_value,
        ex.x_causal.verdict,
        ex.y_causal.verdict
    );
    r.section(
        "example-7-3",
        passed,
        summary,
        json!({
            "metric": write_metric(&ex.instance.metric),
            "relations": ex.instance.relations,
            "x": { "candidate": write_candidate(&ex.instance.candidate), "equations": ex.x_residuals.equations, "causal": ex.x_causal },
            "y": { "candidate": write_candidate(&ex.y), "equations": ex.y_residuals.equations, "norm": ex.y_norm, "causal": ex.y_causal },
        }),
    );
    Ok(r)
}
