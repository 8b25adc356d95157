//! Killing equations in the null frame, the A/B/C trichotomy, frame Lie
//! brackets and the causal character of candidates.
//!
//! A vector is stored by its lowered frame components,
//! `X = X₁ n + X₂ ℓ + Σ X_i m^i`; the upper components in frame positions
//! are `[X₂, X₁, X_3, …]`.

use serde::Serialize;
use thiserror::Error;

use crate::expr::jet::{Jet, JetSpace};
use crate::expr::{Coord, EvalError, Expr};
use crate::frame::{FrameError, FrameJets, FrameOperators};
use crate::metric::{qr_upper_triangularize, KundtMetric, MetricError, TriangularFrame};
use crate::report::{Check, Worst};
use crate::sample::{Point, SamplePlan};

pub const RESIDUAL_TOL: f64 = 1e-9;
pub const KILLING_V_RANGE: (f64, f64) = (-5.0, 5.0);

/// Sample plan with `v` spread over [`KILLING_V_RANGE`].
pub fn killing_plan(dimension: usize, count: usize, seed: u64) -> SamplePlan {
    SamplePlan::new(dimension, count, seed).with_range(1, KILLING_V_RANGE.0, KILLING_V_RANGE.1)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KillingError {
    #[error("invalid candidate: {0}")]
    Candidate(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("spatial part of the candidate vanishes at {0:?}")]
    VanishingSpatialPart(Vec<f64>),
    #[error("not a Type C candidate: {0}")]
    NotTypeC(String),
}

fn eval_err(p: &Point) -> impl FnOnce(EvalError) -> KillingError + '_ {
    move |source| KillingError::Eval {
        point: p.coords().to_vec(),
        source,
    }
}

/// A vector field by its lowered frame components.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameVector {
    pub x1: Expr,
    pub x2: Expr,
    pub xs: Vec<Expr>,
}

impl FrameVector {
    pub fn zero(t: usize) -> FrameVector {
        FrameVector {
            x1: Expr::zero(),
            x2: Expr::zero(),
            xs: vec![Expr::zero(); t],
        }
    }

    /// `ℓ = ∂_v`, whose only lowered component is `X₂ = 1`.
    pub fn ell(t: usize) -> FrameVector {
        FrameVector {
            x2: Expr::one(),
            ..FrameVector::zero(t)
        }
    }

    pub fn n(t: usize) -> FrameVector {
        FrameVector {
            x1: Expr::one(),
            ..FrameVector::zero(t)
        }
    }

    pub fn transverse_dim(&self) -> usize {
        self.xs.len()
    }

    /// Lowered components in frame positions.
    pub fn lower(&self) -> Vec<Expr> {
        let mut out = vec![self.x1.clone(), self.x2.clone()];
        out.extend(self.xs.iter().cloned());
        out
    }

    /// Upper components in frame positions.
    pub fn upper(&self) -> Vec<Expr> {
        let mut out = vec![self.x2.clone(), self.x1.clone()];
        out.extend(self.xs.iter().cloned());
        out
    }

    pub fn scale(&self, s: f64) -> FrameVector {
        self.map(|e| s * e)
    }

    pub fn sub(&self, other: &FrameVector) -> FrameVector {
        FrameVector {
            x1: &self.x1 - &other.x1,
            x2: &self.x2 - &other.x2,
            xs: self.xs.iter().zip(&other.xs).map(|(a, b)| a - b).collect(),
        }
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> FrameVector {
        FrameVector {
            x1: f(&self.x1),
            x2: f(&self.x2),
            xs: self.xs.iter().map(&f).collect(),
        }
    }

    /// Lowered components at a point.
    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        self.lower().iter().map(|e| e.eval(p)).collect()
    }

    fn lower_jets<'s>(&self, space: &'s JetSpace, p: &Point) -> Result<Vec<Jet<'s>>, EvalError> {
        self.lower().iter().map(|e| e.eval_jet(space, p)).collect()
    }

    /// `g(X, X) = 2X₁X₂ + Σ X_i²`.
    pub fn metric_norm(&self) -> Expr {
        let mut out = 2.0 * &self.x1 * &self.x2;
        for x in &self.xs {
            out = out + x * x;
        }
        out
    }

    /// Chart components `(X^u, X^v, X^e)`.
    pub fn coordinate_components(&self, metric: &KundtMetric) -> Vec<Expr> {
        let t = self.xs.len();
        let e = FrameOperators::new(metric).inverse_frame().to_vec();
        let spatial: Vec<Expr> = (0..t).map(|c| (c..t).map(|i| &self.xs[i] * &e[i][c]).sum()).collect();
        let mut xv = &self.x2 - metric.h() * &self.x1;
        for (c, s) in spatial.iter().enumerate() {
            xv = xv - &metric.w()[c] * s;
        }
        let mut out = vec![self.x1.clone(), xv];
        out.extend(spatial);
        out
    }

    pub fn from_coordinate_components(metric: &KundtMetric, comps: &[Expr]) -> FrameVector {
        let t = metric.transverse_dim();
        let m = metric.frame();
        let xs = (0..t).map(|i| (i..t).map(|c| &m[i][c] * &comps[c + 2]).sum()).collect();
        let mut x2 = &comps[1] + metric.h() * &comps[0];
        for c in 0..t {
            x2 = x2 + &metric.w()[c] * &comps[c + 2];
        }
        FrameVector {
            x1: comps[0].clone(),
            x2,
            xs,
        }
    }
}

/// `F₁, F₂, F₃` of a candidate; the remaining transverse components vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct KillingCandidate {
    pub f1: Expr,
    pub f2: Expr,
    pub f3: Expr,
}

impl KillingCandidate {
    pub fn new(f1: Expr, f2: Expr, f3: Expr) -> KillingCandidate {
        KillingCandidate { f1, f2, f3 }
    }

    /// `F₁ = c₁u + c₂`.
    pub fn with_constants(c1: f64, c2: f64, f2: Expr, f3: Expr) -> KillingCandidate {
        KillingCandidate::new(c1 * Expr::u() + c2, f2, f3)
    }

    pub fn check_dependence(&self) -> Result<(), KillingError> {
        let bad_f1 = self.f1.max_coord().is_some_and(|c| c > 2) || self.f1.depends_on(Coord::V);
        if bad_f1 {
            return Err(KillingError::Candidate("F1 may depend on u and x3 only".into()));
        }
        for (name, f) in [("F2", &self.f2), ("F3", &self.f3)] {
            if f.depends_on(Coord::V) {
                return Err(KillingError::Candidate(format!("{name} must not depend on v")));
            }
        }
        Ok(())
    }

    /// `X₁ = F₁`, `X₂ = -D₂(F₁)v + F₂`, `X₃ = -D₃(F₁)v + F₃`, `X_m = 0`.
    pub fn assemble(&self, metric: &KundtMetric) -> FrameVector {
        let ops = FrameOperators::new(metric);
        let v = Expr::v();
        let mut xs = vec![Expr::zero(); metric.transverse_dim()];
        xs[0] = &self.f3 - ops.apply(3, &self.f1) * &v;
        FrameVector {
            x1: self.f1.clone(),
            x2: &self.f2 - ops.apply(2, &self.f1) * &v,
            xs,
        }
    }
}

pub const EQUATION_NAMES: [&str; 7] = [
    "D1X1",
    "D2X1+D1X2",
    "D3X1+D1X3",
    "DmX1+D1Xm",
    "D2X2+JiXi",
    "DiX2+D2Xi",
    "DjXi+DiXj",
];

/// Largest `|ρ_k|` for each of the seven equation groups.
#[derive(Clone, Debug, Serialize)]
pub struct KillingResiduals {
    pub samples: usize,
    pub equations: Vec<Check>,
}

impl KillingResiduals {
    pub fn max(&self) -> f64 {
        self.equations.iter().map(|c| c.max_value).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.equations.iter().all(|c| c.passed)
    }

    pub fn worst(&self) -> Option<&Check> {
        self.equations.iter().max_by(|a, b| a.max_value.total_cmp(&b.max_value))
    }
}

/// The seven residual groups at the expansion point of `fj`, from the
/// lowered components as jets of order at least 1.
pub fn residuals_at(fj: &FrameJets<'_>, x: &[Jet<'_>]) -> [f64; 7] {
    let t = fj.t;
    let d = |a: usize, k: usize| fj.frame_derivative(a, &x[k]).value();
    let xv: Vec<f64> = x.iter().map(Jet::value).collect();
    let x1 = xv[0];
    let xi = |i: usize| xv[i + 2];
    let mut r = [0.0f64; 7];
    r[0] = d(0, 0).abs();
    r[1] = (d(1, 0) + d(0, 1)).abs();
    r[2] = (d(2, 0) + d(0, 2)).abs();
    for m in 1..t {
        r[3] = r[3].max((d(m + 2, 0) + d(0, m + 2)).abs());
    }
    let mut eq4 = d(1, 1);
    for i in 0..t {
        eq4 += fj.j[i].value() * xi(i);
    }
    r[4] = eq4.abs();
    for i in 0..t {
        let mut eq5 = d(i + 2, 1) + d(1, i + 2) - fj.j[i].value() * x1;
        for j in 0..t {
            eq5 -= (fj.a[j][i].value() + fj.b[i][j].value()) * xi(j);
        }
        r[5] = r[5].max(eq5.abs());
        for j in i..t {
            let mut eq6 = d(j + 2, i + 2) + d(i + 2, j + 2) + 2.0 * fj.b_sym(i, j).value() * x1;
            for k in 0..t {
                eq6 -= (fj.gamma_t(k, i, j).value() + fj.gamma_t(k, j, i).value()) * xi(k);
            }
            r[6] = r[6].max(eq6.abs());
        }
    }
    r
}

/// Evaluate the Killing equations for `x` at every point of `plan`.
pub fn killing_residuals(metric: &KundtMetric, x: &FrameVector, plan: &SamplePlan) -> KillingResiduals {
    killing_residuals_with_tol(metric, x, plan, RESIDUAL_TOL)
}

pub fn killing_residuals_with_tol(
    metric: &KundtMetric,
    x: &FrameVector,
    plan: &SamplePlan,
    tol: f64,
) -> KillingResiduals {
    let space = JetSpace::new(metric.dimension(), 1);
    let mut worst: Vec<Worst> = (0..7).map(|_| Worst::new()).collect();
    let points = plan.points();
    for p in &points {
        let r = FrameJets::build(metric, &space, p)
            .map_err(|e| e.to_string())
            .and_then(|fj| {
                let xj = x.lower_jets(&space, p).map_err(|e| e.to_string())?;
                Ok(residuals_at(&fj, &xj))
            });
        match r {
            Ok(r) => {
                for (w, v) in worst.iter_mut().zip(r) {
                    w.observe(v, p);
                }
            }
            Err(note) => {
                for w in &mut worst {
                    w.fail(p, note.clone());
                }
            }
        }
    }
    KillingResiduals {
        samples: points.len(),
        equations: EQUATION_NAMES
            .iter()
            .zip(&worst)
            .map(|(name, w)| Check::bounded(name, w, tol))
            .collect(),
    }
}

/// Independent check: the largest component of `L_X g` in the chart.
pub fn lie_derivative_of_metric(metric: &KundtMetric, x: &FrameVector, plan: &SamplePlan) -> Worst {
    let n = metric.dimension();
    let space = JetSpace::new(n, 1);
    let g = metric.coordinate_metric();
    let comps = x.coordinate_components(metric);
    let mut worst = Worst::new();
    for p in plan.points() {
        let eval = || -> Result<f64, EvalError> {
            let gj: Vec<Vec<Jet>> = g
                .iter()
                .map(|row| row.iter().map(|e| e.eval_jet(&space, &p)).collect())
                .collect::<Result<_, _>>()?;
            let xj: Vec<Jet> = comps.iter().map(|e| e.eval_jet(&space, &p)).collect::<Result<_, _>>()?;
            let mut out: f64 = 0.0;
            for mu in 0..n {
                for nu in mu..n {
                    let mut s = 0.0;
                    for rho in 0..n {
                        s += xj[rho].value() * gj[mu][nu].diff(rho).value()
                            + gj[rho][nu].value() * xj[rho].diff(mu).value()
                            + gj[mu][rho].value() * xj[rho].diff(nu).value();
                    }
                    out = out.max(s.abs());
                }
            }
            Ok(out)
        };
        match eval() {
            Ok(v) => worst.observe(v, &p),
            Err(e) => worst.fail(&p, e.to_string()),
        }
    }
    worst
}

/// Which of the three forms a candidate takes, keyed on `X₁ = F₁`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum KillingType {
    /// `X₁ = c`.
    A { c: f64 },
    /// `X₁ = c₁u + c₂` with `c₁ ≠ 0`.
    B { c1: f64, c2: f64 },
    /// `X₁` depends on `x3`.
    C,
}

impl KillingType {
    pub fn tag(&self) -> &'static str {
        match self {
            KillingType::A { .. } => "A",
            KillingType::B { .. } => "B",
            KillingType::C => "C",
        }
    }
}

/// Classify by dependence of `F₁`; a syntactic `x3` or `u` dependence is
/// confirmed by a central-difference probe at the samples.
pub fn classify(candidate: &KillingCandidate, plan: &SamplePlan) -> Result<KillingType, KillingError> {
    candidate.check_dependence()?;
    let f = &candidate.f1;
    let points = plan.points();
    let h = 1e-4;
    let probe = |c: usize, p: &Point| -> Result<(f64, f64), KillingError> {
        let at = |dx: f64| f.eval(&p.with(c, p[c] + dx)).map_err(eval_err(p));
        let (fp, f0, fm) = (at(h)?, at(0.0)?, at(-h)?);
        Ok(((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)))
    };
    if f.depends_on(Coord::x(3)) {
        for p in &points {
            if probe(2, p)?.0.abs() > 1e-7 {
                return Ok(KillingType::C);
            }
        }
    }
    let Some(p0) = points.first() else {
        return Err(KillingError::Candidate("empty sample plan".into()));
    };
    let value = f.eval(p0).map_err(eval_err(p0))?;
    if !f.depends_on(Coord::U) && !f.depends_on(Coord::x(3)) {
        return Ok(KillingType::A { c: value });
    }
    let mut slope = None;
    for p in &points {
        let (d1, d2) = probe(0, p)?;
        if d2.abs() > 1e-5 * (1.0 + d1.abs()) {
            return Err(KillingError::Candidate(format!(
                "F1 = {f} is neither constant, linear in u, nor x3-dependent"
            )));
        }
        match slope {
            None => slope = Some(d1),
            Some(s) if (s - d1).abs() > 1e-6 * (1.0 + s.abs()) => {
                return Err(KillingError::Candidate(format!("F1 = {f} is not linear in u")));
            }
            _ => {}
        }
    }
    let c1 = slope.unwrap_or(0.0);
    if c1.abs() <= 1e-7 {
        return Ok(KillingType::A { c: value });
    }
    let c1 = (c1 * 1e6).round() / 1e6;
    Ok(KillingType::B {
        c1,
        c2: value - c1 * p0[0],
    })
}

/// `[X, Y]` computed exactly through the chart components.
pub fn lie_bracket(metric: &KundtMetric, x: &FrameVector, y: &FrameVector) -> FrameVector {
    let n = metric.dimension();
    let xc = x.coordinate_components(metric);
    let yc = y.coordinate_components(metric);
    let comps: Vec<Expr> = (0..n)
        .map(|mu| {
            (0..n)
                .map(|nu| &xc[nu] * yc[mu].diff(Coord(nu)) - &yc[nu] * xc[mu].diff(Coord(nu)))
                .sum()
        })
        .collect();
    FrameVector::from_coordinate_components(metric, &comps)
}

/// Upper components of `[X, Y]` at the expansion point of `fj` from the frame
/// formula `X^a e_a(Y^b) - Y^a e_a(X^b) + X^a Y^c (Γ^b_ca - Γ^b_ac)`, with
/// `Γ^b_ac` the `e_b` component of `∇_{e_c} e_a`.
pub fn frame_bracket_at<'s>(fj: &FrameJets<'s>, x_upper: &[Jet<'s>], y_upper: &[Jet<'s>]) -> Vec<f64> {
    let n = fj.n;
    (0..n)
        .map(|b| {
            let mut s = 0.0;
            for a in 0..n {
                s += x_upper[a].value() * fj.frame_derivative(a, &y_upper[b]).value()
                    - y_upper[a].value() * fj.frame_derivative(a, &x_upper[b]).value();
                for c in 0..n {
                    let g = fj.gamma_up(b, c, a).value() - fj.gamma_up(b, a, c).value();
                    s += x_upper[a].value() * y_upper[c].value() * g;
                }
            }
            s
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    /// Lowered components of the exact bracket at the first sample.
    pub first_sample: Vec<f64>,
    /// Frame formula against the chart bracket.
    pub consistency: Check,
    #[serde(skip)]
    pub bracket: FrameVector,
}

/// `[X, Y]` exactly, cross-checked against the frame formula at the samples.
pub fn frame_bracket(metric: &KundtMetric, x: &FrameVector, y: &FrameVector, plan: &SamplePlan) -> BracketReport {
    let bracket = lie_bracket(metric, x, y);
    let space = JetSpace::new(metric.dimension(), 1);
    let mut worst = Worst::new();
    let mut first_sample = Vec::new();
    for p in plan.points() {
        let step = || -> Result<(Vec<f64>, f64), String> {
            let fj = FrameJets::build(metric, &space, &p).map_err(|e| e.to_string())?;
            let jets = |v: &FrameVector| -> Result<Vec<Jet>, String> {
                v.upper()
                    .iter()
                    .map(|e| e.eval_jet(&space, &p))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())
            };
            let formula = frame_bracket_at(&fj, &jets(x)?, &jets(y)?);
            let exact = bracket.eval(&p).map_err(|e| e.to_string())?;
            let exact_upper = raise_values(&exact);
            let diff = formula
                .iter()
                .zip(&exact_upper)
                .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                .fold(0.0, f64::max);
            Ok((exact, diff))
        };
        match step() {
            Ok((exact, diff)) => {
                if first_sample.is_empty() {
                    first_sample = exact;
                }
                worst.observe(diff, &p);
            }
            Err(note) => worst.fail(&p, note),
        }
    }
    BracketReport {
        first_sample,
        consistency: Check::bounded("frame_formula_vs_chart", &worst, 1e-9),
        bracket,
    }
}

fn raise_values(lower: &[f64]) -> Vec<f64> {
    let mut out = lower.to_vec();
    out.swap(0, 1);
    out
}

/// Largest componentwise `|a - b|` over the samples.
pub fn max_component_difference(a: &FrameVector, b: &FrameVector, plan: &SamplePlan) -> Worst {
    let diff = a.sub(b);
    let mut worst = Worst::new();
    for p in plan.points() {
        match diff.eval(&p) {
            Ok(v) => worst.observe(v.iter().map(|x| x.abs()).fold(0.0, f64::max), &p),
            Err(e) => worst.fail(&p, e.to_string()),
        }
    }
    worst
}

/// The vectors derived from a Type C candidate.
#[derive(Clone, Debug, Serialize)]
pub struct TypeCAlgebra {
    #[serde(skip)]
    pub y_c: FrameVector,
    #[serde(skip)]
    pub z_c: FrameVector,
    pub checks: Vec<Check>,
    /// Informational: the same brackets with the opposite overall sign.
    pub sign_flipped: Vec<Check>,
}

/// `Y_C = D₂F₁ ℓ + D₃F₁ m₃` and
/// `Z_C = [F₃D₃D₂F₁ - D₃F₁D₃F₂ + (D₂F₁)²] ℓ - (D₃F₁)² n + D₂F₁D₃F₁ m₃`,
/// checked against the exact brackets `[ℓ, X_C]` and `[X_C, Y_C]`.
pub fn type_c_algebra(
    metric: &KundtMetric,
    candidate: &KillingCandidate,
    plan: &SamplePlan,
) -> Result<TypeCAlgebra, KillingError> {
    let kind = classify(candidate, plan)?;
    if kind != KillingType::C {
        return Err(KillingError::NotTypeC(format!(
            "F1 = {} gives type {}",
            candidate.f1,
            kind.tag()
        )));
    }
    let t = metric.transverse_dim();
    let ops = FrameOperators::new(metric);
    let d2f1 = ops.apply(2, &candidate.f1);
    let d3f1 = ops.apply(3, &candidate.f1);
    let mut y_c = FrameVector::zero(t);
    y_c.x2 = d2f1.clone();
    y_c.xs[0] = d3f1.clone();
    let mut z_c = FrameVector::zero(t);
    z_c.x1 = -(&d3f1 * &d3f1);
    z_c.x2 = &candidate.f3 * ops.apply(3, &d2f1) - &d3f1 * ops.apply(3, &candidate.f2) + &d2f1 * &d2f1;
    z_c.xs[0] = &d2f1 * &d3f1;

    let x_c = candidate.assemble(metric);
    let ell = FrameVector::ell(t);
    let ell_x = lie_bracket(metric, &ell, &x_c);
    let x_y = lie_bracket(metric, &x_c, &y_c);

    let mut norm = Worst::new();
    let mut n_coeff = Worst::new();
    let mut positive = true;
    let norm_expr = y_c.metric_norm();
    for p in plan.points() {
        let r =
            (|| -> Result<(f64, f64, f64), EvalError> { Ok((norm_expr.eval(&p)?, d3f1.eval(&p)?, z_c.x1.eval(&p)?)) })(
            );
        match r {
            Ok((nv, d3, zn)) => {
                norm.observe((nv - d3 * d3).abs(), &p);
                n_coeff.observe((zn + d3 * d3).abs(), &p);
                if nv <= 0.0 || zn == 0.0 {
                    positive = false;
                }
            }
            Err(e) => {
                norm.fail(&p, e.to_string());
                positive = false;
            }
        }
    }

    let yk = killing_residuals(metric, &y_c, plan);
    let zk = killing_residuals(metric, &z_c, plan);
    let checks = vec![
        Check::bounded(
            "ell_X_C_matches_Y_C",
            &max_component_difference(&ell_x, &y_c, plan),
            1e-9,
        ),
        Check::bounded("X_C_Y_C_matches_Z_C", &max_component_difference(&x_y, &z_c, plan), 1e-9),
        Check::bounded("Y_C_norm_equals_D3F1_squared", &norm, 1e-12),
        Check::structural("Y_C_spacelike_and_Z_C_n_nonzero", positive, ""),
        Check::bounded("Z_C_n_coefficient", &n_coeff, 1e-12),
        Check::bounded("Y_C_killing", &worst_of(&yk), RESIDUAL_TOL),
        Check::bounded("Z_C_killing", &worst_of(&zk), RESIDUAL_TOL),
    ];
    let sign_flipped = vec![
        Check::bounded(
            "X_C_ell_matches_Y_C",
            &max_component_difference(&ell_x.scale(-1.0), &y_c, plan),
            1e-9,
        ),
        Check::bounded(
            "Y_C_X_C_matches_Z_C",
            &max_component_difference(&x_y.scale(-1.0), &z_c, plan),
            1e-9,
        ),
    ];
    Ok(TypeCAlgebra {
        y_c,
        z_c,
        checks,
        sign_flipped,
    })
}

fn worst_of(r: &KillingResiduals) -> Worst {
    let mut w = Worst::new();
    for c in &r.equations {
        let mut one = Worst::new();
        one.value = c.max_value;
        one.point = c.worst_point.clone().map(Point::new);
        one.failed = !c.max_value.is_finite();
        one.note = c.detail.clone();
        w.merge(&one);
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalVerdict {
    TimelikeForAllV,
    NullForAllV,
    SpacelikeSomewhere,
    /// Non-spacelike for all `v` everywhere, timelike at some samples and
    /// null at others.
    Mixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalReport {
    pub verdict: CausalVerdict,
    /// Largest `|coefficient|` of `v²` and `v`, and the range of the constant term.
    pub max_abs_quadratic: f64,
    pub max_abs_linear: f64,
    pub min_constant: f64,
    pub max_constant: f64,
    /// Largest difference between the quadratic and `g(X, X)` over the samples.
    pub metric_norm_difference: f64,
    pub samples: usize,
}

/// Sign of `(D₃X₁)²v² + 2(D₂X₁X₁ - D₃X₁F₃)v + F₃² - 2X₁F₂` for all `v`,
/// decided by its coefficients at the spatial samples.
pub fn causal_character(
    metric: &KundtMetric,
    candidate: &KillingCandidate,
    plan: &SamplePlan,
) -> Result<CausalReport, KillingError> {
    let ops = FrameOperators::new(metric);
    let x1 = &candidate.f1;
    let d2 = ops.apply(2, x1);
    let d3 = ops.apply(3, x1);
    let a2 = &d3 * &d3;
    let a1 = 2.0 * (&d2 * x1 - &d3 * &candidate.f3);
    let a0 = &candidate.f3 * &candidate.f3 - 2.0 * x1 * &candidate.f2;
    let true_norm = candidate.assemble(metric).metric_norm();
    let quadratic = &a2 * Expr::v().powi(2) + &a1 * Expr::v() + &a0;

    let mut report = CausalReport {
        verdict: CausalVerdict::NullForAllV,
        max_abs_quadratic: 0.0,
        max_abs_linear: 0.0,
        min_constant: f64::INFINITY,
        max_constant: f64::NEG_INFINITY,
        metric_norm_difference: 0.0,
        samples: 0,
    };
    let (mut timelike, mut null, mut spacelike) = (false, false, false);
    for p in plan.points() {
        let ev = |e: &Expr| e.eval(&p).map_err(eval_err(&p));
        let (c2, c1, c0) = (ev(&a2)?, ev(&a1)?, ev(&a0)?);
        let scale = 1.0 + ev(&(&candidate.f3 * &candidate.f3))?.abs() + ev(&(x1 * &candidate.f2))?.abs();
        let tol = 1e-10 * scale;
        report.samples += 1;
        report.max_abs_quadratic = report.max_abs_quadratic.max(c2.abs());
        report.max_abs_linear = report.max_abs_linear.max(c1.abs());
        report.min_constant = report.min_constant.min(c0);
        report.max_constant = report.max_constant.max(c0);
        report.metric_norm_difference = report
            .metric_norm_difference
            .max((ev(&quadratic)? - ev(&true_norm)?).abs());
        if c2.abs() > tol || c1.abs() > tol || c0 > tol {
            spacelike = true;
        } else if c0 < -tol {
            timelike = true;
        } else {
            null = true;
        }
    }
    report.verdict = match (spacelike, timelike, null) {
        (true, _, _) => CausalVerdict::SpacelikeSomewhere,
        (false, true, true) => CausalVerdict::Mixed,
        (false, true, false) => CausalVerdict::TimelikeForAllV,
        (false, false, _) => CausalVerdict::NullForAllV,
    };
    Ok(report)
}

/// Frame rotated so that the spatial part of a vector lies along `m³`.
#[derive(Clone, Debug)]
pub struct FrameRotation {
    /// Orthogonal `R` with first row `X_i / χ`; the new coframe is `R ω`.
    pub rotation: Vec<Vec<Expr>>,
    /// `m' = R m`, in general no longer upper triangular.
    pub frame: Vec<Vec<Expr>>,
    pub chi: Expr,
    /// Components of the spatial part in the new frame: `(χ, 0, …)`.
    pub spatial: Vec<Expr>,
    /// Present when `m'` is upper triangular at every sample.
    pub metric: Option<KundtMetric>,
    /// Whether QR of `m'` gives back `m` at the samples.
    pub qr_returns_original: bool,
    pub checks: Vec<Check>,
}

/// Gram–Schmidt completion of `X_i / χ` to an orthonormal rotation of the
/// transverse frame.
pub fn rotate_frame_to_candidate(
    metric: &KundtMetric,
    xs: &[Expr],
    plan: &SamplePlan,
) -> Result<FrameRotation, KillingError> {
    let t = metric.transverse_dim();
    if xs.len() != t {
        return Err(KillingError::Candidate(format!(
            "expected {t} spatial components, got {}",
            xs.len()
        )));
    }
    let points = plan.points();
    let chi = xs.iter().map(|x| x * x).sum::<Expr>().sqrt();
    for p in &points {
        if chi.eval(p).map_err(eval_err(p))? <= 1e-12 {
            return Err(KillingError::VanishingSpatialPart(p.coords().to_vec()));
        }
    }

    let rotation: Vec<Vec<Expr>> = if xs.iter().skip(1).all(Expr::is_zero) {
        (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect()
    } else {
        let mut rows: Vec<Vec<Expr>> = vec![xs.iter().map(|x| x / &chi).collect()];
        for k in 0..t {
            if rows.len() == t {
                break;
            }
            let mut cand: Vec<Expr> = (0..t)
                .map(|j| if j == k { Expr::one() } else { Expr::zero() })
                .collect();
            for r in &rows {
                let dot = r[k].clone();
                cand = cand.iter().zip(r).map(|(c, ri)| c - &dot * ri).collect();
            }
            let norm = cand.iter().map(|c| c * c).sum::<Expr>().sqrt();
            let mut min_norm = f64::INFINITY;
            for p in &points {
                min_norm = min_norm.min(norm.eval(p).map_err(eval_err(p))?);
            }
            if min_norm > 1e-6 {
                rows.push(cand.iter().map(|c| c / &norm).collect());
            }
        }
        if rows.len() < t {
            return Err(KillingError::Candidate(
                "Gram-Schmidt completion degenerated on the samples".into(),
            ));
        }
        rows
    };

    let m = metric.frame();
    let frame: Vec<Vec<Expr>> = (0..t)
        .map(|i| {
            (0..t)
                .map(|e| (0..t).map(|j| &rotation[i][j] * &m[j][e]).sum())
                .collect()
        })
        .collect();
    let spatial: Vec<Expr> = (0..t).map(|i| (0..t).map(|j| &rotation[i][j] * &xs[j]).sum()).collect();

    let mut orth = Worst::new();
    let mut gmetric = Worst::new();
    let mut along = Worst::new();
    let mut lower = 0.0f64;
    let g_old = metric.transverse_metric();
    for p in &points {
        let ev = |e: &Expr| e.eval(p).map_err(eval_err(p));
        for i in 0..t {
            for j in 0..t {
                let dot: f64 = (0..t)
                    .map(|k| Ok(ev(&rotation[i][k])? * ev(&rotation[j][k])?))
                    .sum::<Result<f64, KillingError>>()?;
                orth.observe((dot - if i == j { 1.0 } else { 0.0 }).abs(), p);
                let g_new: f64 = (0..t)
                    .map(|k| Ok(ev(&frame[k][i])? * ev(&frame[k][j])?))
                    .sum::<Result<f64, KillingError>>()?;
                gmetric.observe((g_new - ev(&g_old[i][j])?).abs(), p);
                if j < i {
                    lower = lower.max(ev(&frame[i][j])?.abs());
                }
            }
            let target = if i == 0 { ev(&chi)? } else { 0.0 };
            along.observe((ev(&spatial[i])?.abs() - target).abs(), p);
        }
    }

    let triangular = lower <= 1e-12;
    let metric_out = if triangular {
        let cleaned: Vec<Vec<Expr>> = frame
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(e, x)| if e < i { Expr::zero() } else { x.clone() })
                    .collect()
            })
            .collect();
        Some(metric.with_frame(cleaned)?)
    } else {
        None
    };
    let qr_returns_original = match qr_upper_triangularize(&frame, plan)? {
        TriangularFrame::Symbolic(_) => triangular && lower == 0.0,
        TriangularFrame::Pointwise(rs) => {
            let mut ok = true;
            for (p, r) in rs {
                let old = metric.frame_at(&p).map_err(eval_err(&p))?;
                ok &= (r - old).abs().max() <= 1e-10;
            }
            ok
        }
    };
    Ok(FrameRotation {
        rotation,
        frame,
        chi,
        spatial,
        metric: metric_out,
        qr_returns_original,
        checks: vec![
            Check::bounded("rotation_orthogonal", &orth, 1e-12),
            Check::bounded("transverse_metric_preserved", &gmetric, 1e-12),
            Check::bounded("spatial_part_along_m3", &along, 1e-12),
            Check::structural(
                "frame_upper_triangular",
                triangular,
                format!("largest entry below the diagonal {lower:e}"),
            ),
        ],
    })
}
