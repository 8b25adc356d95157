//! Constructors for every case of the isometry catalog: concrete free functions
//! in, a `(KundtMetric, KillingCandidate)` pair out.
//!
//! Each family is built in coordinates adapted to the extra Killing vector
//! (its transverse part is `κ(u)∂₃` there) and optionally pulled back along a
//! spatial map `x3 ↦ Φ(x3, x^r)`, which is how the `m₃r,₃ ≠ 0` rows arise.
//! Integrals are never computed: where a row needs one, the caller binds a
//! primitive and the constructor checks its derivative pointwise.

mod families;
mod structure;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Coord, EvalError, Expr};
use crate::frame::FrameError;
use crate::killing::KillingCandidate;
use crate::metric::{KundtMetric, MetricError};
use crate::report::{Check, Worst};
use crate::sample::{Point, SamplePlan};

pub use structure::{
    build_worked_example, check_case2_structure, check_csi_case_constraints, StructureReport, WorkedExample,
};

pub const CASE_IDS: [&str; 23] = [
    "1.11", "1.12", "1.21", "1.22", "1.23", "1.24", "2.1", "2.21", "2.22", "2.23", "2.24", "2.25", "2.26", "1.21a",
    "1.21b", "1.22a", "1.22b", "1.23a", "1.23b", "N1.1", "N1.2", "N2.1", "N2.2",
];

/// Accepted spellings that resolve to a case id.
pub fn canonical_id(id: &str) -> Option<&'static str> {
    let id = id.trim();
    let alias = match id {
        "2.27" => "2.26",
        other => other,
    };
    CASE_IDS.iter().copied().find(|c| c.eq_ignore_ascii_case(alias))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseSpec {
    pub id: String,
    pub dimension: usize,
    pub bindings: BTreeMap<String, Expr>,
}

impl CaseSpec {
    pub fn new(id: &str, dimension: usize) -> CaseSpec {
        CaseSpec {
            id: id.to_string(),
            dimension,
            bindings: BTreeMap::new(),
        }
    }

    pub fn bind(mut self, name: &str, e: Expr) -> CaseSpec {
        self.bindings.insert(name.to_string(), e);
        self
    }
}

#[derive(Clone, Debug)]
pub struct CaseInstance {
    pub id: String,
    pub metric: KundtMetric,
    pub candidate: KillingCandidate,
    /// Every binding that went into the construction, defaults included.
    pub bindings: BTreeMap<String, Expr>,
    pub provenance: Vec<String>,
    /// Identities the construction relies on; all must pass.
    pub relations: Vec<Check>,
    /// Relations in their catalog form, evaluated for comparison
    /// only. Some fail by design, see the notes in `provenance`.
    pub table_relations: Vec<Check>,
}

impl CaseInstance {
    pub fn relations_passed(&self) -> bool {
        self.relations.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown case id `{0}`")]
    UnknownCase(String),
    #[error("case {case} needs dimension at least {min}, got {got}")]
    Dimension { case: String, min: usize, got: usize },
    #[error("case {case} has no free function `{name}`; it accepts: {accepted}")]
    UnknownBinding {
        case: String,
        name: String,
        accepted: String,
    },
    #[error("`{name}` must not depend on {coord}")]
    Dependence { name: String, coord: String },
    #[error("`{name}`: {detail}")]
    Restriction { name: String, detail: String },
    #[error("primitive `{name}` violates {relation}: residual {residual:e} at {point:?}")]
    Primitive {
        name: String,
        relation: String,
        residual: f64,
        point: Vec<f64>,
    },
    #[error("domain: {0}")]
    Domain(String),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

pub(crate) fn eval_at(e: &Expr, p: &Point) -> Result<f64, CatalogError> {
    e.eval(p).map_err(|source| CatalogError::Eval {
        point: p.coords().to_vec(),
        source,
    })
}

/// Which coordinates a free function may depend on. `x3` stands for the
/// adapted variable where the family substitutes one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Vars {
    pub u: bool,
    pub x3: bool,
    pub xr: bool,
}

impl Vars {
    pub const NONE: Vars = Vars {
        u: false,
        x3: false,
        xr: false,
    };
    pub const U: Vars = Vars {
        u: true,
        x3: false,
        xr: false,
    };
    pub const X3: Vars = Vars {
        u: false,
        x3: true,
        xr: false,
    };
    pub const XR: Vars = Vars {
        u: false,
        x3: false,
        xr: true,
    };
    pub const XE: Vars = Vars {
        u: false,
        x3: true,
        xr: true,
    };
    pub const U_XR: Vars = Vars {
        u: true,
        x3: false,
        xr: true,
    };

    fn allows(self, c: Coord) -> bool {
        match c.0 {
            0 => self.u,
            1 => false,
            2 => self.x3,
            _ => self.xr,
        }
    }

    fn coords(self, n: usize) -> Vec<Coord> {
        (0..n).map(Coord).filter(|&c| self.allows(c)).collect()
    }
}

fn coord_label(c: Coord) -> String {
    match c.0 {
        0 => "u".into(),
        1 => "v".into(),
        k => format!("x{}", k + 1),
    }
}

/// Shapes of random draws.
#[derive(Clone, Debug)]
pub(crate) enum Draw {
    /// Small polynomial of degree at most 3 plus an optional sin/exp atom.
    Free,
    /// Bounded away from zero and positive: `c·exp(small linear)`.
    Positive,
    /// Nonzero constant.
    NonzeroConst,
}

pub(crate) struct Binder<'a> {
    pub id: &'static str,
    pub n: usize,
    given: &'a BTreeMap<String, Expr>,
    rng: Option<ChaCha8Rng>,
    pub used: BTreeMap<String, Expr>,
    accepted: Vec<String>,
}

impl<'a> Binder<'a> {
    /// `fixed` in deterministic mode, a realization of `draw` otherwise.
    pub fn pick(&mut self, fixed: Expr, draw: Draw, vars: Vars) -> Expr {
        let n = self.n;
        match self.rng.as_mut() {
            None => fixed,
            Some(rng) => realize(rng, &draw, &vars.coords(n)),
        }
    }

    pub fn pick_with(&mut self, fixed: Expr, f: impl FnOnce(&mut ChaCha8Rng) -> Expr) -> Expr {
        match self.rng.as_mut() {
            None => fixed,
            Some(rng) => f(rng),
        }
    }

    pub fn is_random(&self) -> bool {
        self.rng.is_some()
    }

    /// The binding `name`, or `default` when the caller did not bind it.
    pub fn take(&mut self, name: &str, vars: Vars, default: Expr) -> Result<Expr, CatalogError> {
        self.accepted.push(name.to_string());
        let e = self.given.get(name).cloned().unwrap_or(default);
        for c in (0..self.n).map(Coord) {
            if e.depends_on(c) && !vars.allows(c) {
                return Err(CatalogError::Dependence {
                    name: name.to_string(),
                    coord: coord_label(c),
                });
            }
        }
        self.used.insert(name.to_string(), e.clone());
        Ok(e)
    }

    /// A free function with a fixed default and a generic random draw.
    pub fn free(&mut self, name: &str, vars: Vars, fixed: Expr) -> Result<Expr, CatalogError> {
        let d = self.pick(fixed, Draw::Free, vars);
        self.take(name, vars, d)
    }

    fn finish(self) -> Result<BTreeMap<String, Expr>, CatalogError> {
        for name in self.given.keys() {
            if !self.accepted.contains(name) {
                return Err(CatalogError::UnknownBinding {
                    case: self.id.to_string(),
                    name: name.clone(),
                    accepted: self.accepted.join(", "),
                });
            }
        }
        Ok(self.used)
    }
}

fn realize(rng: &mut ChaCha8Rng, draw: &Draw, vars: &[Coord]) -> Expr {
    match draw {
        Draw::NonzeroConst => {
            let c = rng.gen_range(0.6..1.4);
            Expr::constant(if rng.gen_bool(0.5) { c } else { -c })
        }
        Draw::Positive => {
            let mut lin = Expr::zero();
            for &c in vars {
                lin = lin + rng.gen_range(-0.25..0.25) * Expr::var(c);
            }
            rng.gen_range(0.8..1.5) * lin.exp()
        }
        Draw::Free => random_function(rng, vars, 0.4),
    }
}

/// `c₀ + Σ c·monomial + a·atom` with at most three monomials of degree ≤ 3.
pub(crate) fn random_function(rng: &mut ChaCha8Rng, vars: &[Coord], amp: f64) -> Expr {
    let mut e = Expr::constant(rng.gen_range(-amp..amp));
    if vars.is_empty() {
        return e;
    }
    for _ in 0..rng.gen_range(1..=3) {
        let mut mono = Expr::constant(rng.gen_range(-amp..amp));
        for _ in 0..rng.gen_range(1..=3) {
            mono = mono * Expr::var(vars[rng.gen_range(0..vars.len())]);
        }
        e = e + mono;
    }
    if rng.gen_bool(0.6) {
        let x = Expr::var(vars[rng.gen_range(0..vars.len())]);
        let a = rng.gen_range(0.5..1.5);
        let atom = if rng.gen_bool(0.5) {
            (a * x + rng.gen_range(-1.0..1.0)).sin()
        } else {
            (0.3 * a * x).exp()
        };
        e = e + rng.gen_range(-amp..amp) * atom;
    }
    e
}

/// Check `lhs = rhs` at the plan points to `1e-9·(1 + |rhs|)`.
pub(crate) fn verify_identity(
    name: &str,
    relation: &str,
    lhs: &Expr,
    rhs: &Expr,
    plan: &SamplePlan,
) -> Result<Check, CatalogError> {
    let mut worst = Worst::new();
    for p in plan.points() {
        let (a, b) = (eval_at(lhs, &p)?, eval_at(rhs, &p)?);
        let r = (a - b).abs() / (1.0 + b.abs());
        worst.observe(r, &p);
        if r > 1e-9 {
            return Err(CatalogError::Primitive {
                name: name.to_string(),
                relation: relation.to_string(),
                residual: r,
                point: p.coords().to_vec(),
            });
        }
    }
    Ok(Check::bounded(&format!("{name}: {relation}"), &worst, 1e-9))
}

/// Largest `|e|` over the plan, as a pass/fail check against `tol`.
pub(crate) fn vanishes(name: &str, e: &Expr, plan: &SamplePlan, tol: f64) -> Result<Check, CatalogError> {
    let mut worst = Worst::new();
    for p in plan.points() {
        worst.observe(eval_at(e, &p)?.abs(), &p);
    }
    Ok(Check::bounded(name, &worst, tol))
}

/// Smallest `|e|` over the plan.
pub(crate) fn min_abs(e: &Expr, plan: &SamplePlan) -> Result<f64, CatalogError> {
    let mut m = f64::INFINITY;
    for p in plan.points() {
        m = m.min(eval_at(e, &p)?.abs());
    }
    Ok(m)
}

/// Build the instance for `spec` from its bindings, filling unbound free
/// functions with the row's defaults.
pub fn build_case(spec: &CaseSpec, plan: &SamplePlan) -> Result<CaseInstance, CatalogError> {
    build(spec, plan, None)
}

/// Build with every unbound free function drawn at random from `seed`.
pub fn random_case(id: &str, dimension: usize, seed: u64, plan: &SamplePlan) -> Result<CaseInstance, CatalogError> {
    let spec = CaseSpec::new(id, dimension);
    build(&spec, plan, Some(ChaCha8Rng::seed_from_u64(seed)))
}

fn build(spec: &CaseSpec, plan: &SamplePlan, rng: Option<ChaCha8Rng>) -> Result<CaseInstance, CatalogError> {
    let id = canonical_id(&spec.id).ok_or_else(|| CatalogError::UnknownCase(spec.id.clone()))?;
    let min = 4;
    if spec.dimension < min {
        return Err(CatalogError::Dimension {
            case: id.to_string(),
            min,
            got: spec.dimension,
        });
    }
    let mut binder = Binder {
        id,
        n: spec.dimension,
        given: &spec.bindings,
        rng,
        used: BTreeMap::new(),
        accepted: Vec::new(),
    };
    let built = families::build_family(&mut binder, plan)?;
    let bindings = binder.finish()?;
    let mut provenance = built.provenance;
    if spec.id.trim() == "2.27" {
        provenance.push("requested as 2.27, an alias of 2.26".into());
    }
    Ok(CaseInstance {
        id: id.to_string(),
        metric: built.metric,
        candidate: built.candidate,
        bindings,
        provenance,
        relations: built.relations,
        table_relations: built.table_relations,
    })
}

/// Names a case accepts, in the order its constructor reads them.
pub fn binding_names(id: &str, dimension: usize) -> Result<Vec<String>, CatalogError> {
    let id = canonical_id(id).ok_or_else(|| CatalogError::UnknownCase(id.to_string()))?;
    let empty = BTreeMap::new();
    let mut binder = Binder {
        id,
        n: dimension,
        given: &empty,
        rng: None,
        used: BTreeMap::new(),
        accepted: Vec::new(),
    };
    let plan = SamplePlan::new(dimension, 4, 0);
    families::build_family(&mut binder, &plan)?;
    Ok(binder.accepted)
}

#[derive(Clone, Debug, Serialize)]
pub struct BindingSummary {
    pub name: String,
    pub expr: String,
}

pub fn summarize_bindings(b: &BTreeMap<String, Expr>) -> Vec<BindingSummary> {
    b.iter()
        .map(|(k, v)| BindingSummary {
            name: k.clone(),
            expr: v.to_string(),
        })
        .collect()
}
