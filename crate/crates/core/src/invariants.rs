//! Polynomial curvature invariants at sample points and CSI/VSI verdicts.
//!
//! Verdicts are statements about the samples only: constant invariants at
//! finitely many points are consistent with local homogeneity of the
//! transverse space, never a proof of it.

use serde::Serialize;
use thiserror::Error;

use crate::curvature::{covariant_derivative_riemann, CurvatureJets};
use crate::expr::jet::{Jet, JetSpace};
use crate::frame::{raise, FrameError, FrameJets};
use crate::metric::KundtMetric;
use crate::oracle::TransverseOracle;
use crate::report::rel_err;
use crate::sample::{Point, SamplePlan};

pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-9;

pub const INVARIANT_NAMES: [&str; 6] = ["R", "r2", "K", "R3", "dR2", "dRiem2"];

/// `R`, `R_ab R^ab`, `R_abcd R^abcd`, `R_a^b R_b^c R_c^a`, `∇_a R ∇^a R`
/// and `∇_e R_abcd ∇^e R^abcd` at one point.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct InvariantValues {
    pub ricci_scalar: f64,
    pub ricci_squared: f64,
    pub kretschmann: f64,
    pub ricci_cubed: f64,
    pub grad_ricci_scalar_sq: f64,
    pub grad_riemann_sq: f64,
}

impl InvariantValues {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.ricci_scalar,
            self.ricci_squared,
            self.kretschmann,
            self.ricci_cubed,
            self.grad_ricci_scalar_sq,
            self.grad_riemann_sq,
        ]
    }
}

/// Invariants of the full metric at the expansion point of `fj` (order 3).
pub fn frame_invariants(fj: &FrameJets<'_>) -> InvariantValues {
    let n = fj.n;
    let cj = CurvatureJets::build(fj);
    let ric = cj.ricci_contracted();
    let rv: Vec<f64> = ric.iter().map(Jet::value).collect();
    let r = |a: usize, b: usize| rv[a * n + b];
    let mut scalar_jet = fj.zero().clone();
    for b in 0..n {
        scalar_jet += &ric[b * n + raise(b)];
    }
    let ricci_scalar = scalar_jet.value();

    let mut r2 = 0.0;
    let mut r3 = 0.0;
    for a in 0..n {
        for b in 0..n {
            r2 += r(a, b) * r(raise(a), raise(b));
            for c in 0..n {
                r3 += r(a, raise(b)) * r(b, raise(c)) * r(c, raise(a));
            }
        }
    }

    let riem: Vec<f64> = cj.riemann_all().iter().map(Jet::value).collect();
    let k = full_square(&riem, n, 4);

    let grad: Vec<f64> = (0..n).map(|a| fj.frame_derivative(a, &scalar_jet).value()).collect();
    let dr2 = (0..n).map(|a| grad[a] * grad[raise(a)]).sum();
    let nab = covariant_derivative_riemann(fj, &cj);
    InvariantValues {
        ricci_scalar,
        ricci_squared: r2,
        kretschmann: k,
        ricci_cubed: r3,
        grad_ricci_scalar_sq: dr2,
        grad_riemann_sq: full_square(&nab, n, 5),
    }
}

/// `T_{a…} T^{a…}` for a flattened frame tensor.
fn full_square(t: &[f64], n: usize, rank: usize) -> f64 {
    let mut total = 0.0;
    for (flat, &x) in t.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let mut rest = flat;
        let mut partner = 0;
        let mut stride = 1;
        for _ in 0..rank {
            partner += raise(rest % n) * stride;
            rest /= n;
            stride *= n;
        }
        total += x * t[partner];
    }
    total
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantSet {
    #[serde(skip)]
    pub points: Vec<Point>,
    pub full: Vec<InvariantValues>,
    pub transverse: Vec<InvariantValues>,
}

impl InvariantSet {
    /// Values of invariant `k` (index into [`INVARIANT_NAMES`]) over the samples.
    pub fn series(&self, k: usize) -> Vec<f64> {
        self.full.iter().map(|v| v.as_array()[k]).collect()
    }

    /// Largest relative difference between full and transverse values.
    pub fn max_transverse_difference(&self) -> f64 {
        self.full
            .iter()
            .zip(&self.transverse)
            .flat_map(|(a, b)| a.as_array().into_iter().zip(b.as_array()).map(|(x, y)| rel_err(x, y)))
            .fold(0.0, f64::max)
    }
}

/// Evaluate the six invariants on the frame path and on the transverse
/// metric alone at every sample point.
pub fn compute_invariants(metric: &KundtMetric, plan: &SamplePlan) -> Result<InvariantSet, FrameError> {
    let space = JetSpace::new(metric.dimension(), 3);
    let transverse = TransverseOracle::new(metric);
    let points = plan.points();
    let mut full = Vec::with_capacity(points.len());
    let mut trans = Vec::with_capacity(points.len());
    for p in &points {
        let fj = FrameJets::build(metric, &space, p)?;
        full.push(frame_invariants(&fj));
        trans.push(transverse.invariants(p)?);
    }
    Ok(InvariantSet {
        points,
        full,
        transverse: trans,
    })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    VsiConsistent,
    CsiConsistent,
    NonCsi,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantSpread {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub relative_spread: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CsiVerdict {
    pub verdict: Verdict,
    pub spreads: Vec<InvariantSpread>,
    /// Largest relative difference from the transverse-only invariants.
    pub transverse_difference: f64,
    pub transverse_equivalent: bool,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InvariantError {
    #[error("a CSI verdict needs at least 10 sample points, got {0}")]
    TooFewPoints(usize),
}

pub fn csi_verdict(set: &InvariantSet, rel_tol: f64, abs_tol: f64) -> Result<CsiVerdict, InvariantError> {
    if set.full.len() < 10 {
        return Err(InvariantError::TooFewPoints(set.full.len()));
    }
    let spreads: Vec<InvariantSpread> = INVARIANT_NAMES
        .iter()
        .enumerate()
        .map(|(k, &name)| {
            let s = set.series(k);
            let min = s.iter().copied().fold(f64::INFINITY, f64::min);
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let max_abs = min.abs().max(max.abs());
            let spread = max - min;
            let relative_spread = if max_abs <= abs_tol { 0.0 } else { spread / max_abs };
            InvariantSpread {
                name,
                min,
                max,
                spread,
                relative_spread,
                max_abs,
            }
        })
        .collect();
    let all_small = spreads.iter().all(|s| s.max_abs <= abs_tol);
    let all_constant = spreads.iter().all(|s| s.relative_spread <= rel_tol);
    let verdict = if all_small {
        Verdict::VsiConsistent
    } else if all_constant {
        Verdict::CsiConsistent
    } else {
        Verdict::NonCsi
    };
    let transverse_difference = set.max_transverse_difference();
    Ok(CsiVerdict {
        verdict,
        spreads,
        transverse_difference,
        transverse_equivalent: transverse_difference <= rel_tol,
        rel_tol,
        abs_tol,
        points: set.full.len(),
    })
}
