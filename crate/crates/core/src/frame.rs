//! Null coframe `ω¹ = ℓ = du`, `ω² = n = dv + H du + Ŵ_e dx^e`,
//! `ωⁱ = m_ie dx^e`, the dual frame derivatives and the connection.
//!
//! Frame positions used in arrays: 0 is frame index 1 (`D₁ = ∂_v`), 1 is
//! frame index 2 (`D₂ = ∂_u - H∂_v`) and `2 + i` is the transverse index
//! `i + 3`. Lowered frame indices are contracted with `η`, whose only
//! off-diagonal entries are `η₁₂ = η₂₁ = 1`; raising swaps positions 0 and 1.

use serde::Serialize;
use thiserror::Error;

use crate::expr::jet::{Jet, JetSpace};
use crate::expr::{Coord, EvalError, Expr};
use crate::metric::KundtMetric;
use crate::report::{Check, Worst};
use crate::sample::{Point, SamplePlan};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FrameError {
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("frame matrix is singular at {0:?}")]
    Singular(Vec<f64>),
}

impl FrameError {
    pub(crate) fn eval(p: &Point) -> impl FnOnce(EvalError) -> FrameError + '_ {
        move |source| FrameError::Eval {
            point: p.coords().to_vec(),
            source,
        }
    }
}

/// Raising a frame index: swaps the two null directions.
pub fn raise(a: usize) -> usize {
    match a {
        0 => 1,
        1 => 0,
        k => k,
    }
}

/// `η_ab` in frame positions.
pub fn eta(a: usize, b: usize) -> f64 {
    if raise(a) == b {
        1.0
    } else {
        0.0
    }
}

/// Metric fields, inverse frame and connection as Taylor jets around one
/// point. With jets of order `K` the connection is exact to order `K - 1`.
pub struct FrameJets<'s> {
    pub n: usize,
    pub t: usize,
    pub point: Point,
    pub space: &'s JetSpace,
    pub h: Jet<'s>,
    pub w: Vec<Jet<'s>>,
    pub m: Vec<Vec<Jet<'s>>>,
    /// `E_ie = m_i^e`, the inverse frame: `Σ_e m_je E_ie = δ_ij`.
    pub e: Vec<Vec<Jet<'s>>>,
    pub j: Vec<Jet<'s>>,
    pub a: Vec<Vec<Jet<'s>>>,
    pub b: Vec<Vec<Jet<'s>>>,
    pub d: Vec<Vec<Vec<Jet<'s>>>>,
    gamma: Vec<Jet<'s>>,
    zero: Jet<'s>,
}

impl<'s> FrameJets<'s> {
    pub fn build(metric: &KundtMetric, space: &'s JetSpace, p: &Point) -> Result<FrameJets<'s>, FrameError> {
        let n = metric.dimension();
        let t = metric.transverse_dim();
        let zero = space.zero();
        let h = metric.h().eval_jet(space, p).map_err(FrameError::eval(p))?;
        let w = metric
            .w()
            .iter()
            .map(|w| w.eval_jet(space, p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(FrameError::eval(p))?;
        let mut m = vec![vec![zero.clone(); t]; t];
        for i in 0..t {
            for e in i..t {
                m[i][e] = metric.frame()[i][e].eval_jet(space, p).map_err(FrameError::eval(p))?;
            }
            if m[i][i].value().abs() < 1e-14 {
                return Err(FrameError::Singular(p.coords().to_vec()));
            }
        }
        let inv = triangular_inverse(&m, &zero);
        let e: Vec<Vec<Jet>> = (0..t)
            .map(|i| (0..t).map(|col| inv[col][i].clone()).collect())
            .collect();

        let x = |e: usize| e + 2;
        let hd: Vec<Jet> = (0..t).map(|c| h.diff(x(c))).collect();
        let wu: Vec<Jet> = w.iter().map(|w| w.diff(0)).collect();
        let wd: Vec<Vec<Jet>> = w.iter().map(|w| (0..t).map(|f| w.diff(x(f))).collect()).collect();

        let j: Vec<Jet> = (0..t)
            .map(|i| {
                let mut acc = zero.clone();
                for c in 0..=i {
                    acc += (&hd[c] - &wu[c]) * &e[i][c];
                }
                acc
            })
            .collect();

        let curl: Vec<Vec<Jet>> = (0..t)
            .map(|c| (0..t).map(|f| &wd[c][f] - &wd[f][c]).collect())
            .collect();
        let mut a = vec![vec![zero.clone(); t]; t];
        for i in 0..t {
            for jj in 0..t {
                let mut acc = zero.clone();
                for c in 0..=i {
                    for f in 0..=jj {
                        acc += &curl[c][f] * &e[i][c] * &e[jj][f];
                    }
                }
                a[i][jj] = acc;
            }
        }

        let mut b = vec![vec![zero.clone(); t]; t];
        for i in 0..t {
            let mu: Vec<Jet> = (0..t).map(|c| m[i][c].diff(0)).collect();
            for jj in 0..t {
                let mut acc = zero.clone();
                for c in i..=jj {
                    acc += &mu[c] * &e[jj][c];
                }
                b[i][jj] = acc;
            }
        }

        let mut d = vec![vec![vec![zero.clone(); t]; t]; t];
        for i in 0..t {
            let md: Vec<Vec<Jet>> = (0..t)
                .map(|c| {
                    (0..t)
                        .map(|f| if c >= i { m[i][c].diff(x(f)) } else { zero.clone() })
                        .collect()
                })
                .collect();
            for jj in 0..t {
                for k in (jj + 1)..t {
                    let mut acc = zero.clone();
                    for c in i..t {
                        for f in 0..t {
                            let ej = if c <= jj { Some(&e[jj][c]) } else { None };
                            let ek = if c <= k { Some(&e[k][c]) } else { None };
                            let fj = if f <= jj { Some(&e[jj][f]) } else { None };
                            let fk = if f <= k { Some(&e[k][f]) } else { None };
                            let mut term = zero.clone();
                            if let (Some(x1), Some(x2)) = (ej, fk) {
                                term += x1 * x2;
                            }
                            if let (Some(x1), Some(x2)) = (ek, fj) {
                                term -= x1 * x2;
                            }
                            acc += &md[c][f] * term;
                        }
                    }
                    d[i][k][jj] = -&acc;
                    d[i][jj][k] = acc;
                }
            }
        }

        let nn = n;
        let mut gamma = vec![zero.clone(); nn * nn * nn];
        let idx = |a: usize, b: usize, c: usize| (a * nn + b) * nn + c;
        for i in 0..t {
            let pi = i + 2;
            gamma[idx(1, pi, 1)] = j[i].clone();
            gamma[idx(pi, 1, 1)] = -&j[i];
            for jj in 0..t {
                let pj = jj + 2;
                let b_sym = (&b[i][jj] + &b[jj][i]).scale(0.5);
                let b_anti = (&b[i][jj] - &b[jj][i]).scale(0.5);
                let half_a = a[i][jj].scale(0.5);
                let g2ij = -&half_a - &b_sym;
                gamma[idx(pi, 1, pj)] = -&g2ij;
                gamma[idx(1, pi, pj)] = g2ij;
                gamma[idx(pi, pj, 1)] = &half_a - &b_anti;
                for k in 0..t {
                    let s = &d[i][jj][k] + &d[jj][k][i] + &d[k][jj][i];
                    gamma[idx(pi, pj, k + 2)] = s.scale(-0.5);
                }
            }
        }

        Ok(FrameJets {
            n,
            t,
            point: p.clone(),
            space,
            h,
            w,
            m,
            e,
            j,
            a,
            b,
            d,
            gamma,
            zero,
        })
    }

    pub fn zero(&self) -> &Jet<'s> {
        &self.zero
    }

    /// `Γ_abc = g(e_a, ∇_{e_c} e_b)` in frame positions.
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> &Jet<'s> {
        &self.gamma[(a * self.n + b) * self.n + c]
    }

    /// `Γ^a_bc`.
    pub fn gamma_up(&self, a: usize, b: usize, c: usize) -> &Jet<'s> {
        self.gamma(raise(a), b, c)
    }

    /// Γ_ijk for transverse indices (0-based).
    pub fn gamma_t(&self, i: usize, j: usize, k: usize) -> &Jet<'s> {
        self.gamma(i + 2, j + 2, k + 2)
    }

    pub fn b_sym(&self, i: usize, j: usize) -> Jet<'s> {
        (&self.b[i][j] + &self.b[j][i]).scale(0.5)
    }

    pub fn b_anti(&self, i: usize, j: usize) -> Jet<'s> {
        (&self.b[i][j] - &self.b[j][i]).scale(0.5)
    }

    /// `D_a f` for a frame position `a`.
    pub fn frame_derivative(&self, a: usize, f: &Jet<'s>) -> Jet<'s> {
        match a {
            0 => f.diff(1),
            1 => f.diff(0) - &self.h * f.diff(1),
            k => {
                let i = k - 2;
                let fv = f.diff(1);
                let mut acc = self.zero.clone();
                for c in 0..=i {
                    acc += (f.diff(c + 2) - &self.w[c] * &fv) * &self.e[i][c];
                }
                acc
            }
        }
    }

    /// `Σ_e E_ie ∂_e f`, the transverse frame derivative of a v-independent field.
    pub fn transverse_derivative(&self, i: usize, f: &Jet<'s>) -> Jet<'s> {
        let mut acc = self.zero.clone();
        for c in 0..=i {
            acc += f.diff(c + 2) * &self.e[i][c];
        }
        acc
    }

    /// Frame components of `Ŵ`: `W_i = Σ_e E_ie Ŵ_e`.
    pub fn w_frame(&self, i: usize) -> Jet<'s> {
        let mut acc = self.zero.clone();
        for c in 0..=i {
            acc += &self.w[c] * &self.e[i][c];
        }
        acc
    }

    /// Values of the connection at the expansion point.
    pub fn values(&self) -> ConnectionData {
        let t = self.t;
        let val2 =
            |m: &Vec<Vec<Jet>>| -> Vec<Vec<f64>> { m.iter().map(|r| r.iter().map(Jet::value).collect()).collect() };
        ConnectionData {
            n: self.n,
            j: self.j.iter().map(Jet::value).collect(),
            a: val2(&self.a),
            b: val2(&self.b),
            d: self.d.iter().map(val2).collect(),
            gamma: self.gamma.iter().map(Jet::value).collect(),
            w: (0..t).map(|i| self.w_frame(i).value()).collect(),
            inverse_frame: val2(&self.e),
        }
    }
}

/// Inverse of an upper-triangular matrix of jets by back-substitution.
fn triangular_inverse<'s>(m: &[Vec<Jet<'s>>], zero: &Jet<'s>) -> Vec<Vec<Jet<'s>>> {
    let t = m.len();
    let mut inv = vec![vec![zero.clone(); t]; t];
    let recips: Vec<Jet> = (0..t).map(|j| m[j][j].recip()).collect();
    for i in 0..t {
        inv[i][i] = recips[i].clone();
        for j in (i + 1)..t {
            let mut acc = zero.clone();
            for k in i..j {
                acc += &inv[i][k] * &m[k][j];
            }
            inv[i][j] = -(acc * &recips[j]);
        }
    }
    inv
}

/// Connection data at one point.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionData {
    pub n: usize,
    pub j: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub d: Vec<Vec<Vec<f64>>>,
    /// Flattened `Γ_abc` in frame positions.
    pub gamma: Vec<f64>,
    pub w: Vec<f64>,
    pub inverse_frame: Vec<Vec<f64>>,
}

impl ConnectionData {
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> f64 {
        self.gamma[(a * self.n + b) * self.n + c]
    }

    pub fn b_sym(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.b[i][j] + self.b[j][i])
    }

    pub fn b_anti(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.b[i][j] - self.b[j][i])
    }
}

/// Connection data at a point.
pub fn build_connection(metric: &KundtMetric, p: &Point) -> Result<ConnectionData, FrameError> {
    let space = JetSpace::new(metric.dimension(), 1);
    Ok(FrameJets::build(metric, &space, p)?.values())
}

/// Symbolic inverse frame `E_ie` of a triangular frame matrix.
pub fn symbolic_inverse_frame(metric: &KundtMetric) -> Vec<Vec<Expr>> {
    let m = metric.frame();
    let t = m.len();
    let mut inv = vec![vec![Expr::zero(); t]; t];
    for i in 0..t {
        inv[i][i] = Expr::one() / &m[i][i];
        for j in (i + 1)..t {
            let acc: Expr = (i..j).map(|k| &inv[i][k] * &m[k][j]).sum();
            inv[i][j] = -(acc / &m[j][j]);
        }
    }
    (0..t).map(|i| (0..t).map(|c| inv[c][i].clone()).collect()).collect()
}

/// The frame derivative operators as exact maps on expressions.
#[derive(Clone, Debug)]
pub struct FrameOperators {
    h: Expr,
    w: Vec<Expr>,
    e: Vec<Vec<Expr>>,
}

impl FrameOperators {
    pub fn new(metric: &KundtMetric) -> FrameOperators {
        FrameOperators {
            h: metric.h().clone(),
            w: metric.w().to_vec(),
            e: symbolic_inverse_frame(metric),
        }
    }

    /// `D_a f` with `a` a frame index (1, 2, or 3..=N).
    pub fn apply(&self, a: usize, f: &Expr) -> Expr {
        match a {
            1 => f.diff(Coord::V),
            2 => f.diff(Coord::U) - &self.h * f.diff(Coord::V),
            k => {
                let i = k - 3;
                let fv = f.diff(Coord::V);
                (0..=i)
                    .map(|c| &self.e[i][c] * (f.diff(Coord::x(c + 3)) - &self.w[c] * &fv))
                    .sum()
            }
        }
    }

    pub fn inverse_frame(&self) -> &[Vec<Expr>] {
        &self.e
    }
}

/// `D_a f` for frame index `a` (1, 2, or 3..=N).
pub fn frame_derivative(which: usize, field: &Expr, metric: &KundtMetric) -> Expr {
    FrameOperators::new(metric).apply(which, field)
}

/// Default fields whose commutators are checked.
pub fn commutator_test_fields(n: usize) -> Vec<Expr> {
    let mut out = vec![
        Expr::v(),
        Expr::u() * Expr::x(3),
        Expr::v() * Expr::x(3).sin() + Expr::u().powi(2),
    ];
    let last = Expr::x(n);
    out.push((Expr::x(3) * &last).exp() + Expr::v().powi(2) * Expr::u());
    out
}

/// Residuals of the frame commutation relations
/// `[D₂,D_j]f = J_j D₁f - Σ_i B_ij D_i f`,
/// `[D_k,D_j]f = A_kj D₁f + 2Σ_i Γ_i[kj] D_i f` and `[D₁,D_a]f = 0`.
pub fn check_commutators(metric: &KundtMetric, fields: &[Expr], plan: &SamplePlan) -> Vec<Check> {
    let space = JetSpace::new(metric.dimension(), 3);
    let t = metric.transverse_dim();
    let mut w2 = Worst::new();
    let mut wt = Worst::new();
    let mut w1 = Worst::new();
    for p in plan.points() {
        let fj = match FrameJets::build(metric, &space, &p) {
            Ok(f) => f,
            Err(e) => {
                w2.fail(&p, e.to_string());
                continue;
            }
        };
        for f in fields {
            let f = match f.eval_jet(&space, &p) {
                Ok(f) => f,
                Err(e) => {
                    w2.fail(&p, e.to_string());
                    continue;
                }
            };
            let d: Vec<Jet> = (0..metric.dimension()).map(|a| fj.frame_derivative(a, &f)).collect();
            for a in 0..metric.dimension() {
                let lhs = fj.frame_derivative(0, &d[a]) - fj.frame_derivative(a, &d[0]);
                w1.observe(lhs.value().abs(), &p);
            }
            for jj in 0..t {
                let lhs = fj.frame_derivative(1, &d[jj + 2]) - fj.frame_derivative(jj + 2, &d[1]);
                let mut rhs = fj.j[jj].value() * d[0].value();
                for i in 0..t {
                    rhs -= fj.b[i][jj].value() * d[i + 2].value();
                }
                w2.observe((lhs.value() - rhs).abs(), &p);
                for k in 0..t {
                    let lhs = fj.frame_derivative(k + 2, &d[jj + 2]) - fj.frame_derivative(jj + 2, &d[k + 2]);
                    let mut rhs = fj.a[k][jj].value() * d[0].value();
                    for i in 0..t {
                        let g = fj.gamma_t(i, jj, k).value() - fj.gamma_t(i, k, jj).value();
                        rhs += g * d[i + 2].value();
                    }
                    wt.observe((lhs.value() - rhs).abs(), &p);
                }
            }
        }
    }
    vec![
        Check::bounded("commutator_D2_Dj", &w2, 1e-10),
        Check::bounded("commutator_Dk_Dj", &wt, 1e-10),
        Check::bounded("commutator_D1_Da", &w1, 1e-10),
    ]
}
