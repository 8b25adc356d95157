//! Coordinate-basis curvature used to check the frame formulas.
//!
//! Metric derivatives are exact symbolic derivatives of the metric
//! components; everything after that (inverse, Christoffels, Riemann, its
//! covariant derivative, frame projection) is plain floating point.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curvature::{covariant_derivative_riemann, CurvatureJets};
use crate::expr::jet::JetSpace;
use crate::expr::{Coord, Expr};
use crate::frame::{raise, FrameError, FrameJets};
use crate::invariants::InvariantValues;
use crate::metric::KundtMetric;
use crate::report::{rel_err, Check, Worst};
use crate::sample::{Point, SamplePlan};

/// Symbolic partial derivatives of a symmetric metric up to a fixed order.
/// Metric index `a` refers to chart coordinate `coords[a]`.
#[derive(Clone, Debug)]
pub struct MetricDerivatives {
    dim: usize,
    order: usize,
    g: Vec<Expr>,
    d1: Vec<Expr>,
    d2: Vec<Expr>,
    d3: Vec<Expr>,
}

impl MetricDerivatives {
    pub fn new(g: &[Vec<Expr>], coords: &[Coord], order: usize) -> MetricDerivatives {
        let dim = g.len();
        assert_eq!(coords.len(), dim);
        let n2 = dim * dim;
        let mut flat = vec![Expr::zero(); n2];
        let mut d1 = vec![Expr::zero(); n2 * dim];
        let mut d2 = vec![Expr::zero(); if order >= 2 { n2 * dim * dim } else { 0 }];
        let mut d3 = vec![Expr::zero(); if order >= 3 { n2 * dim * dim * dim } else { 0 }];
        for a in 0..dim {
            for b in a..dim {
                let base = &g[a][b];
                flat[a * dim + b] = base.clone();
                flat[b * dim + a] = base.clone();
                for c in 0..dim {
                    let dc = base.diff(coords[c]);
                    for (x, y) in [(a, b), (b, a)] {
                        d1[(x * dim + y) * dim + c] = dc.clone();
                    }
                    if order < 2 {
                        continue;
                    }
                    for d in c..dim {
                        let dcd = dc.diff(coords[d]);
                        for (x, y) in [(a, b), (b, a)] {
                            for (p, q) in [(c, d), (d, c)] {
                                d2[((x * dim + y) * dim + p) * dim + q] = dcd.clone();
                            }
                        }
                        if order < 3 {
                            continue;
                        }
                        for e in d..dim {
                            let dcde = dcd.diff(coords[e]);
                            for (x, y) in [(a, b), (b, a)] {
                                for perm in [[c, d, e], [c, e, d], [d, c, e], [d, e, c], [e, c, d], [e, d, c]] {
                                    let k = (((x * dim + y) * dim + perm[0]) * dim + perm[1]) * dim + perm[2];
                                    d3[k] = dcde.clone();
                                }
                            }
                        }
                    }
                }
            }
        }
        MetricDerivatives {
            dim,
            order,
            g: flat,
            d1,
            d2,
            d3,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &Point) -> Result<NumericDerivatives, FrameError> {
        let dim = self.dim;
        let ev = |v: &[Expr]| -> Result<Vec<f64>, FrameError> {
            v.iter()
                .map(|e| match e.as_const() {
                    Some(c) => Ok(c),
                    None => e.eval(p).map_err(FrameError::eval(p)),
                })
                .collect()
        };
        let g = ev(&self.g)?;
        Ok(NumericDerivatives {
            dim,
            order: self.order,
            g: DMatrix::from_row_slice(dim, dim, &g),
            d1: ev(&self.d1)?,
            d2: ev(&self.d2)?,
            d3: ev(&self.d3)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct NumericDerivatives {
    pub dim: usize,
    pub order: usize,
    pub g: DMatrix<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

impl NumericDerivatives {
    fn dg(&self, a: usize, b: usize, c: usize) -> f64 {
        self.d1[(a * self.dim + b) * self.dim + c]
    }
    fn ddg(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim;
        self.d2[((a * n + b) * n + c) * n + d]
    }
    fn dddg(&self, a: usize, b: usize, c: usize, d: usize, e: usize) -> f64 {
        let n = self.dim;
        self.d3[(((a * n + b) * n + c) * n + d) * n + e]
    }
}

/// Curvature of a metric in its coordinate basis at one point.
#[derive(Clone, Debug)]
pub struct CoordinateCurvature {
    pub dim: usize,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// `Γ_abc = ½(∂_c g_ab + ∂_b g_ac - ∂_a g_bc)`, flattened.
    pub gamma_lower: Vec<f64>,
    /// `Γ^a_bc`, flattened.
    pub gamma: Vec<f64>,
    /// `R_abcd`, flattened; empty below order 2.
    pub riemann: Vec<f64>,
    /// `∇_e R_abcd` as `[e][a][b][c][d]`; empty below order 3.
    pub nabla_riemann: Vec<f64>,
}

impl CoordinateCurvature {
    pub fn from_derivatives(nd: &NumericDerivatives, p: &Point) -> Result<CoordinateCurvature, FrameError> {
        let n = nd.dim;
        let ginv =
            nd.g.clone()
                .try_inverse()
                .ok_or_else(|| FrameError::Singular(p.coords().to_vec()))?;
        let i3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let mut gl = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gl[i3(a, b, c)] = 0.5 * (nd.dg(a, b, c) + nd.dg(a, c, b) - nd.dg(b, c, a));
                }
            }
        }
        let mut gu = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gu[i3(a, b, c)] = (0..n).map(|l| ginv[(a, l)] * gl[i3(l, b, c)]).sum();
                }
            }
        }
        let mut out = CoordinateCurvature {
            dim: n,
            g: nd.g.clone(),
            ginv,
            gamma_lower: gl,
            gamma: gu,
            riemann: Vec::new(),
            nabla_riemann: Vec::new(),
        };
        if nd.order >= 2 {
            out.riemann = out.riemann_from(nd);
        }
        if nd.order >= 3 {
            out.nabla_riemann = out.nabla_from(nd);
        }
        Ok(out)
    }

    fn riemann_from(&self, nd: &NumericDerivatives) -> Vec<f64> {
        let n = self.dim;
        let gl = |a: usize, b: usize, c: usize| self.gamma_lower[(a * n + b) * n + c];
        let gu = |a: usize, b: usize, c: usize| self.gamma[(a * n + b) * n + c];
        let mut r = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v =
                            0.5 * (nd.ddg(a, d, b, c) + nd.ddg(b, c, a, d) - nd.ddg(a, c, b, d) - nd.ddg(b, d, a, c));
                        for l in 0..n {
                            v += gl(l, b, c) * gu(l, a, d) - gl(l, b, d) * gu(l, a, c);
                        }
                        r[((a * n + b) * n + c) * n + d] = v;
                    }
                }
            }
        }
        r
    }

    fn nabla_from(&self, nd: &NumericDerivatives) -> Vec<f64> {
        let n = self.dim;
        let n3 = n * n * n;
        let n4 = n3 * n;
        let i3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let gl = |a: usize, b: usize, c: usize| self.gamma_lower[i3(a, b, c)];
        let gu = |a: usize, b: usize, c: usize| self.gamma[i3(a, b, c)];
        let ri = |a: usize, b: usize, c: usize, d: usize| self.riemann[((a * n + b) * n + c) * n + d];
        let mut out = vec![0.0; n * n4];
        for e in 0..n {
            // ∂_e of Γ_abc and Γ^a_bc
            let mut dgl = vec![0.0; n3];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        dgl[i3(a, b, c)] = 0.5 * (nd.ddg(a, b, c, e) + nd.ddg(a, c, b, e) - nd.ddg(b, c, a, e));
                    }
                }
            }
            let dg_e = DMatrix::from_fn(n, n, |a, b| nd.dg(a, b, e));
            let dginv = -(&self.ginv * dg_e * &self.ginv);
            let mut dgu = vec![0.0; n3];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        dgu[i3(a, b, c)] = (0..n)
                            .map(|l| dginv[(a, l)] * gl(l, b, c) + self.ginv[(a, l)] * dgl[i3(l, b, c)])
                            .sum();
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut v = 0.5
                                * (nd.dddg(a, d, b, c, e) + nd.dddg(b, c, a, d, e)
                                    - nd.dddg(a, c, b, d, e)
                                    - nd.dddg(b, d, a, c, e));
                            for l in 0..n {
                                v += dgl[i3(l, b, c)] * gu(l, a, d) + gl(l, b, c) * dgu[i3(l, a, d)]
                                    - dgl[i3(l, b, d)] * gu(l, a, c)
                                    - gl(l, b, d) * dgu[i3(l, a, c)];
                            }
                            for f in 0..n {
                                v -= gu(f, e, a) * ri(f, b, c, d)
                                    + gu(f, e, b) * ri(a, f, c, d)
                                    + gu(f, e, c) * ri(a, b, f, d)
                                    + gu(f, e, d) * ri(a, b, c, f);
                            }
                            out[e * n4 + ((a * n + b) * n + c) * n + d] = v;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |b, d| {
            let mut v = 0.0;
            for a in 0..n {
                for c in 0..n {
                    v += self.ginv[(a, c)] * self.riemann[((a * n + b) * n + c) * n + d];
                }
            }
            v
        })
    }

    /// The six polynomial invariants by contraction with `g^ab`.
    pub fn invariants(&self) -> InvariantValues {
        let n = self.dim;
        let ric = self.ricci();
        let ricci_scalar = (&self.ginv * &ric).trace();
        let mixed = &ric * &self.ginv;
        let ricci_squared = (&mixed * &mixed).trace();
        let ricci_cubed = (&mixed * &mixed * &mixed).trace();
        let up = raise_all(&self.riemann, &self.ginv, n, 4);
        let kretschmann = self.riemann.iter().zip(&up).map(|(a, b)| a * b).sum();
        let mut out = InvariantValues {
            ricci_scalar,
            ricci_squared,
            kretschmann,
            ricci_cubed,
            grad_ricci_scalar_sq: f64::NAN,
            grad_riemann_sq: f64::NAN,
        };
        if !self.nabla_riemann.is_empty() {
            let n4 = n * n * n * n;
            // ∇_e R = g^ac g^bd ∇_e R_abcd
            let grad: Vec<f64> = (0..n)
                .map(|e| {
                    let mut v = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            for c in 0..n {
                                for d in 0..n {
                                    v += self.ginv[(a, c)]
                                        * self.ginv[(b, d)]
                                        * self.nabla_riemann[e * n4 + ((a * n + b) * n + c) * n + d];
                                }
                            }
                        }
                    }
                    v
                })
                .collect();
            let mut dr2 = 0.0;
            for e in 0..n {
                for f in 0..n {
                    dr2 += self.ginv[(e, f)] * grad[e] * grad[f];
                }
            }
            out.grad_ricci_scalar_sq = dr2;
            let up = raise_all(&self.nabla_riemann, &self.ginv, n, 5);
            out.grad_riemann_sq = self.nabla_riemann.iter().zip(&up).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Raise every index of a flattened rank-`rank` tensor.
fn raise_all(t: &[f64], ginv: &DMatrix<f64>, n: usize, rank: usize) -> Vec<f64> {
    let mut cur = t.to_vec();
    for slot in 0..rank {
        let stride = n.pow((rank - 1 - slot) as u32);
        let mut next = vec![0.0; cur.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let k = (flat / stride) % n;
            let base = flat - k * stride;
            let mut v = 0.0;
            for l in 0..n {
                v += ginv[(k, l)] * cur[base + l * stride];
            }
            *out = v;
        }
        cur = next;
    }
    cur
}

/// Transform the slots of a flattened covariant tensor by `frame[a][α]`.
pub fn project(t: &[f64], frame: &DMatrix<f64>, n: usize, rank: usize) -> Vec<f64> {
    let mut cur = t.to_vec();
    for slot in 0..rank {
        let stride = n.pow((rank - 1 - slot) as u32);
        let mut next = vec![0.0; cur.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let a = (flat / stride) % n;
            let base = flat - a * stride;
            let mut v = 0.0;
            for al in 0..n {
                let f = frame[(a, al)];
                if f != 0.0 {
                    v += f * cur[base + al * stride];
                }
            }
            *out = v;
        }
        cur = next;
    }
    cur
}

/// Exact derivatives of the full coordinate metric together with the frame
/// matrix derivatives needed to recover the frame connection.
pub struct CoordinateOracle {
    metric: KundtMetric,
    derivs: MetricDerivatives,
    dm: Vec<Vec<Vec<Expr>>>,
}

/// Oracle quantities at one point.
pub struct OracleAt {
    pub curvature: CoordinateCurvature,
    /// Rows are frame vectors `e_a^α` in frame positions.
    pub frame: DMatrix<f64>,
    /// `Γ_abc = e_a^α g_αβ (e_c^γ ∂_γ e_b^β + Γ^β_γδ e_c^γ e_b^δ)`, flattened.
    pub frame_gamma: Vec<f64>,
}

impl OracleAt {
    pub fn frame_riemann(&self) -> Vec<f64> {
        project(&self.curvature.riemann, &self.frame, self.curvature.dim, 4)
    }

    pub fn frame_nabla_riemann(&self) -> Vec<f64> {
        project(&self.curvature.nabla_riemann, &self.frame, self.curvature.dim, 5)
    }

    pub fn frame_ricci(&self) -> Vec<f64> {
        let n = self.curvature.dim;
        let ric = self.curvature.ricci();
        let flat: Vec<f64> = (0..n * n).map(|k| ric[(k / n, k % n)]).collect();
        project(&flat, &self.frame, n, 2)
    }

    /// `∇_α ℓ_β = -Γ^u_αβ` for `ℓ = du`.
    pub fn nabla_ell(&self) -> DMatrix<f64> {
        let n = self.curvature.dim;
        DMatrix::from_fn(n, n, |a, b| -self.curvature.gamma[(a * n) + b])
    }
}

impl CoordinateOracle {
    /// `order` 2 gives Riemann, 3 adds `∇R`.
    pub fn new(metric: &KundtMetric, order: usize) -> CoordinateOracle {
        let n = metric.dimension();
        let coords: Vec<Coord> = (0..n).map(Coord).collect();
        let derivs = MetricDerivatives::new(&metric.coordinate_metric(), &coords, order);
        let dm = metric
            .frame()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|m| coords.iter().map(|&c| m.diff(c)).collect())
                    .collect()
            })
            .collect();
        CoordinateOracle {
            metric: metric.clone(),
            derivs,
            dm,
        }
    }

    pub fn at(&self, p: &Point) -> Result<OracleAt, FrameError> {
        let n = self.metric.dimension();
        let t = n - 2;
        let nd = self.derivs.eval(p)?;
        let curvature = CoordinateCurvature::from_derivatives(&nd, p)?;
        let h = 0.5 * nd.g[(0, 0)];
        let w: Vec<f64> = (0..t).map(|c| nd.g[(0, c + 2)]).collect();
        let m = self.metric.frame_at(p).map_err(FrameError::eval(p))?;
        let minv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| FrameError::Singular(p.coords().to_vec()))?;
        let e_of = |mi: &DMatrix<f64>, i: usize, c: usize| mi[(c, i)];
        let mut frame = DMatrix::zeros(n, n);
        frame[(0, 1)] = 1.0;
        frame[(1, 0)] = 1.0;
        frame[(1, 1)] = -h;
        for i in 0..t {
            let mut wv = 0.0;
            for c in 0..t {
                frame[(i + 2, c + 2)] = e_of(&minv, i, c);
                wv += e_of(&minv, i, c) * w[c];
            }
            frame[(i + 2, 1)] = -wv;
        }

        // ∂_γ e_b^β
        let mut dframe = vec![DMatrix::<f64>::zeros(n, n); n];
        for (gam, df) in dframe.iter_mut().enumerate() {
            let dm = DMatrix::from_fn(t, t, |i, e| {
                if e >= i {
                    self.dm[i][e][gam].eval(p).unwrap_or(f64::NAN)
                } else {
                    0.0
                }
            });
            let dminv = -(&minv * dm * &minv);
            df[(1, 1)] = -0.5 * nd.dg(0, 0, gam);
            for i in 0..t {
                let mut dwv = 0.0;
                for c in 0..t {
                    df[(i + 2, c + 2)] = e_of(&dminv, i, c);
                    dwv += e_of(&dminv, i, c) * w[c] + e_of(&minv, i, c) * nd.dg(0, c + 2, gam);
                }
                df[(i + 2, 1)] = -dwv;
            }
        }
        let gu = |a: usize, b: usize, c: usize| curvature.gamma[(a * n + b) * n + c];
        let mut frame_gamma = vec![0.0; n * n * n];
        for b in 0..n {
            for c in 0..n {
                // (∇_{e_c} e_b)^β
                let mut nab = vec![0.0; n];
                for (beta, slot) in nab.iter_mut().enumerate() {
                    let mut v = 0.0;
                    for gam in 0..n {
                        v += frame[(c, gam)] * dframe[gam][(b, beta)];
                        for del in 0..n {
                            v += gu(beta, gam, del) * frame[(c, gam)] * frame[(b, del)];
                        }
                    }
                    *slot = v;
                }
                for a in 0..n {
                    let mut v = 0.0;
                    for al in 0..n {
                        for be in 0..n {
                            v += frame[(a, al)] * curvature.g[(al, be)] * nab[be];
                        }
                    }
                    frame_gamma[(a * n + b) * n + c] = v;
                }
            }
        }
        Ok(OracleAt {
            curvature,
            frame,
            frame_gamma,
        })
    }
}

/// Largest relative errors of the frame formulas against the oracle.
#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    pub points: usize,
    pub checks: Vec<Check>,
}

impl OracleComparison {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.checks.iter().map(|c| c.max_value).fold(0.0, f64::max)
    }
}

fn observe_rel(worst: &mut Worst, a: &[f64], b: &[f64], p: &Point) {
    for (x, y) in a.iter().zip(b) {
        worst.observe(rel_err(*x, *y), p);
    }
}

/// Compare connection, Riemann, Ricci (printed and contracted) and, when
/// `with_nabla`, `∇R` between the frame path and the coordinate oracle.
pub fn oracle_compare(metric: &KundtMetric, plan: &SamplePlan, rel_tol: f64, with_nabla: bool) -> OracleComparison {
    let n = metric.dimension();
    let t = n - 2;
    let order = if with_nabla { 3 } else { 2 };
    let oracle = CoordinateOracle::new(metric, order);
    let space = JetSpace::new(n, order);
    let mut conn = Worst::new();
    let mut riem = Worst::new();
    let mut ric_c = Worst::new();
    let mut ric_p = Worst::new();
    let mut nab = Worst::new();
    let points = plan.points();
    for p in &points {
        let (o, fj) = match (oracle.at(p), FrameJets::build(metric, &space, p)) {
            (Ok(o), Ok(f)) => (o, f),
            (Err(e), _) | (_, Err(e)) => {
                riem.fail(p, e.to_string());
                continue;
            }
        };
        let fg: Vec<f64> = (0..n * n * n)
            .map(|k| fj.gamma(k / (n * n), (k / n) % n, k % n).value())
            .collect();
        observe_rel(&mut conn, &fg, &o.frame_gamma, p);
        let cj = CurvatureJets::build(&fj);
        let c = cj.values();
        observe_rel(&mut riem, &c.riemann, &o.frame_riemann(), p);
        let oric = o.frame_ricci();
        observe_rel(&mut ric_c, &c.ricci, &oric, p);
        let mut printed = vec![c.ricci_22];
        let mut expect = vec![oric[n + 1]];
        for i in 0..t {
            printed.push(c.ricci_2i[i]);
            expect.push(oric[n + i + 2]);
            for j in 0..t {
                printed.push(c.ricci_ij[i][j]);
                expect.push(oric[(i + 2) * n + j + 2]);
            }
        }
        observe_rel(&mut ric_p, &printed, &expect, p);
        if with_nabla {
            let frame_nab = covariant_derivative_riemann(&fj, &cj);
            observe_rel(&mut nab, &frame_nab, &o.frame_nabla_riemann(), p);
        }
    }
    let mut checks = vec![
        Check::bounded("connection", &conn, rel_tol),
        Check::bounded("riemann", &riem, rel_tol),
        Check::bounded("ricci_contracted", &ric_c, rel_tol),
        Check::bounded("ricci_printed", &ric_p, rel_tol),
    ];
    if with_nabla {
        // The oracle's ∇R goes through third derivatives of g and inverse
        // products of them, which costs it about two digits.
        checks.push(Check::bounded("nabla_riemann", &nab, rel_tol * 100.0));
    }
    OracleComparison {
        points: points.len(),
        checks,
    }
}

/// CCNV report: `∇_α ℓ_β` from the coordinate Christoffels, and the frame
/// projections `L_ab = e_a^α e_b^β ∇_β ℓ_α` split into geodesy, expansion,
/// shear and twist.
pub fn check_ccnv(metric: &KundtMetric, plan: &SamplePlan) -> Vec<Check> {
    let n = metric.dimension();
    let t = n - 2;
    let oracle = CoordinateOracle::new(metric, 1);
    let mut nab = Worst::new();
    let mut geo = Worst::new();
    let mut exp = Worst::new();
    let mut shear = Worst::new();
    let mut twist = Worst::new();
    for p in plan.points() {
        let o = match oracle.at(&p) {
            Ok(o) => o,
            Err(e) => {
                nab.fail(&p, e.to_string());
                continue;
            }
        };
        let d = o.nabla_ell();
        nab.observe(d.abs().max(), &p);
        // L_ab = e_a^α e_b^β ∇_β ℓ_α, with ∇_β ℓ_α = d[(β, α)]
        let l = &o.frame * d.transpose() * o.frame.transpose();
        let mut g: f64 = 0.0;
        for i in 0..t {
            g = g.max(l[(i + 2, 0)].abs());
        }
        geo.observe(g, &p);
        let trace: f64 = (0..t).map(|i| l[(i + 2, i + 2)]).sum();
        exp.observe(trace.abs(), &p);
        let mut s: f64 = 0.0;
        let mut w: f64 = 0.0;
        for i in 0..t {
            for j in 0..t {
                let lij = l[(i + 2, j + 2)];
                let lji = l[(j + 2, i + 2)];
                let delta = if i == j { trace / t as f64 } else { 0.0 };
                s = s.max((0.5 * (lij + lji) - delta).abs());
                w = w.max((0.5 * (lij - lji)).abs());
            }
        }
        shear.observe(s, &p);
        twist.observe(w, &p);
    }
    vec![
        Check::bounded("nabla_ell", &nab, 1e-10),
        Check::bounded("geodesic", &geo, 1e-10),
        Check::bounded("expansion", &exp, 1e-10),
        Check::bounded("shear", &shear, 1e-10),
        Check::bounded("twist", &twist, 1e-10),
    ]
}

/// `max |R_αβγδ ℓ^α|` with `ℓ^α = ∂_v`, from the coordinate Riemann tensor.
pub fn max_coordinate_ell_contraction(metric: &KundtMetric, plan: &SamplePlan) -> Result<f64, FrameError> {
    let n = metric.dimension();
    let oracle = CoordinateOracle::new(metric, 2);
    let mut worst: f64 = 0.0;
    for p in plan.points() {
        let o = oracle.at(&p)?;
        for rest in 0..n * n * n {
            worst = worst.max(o.curvature.riemann[n * n * n + rest].abs());
        }
    }
    Ok(worst)
}

/// Invariants of the transverse Riemannian metric `g_ef(u, ·)` alone.
pub struct TransverseOracle {
    derivs: MetricDerivatives,
}

impl TransverseOracle {
    pub fn new(metric: &KundtMetric) -> TransverseOracle {
        let coords: Vec<Coord> = (0..metric.transverse_dim()).map(|e| Coord::x(e + 3)).collect();
        TransverseOracle {
            derivs: MetricDerivatives::new(&metric.transverse_metric(), &coords, 3),
        }
    }

    pub fn at(&self, p: &Point) -> Result<CoordinateCurvature, FrameError> {
        CoordinateCurvature::from_derivatives(&self.derivs.eval(p)?, p)
    }

    pub fn invariants(&self, p: &Point) -> Result<InvariantValues, FrameError> {
        Ok(self.at(p)?.invariants())
    }
}

/// `η` in frame positions as a matrix.
pub fn eta_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |a, b| if raise(a) == b { 1.0 } else { 0.0 })
}
