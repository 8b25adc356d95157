//! CCNV Kundt metrics
//! `ds² = 2du(dv + H du + Ŵ_e dx^e) + g_ef dx^e dx^f` with `g_ef = Σ_i m_ie m_if`.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Coord, EvalError, Expr};
use crate::report::{Check, Worst};
use crate::sample::{Point, SamplePlan};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("dimension must be at least 4, got {0}")]
    Dimension(usize),
    #[error("{what} has the wrong shape for dimension {dimension}")]
    Shape { what: &'static str, dimension: usize },
    #[error("frame matrix entry m[{row}][{col}] lies below the diagonal and must be 0")]
    NotUpperTriangular { row: usize, col: usize },
    #[error("{field} mentions a coordinate outside the chart of dimension {dimension}")]
    OutsideChart { field: String, dimension: usize },
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("Jacobian of the spatial map is singular at {0:?}")]
    SingularJacobian(Vec<f64>),
    #[error("the spatial map mixes x{from} into x{into}; the frame would lose its triangular form")]
    NonTriangularJacobian { from: usize, into: usize },
    #[error("u reparametrization is not affine (g'' = {second} at {point:?}); v-independence would be lost")]
    NonAffine { second: f64, point: Vec<f64> },
    #[error("u reparametrization has g' = 0")]
    DegenerateReparam,
    #[error("supplied primitive does not match: max |{what}| = {residual:e}")]
    Primitive { what: String, residual: f64 },
    #[error("frame matrix is rank deficient at {0:?}")]
    RankDeficient(Vec<f64>),
    #[error("validation failed: {check}: {detail}")]
    Invalid { check: String, detail: String },
}

/// Dimension `N`, `H`, `Ŵ_e` for `e = 3..=N` and the upper-triangular frame
/// matrix `m_ie` (rows `i`, columns `e`, both `3..=N`, stored from 0).
#[derive(Clone, Debug, PartialEq)]
pub struct KundtMetric {
    n: usize,
    h: Expr,
    w: Vec<Expr>,
    m: Vec<Vec<Expr>>,
}

impl KundtMetric {
    pub fn new(n: usize, h: Expr, w: Vec<Expr>, m: Vec<Vec<Expr>>) -> Result<KundtMetric, MetricError> {
        if n < 4 {
            return Err(MetricError::Dimension(n));
        }
        let t = n - 2;
        if w.len() != t {
            return Err(MetricError::Shape {
                what: "W",
                dimension: n,
            });
        }
        if m.len() != t || m.iter().any(|row| row.len() != t) {
            return Err(MetricError::Shape {
                what: "m",
                dimension: n,
            });
        }
        for (i, row) in m.iter().enumerate() {
            for (e, entry) in row.iter().enumerate().take(i) {
                if !entry.is_zero() {
                    return Err(MetricError::NotUpperTriangular { row: i + 3, col: e + 3 });
                }
            }
        }
        let metric = KundtMetric { n, h, w, m };
        for (name, field) in metric.named_fields() {
            if field.max_coord().is_some_and(|c| c >= n) {
                return Err(MetricError::OutsideChart {
                    field: name,
                    dimension: n,
                });
            }
        }
        Ok(metric)
    }

    /// Flat transverse space and `H = Ŵ = 0`.
    pub fn minkowski(n: usize) -> KundtMetric {
        KundtMetric::flat_transverse(n, Expr::zero(), vec![Expr::zero(); n - 2])
    }

    pub fn flat_transverse(n: usize, h: Expr, w: Vec<Expr>) -> KundtMetric {
        KundtMetric::new(n, h, w, identity_frame(n - 2)).expect("flat transverse metric")
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Number of transverse directions, `N - 2`.
    pub fn transverse_dim(&self) -> usize {
        self.n - 2
    }

    pub fn h(&self) -> &Expr {
        &self.h
    }

    /// `Ŵ_e` for `e = 3..=N`, index 0 is `Ŵ_3`.
    pub fn w(&self) -> &[Expr] {
        &self.w
    }

    pub fn frame(&self) -> &[Vec<Expr>] {
        &self.m
    }

    pub fn with_h(&self, h: Expr) -> KundtMetric {
        KundtMetric { h, ..self.clone() }
    }

    pub fn with_w(&self, w: Vec<Expr>) -> Result<KundtMetric, MetricError> {
        KundtMetric::new(self.n, self.h.clone(), w, self.m.clone())
    }

    pub fn with_frame(&self, m: Vec<Vec<Expr>>) -> Result<KundtMetric, MetricError> {
        KundtMetric::new(self.n, self.h.clone(), self.w.clone(), m)
    }

    pub fn named_fields(&self) -> Vec<(String, &Expr)> {
        let mut out = vec![("H".to_string(), &self.h)];
        for (e, w) in self.w.iter().enumerate() {
            out.push((format!("W{}", e + 3), w));
        }
        for (i, row) in self.m.iter().enumerate() {
            for (e, m) in row.iter().enumerate() {
                out.push((format!("m[{}][{}]", i + 3, e + 3), m));
            }
        }
        out
    }

    /// `g_ef = Σ_i m_ie m_if`.
    pub fn transverse_metric(&self) -> Vec<Vec<Expr>> {
        let t = self.transverse_dim();
        let mut g = vec![vec![Expr::zero(); t]; t];
        for e in 0..t {
            for f in e..t {
                let entry: Expr = (0..=e.min(f)).map(|i| &self.m[i][e] * &self.m[i][f]).sum();
                g[e][f] = entry.clone();
                g[f][e] = entry;
            }
        }
        g
    }

    /// Full `g_αβ` in chart order `(u, v, x3, ..., xN)`.
    pub fn coordinate_metric(&self) -> Vec<Vec<Expr>> {
        let n = self.n;
        let mut g = vec![vec![Expr::zero(); n]; n];
        g[0][0] = 2.0 * &self.h;
        g[0][1] = Expr::one();
        g[1][0] = Expr::one();
        for (e, w) in self.w.iter().enumerate() {
            g[0][e + 2] = w.clone();
            g[e + 2][0] = w.clone();
        }
        for (e, row) in self.transverse_metric().into_iter().enumerate() {
            for (f, entry) in row.into_iter().enumerate() {
                g[e + 2][f + 2] = entry;
            }
        }
        g
    }

    pub fn frame_at(&self, p: &Point) -> Result<DMatrix<f64>, EvalError> {
        let t = self.transverse_dim();
        let mut out = DMatrix::zeros(t, t);
        for i in 0..t {
            for e in i..t {
                out[(i, e)] = self.m[i][e].eval(p)?;
            }
        }
        Ok(out)
    }

    pub fn coordinate_metric_at(&self, p: &Point) -> Result<DMatrix<f64>, EvalError> {
        let n = self.n;
        let m = self.frame_at(p)?;
        let g_t = m.transpose() * &m;
        let mut g = DMatrix::zeros(n, n);
        g[(0, 0)] = 2.0 * self.h.eval(p)?;
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
        for e in 0..n - 2 {
            let w = self.w[e].eval(p)?;
            g[(0, e + 2)] = w;
            g[(e + 2, 0)] = w;
            for f in 0..n - 2 {
                g[(e + 2, f + 2)] = g_t[(e, f)];
            }
        }
        Ok(g)
    }

    /// Structural and pointwise checks of the CCNV form.
    pub fn validate(&self, plan: &SamplePlan) -> ValidationReport {
        let mut checks = Vec::new();

        let v_fields: Vec<String> = self
            .named_fields()
            .into_iter()
            .filter(|(_, f)| f.depends_on(Coord::V))
            .map(|(name, _)| name)
            .collect();
        checks.push(Check::structural(
            "v_independence",
            v_fields.is_empty(),
            if v_fields.is_empty() {
                String::new()
            } else {
                format!("depends on v: {}", v_fields.join(", "))
            },
        ));

        let below: Vec<String> = (0..self.transverse_dim())
            .flat_map(|i| (0..i).map(move |e| (i, e)))
            .filter(|&(i, e)| !self.m[i][e].is_zero())
            .map(|(i, e)| format!("m[{}][{}]", i + 3, e + 3))
            .collect();
        checks.push(Check::structural(
            "upper_triangular",
            below.is_empty(),
            below.join(", "),
        ));

        let mut domain = Worst::new();
        let mut diag = Worst::new();
        let mut min_diag = f64::INFINITY;
        let mut pd = Worst::new();
        let mut gauge = Worst::new();
        for p in plan.points() {
            let m = match self.frame_at(&p) {
                Ok(m) => m,
                Err(e) => {
                    domain.fail(&p, e.to_string());
                    continue;
                }
            };
            if let Err(e) = self
                .h
                .eval(&p)
                .and_then(|_| self.w.iter().try_for_each(|w| w.eval(&p).map(|_| ())))
            {
                domain.fail(&p, e.to_string());
                continue;
            }
            for i in 0..self.transverse_dim() {
                let d = m[(i, i)].abs();
                if d < min_diag {
                    min_diag = d;
                    diag.point = Some(p.clone());
                }
            }
            // Leading principal minors of g = mᵀm, normalized by the diagonal scale.
            let g = m.transpose() * &m;
            for k in 1..=g.nrows() {
                let minor = g.view((0, 0), (k, k)).determinant();
                let scale: f64 = (0..k).map(|j| g[(j, j)]).product();
                if !(minor > 1e-14 * scale.abs().max(1e-300)) {
                    pd.fail(&p, format!("leading minor {k} = {minor:e}"));
                }
            }
            match self.w[0].eval(&p) {
                Ok(w3) => gauge.observe(w3.abs(), &p),
                Err(e) => gauge.fail(&p, e.to_string()),
            }
        }
        checks.push(Check::bounded("domain", &domain, 0.0));
        diag.value = if min_diag.is_finite() { min_diag } else { 0.0 };
        checks.push(Check {
            name: "diagonal_nonvanishing".into(),
            passed: min_diag > 1e-12 || plan.count == 0,
            max_value: diag.value,
            tolerance: 1e-12,
            worst_point: diag.point.map(|p| p.coords().to_vec()),
            detail: "smallest |m_ii| over the samples".into(),
        });
        checks.push(Check::bounded("positive_definite", &pd, 0.0));
        checks.push(Check::bounded("w3_gauge", &gauge, 1e-12).with_detail("Ŵ3 = 0 is assumed by the Killing analysis"));
        ValidationReport { checks }
    }

    /// Validation as a hard error carrying the first violated check.
    pub fn ensure_valid(&self, plan: &SamplePlan) -> Result<(), MetricError> {
        let report = self.validate(plan);
        match report.first_failure() {
            None => Ok(()),
            Some(c) => Err(MetricError::Invalid {
                check: c.name.clone(),
                detail: c.detail.clone(),
            }),
        }
    }

    /// Shift `v' = v + h(u, x)`: `H' = H - h_u`, `Ŵ'_e = Ŵ_e - h_e`.
    pub fn transform_shift_v(&self, h: &Expr) -> KundtMetric {
        let w = self
            .w
            .iter()
            .enumerate()
            .map(|(e, w)| w - h.diff(Coord::x(e + 3)))
            .collect();
        KundtMetric {
            n: self.n,
            h: &self.h - h.diff(Coord::U),
            w,
            m: self.m.clone(),
        }
    }

    /// Shift `v` by a primitive of `Ŵ3` in `x3`, checking `∂_3 h = Ŵ3` on
    /// the samples first. The result has `Ŵ3 = 0` identically.
    pub fn eliminate_w3(&self, h: &Expr, plan: &SamplePlan) -> Result<KundtMetric, MetricError> {
        let residual = h.diff(Coord::x(3)) - &self.w[0];
        let worst = max_abs(&residual, plan)?;
        if worst > 1e-10 {
            return Err(MetricError::Primitive {
                what: "∂_3 h - Ŵ3".into(),
                residual: worst,
            });
        }
        let mut out = self.transform_shift_v(h);
        out.w[0] = Expr::zero();
        Ok(out)
    }

    /// `u' = g(u)`, `v' = v / g'(u)` for affine `g`. Fields are re-expressed in
    /// the new `u` and scaled: `H' = H/g'^2`, `Ŵ' = Ŵ/g'`.
    pub fn transform_reparam_u(&self, g: &Expr, plan: &SamplePlan) -> Result<KundtMetric, MetricError> {
        let g1 = g.diff(Coord::U);
        let g2 = g1.diff(Coord::U);
        for p in plan.points() {
            let second = g2.eval(&p).map_err(|source| MetricError::Eval {
                point: p.coords().to_vec(),
                source,
            })?;
            if second.abs() > 1e-12 {
                return Err(MetricError::NonAffine {
                    second,
                    point: p.coords().to_vec(),
                });
            }
        }
        let origin = Point::new(vec![0.0; self.n]);
        let eval0 = |e: &Expr| {
            e.eval(&origin).map_err(|source| MetricError::Eval {
                point: origin.coords().to_vec(),
                source,
            })
        };
        let c1 = eval0(&g1)?;
        let c2 = eval0(g)?;
        if c1 == 0.0 {
            return Err(MetricError::DegenerateReparam);
        }
        let old_u = (Expr::u() - c2) / c1;
        let back = |e: &Expr| e.substitute(Coord::U, &old_u);
        Ok(KundtMetric {
            n: self.n,
            h: back(&self.h) / (c1 * c1),
            w: self.w.iter().map(|w| back(w) / c1).collect(),
            m: self.m.iter().map(|row| row.iter().map(back).collect()).collect(),
        })
    }

    /// Spatial change of chart given by the old coordinates as functions of
    /// the new ones, `x^e = φ^e(u, x')`. With `J = ∂φ/∂x'`:
    /// `H' = H + Ŵ_e φ^e_u + ½ g_ef φ^e_u φ^f_u`, `Ŵ'_h = (Ŵ_e + g_ef φ^f_u) J^e_h`,
    /// `m' = m J`, all composed with `φ`.
    ///
    /// `m J` stays upper triangular only when `φ^e` depends on `x'^f` for
    /// `f >= e` alone; other maps are rejected (use [`qr_upper_triangularize`]
    /// pointwise for those).
    pub fn transform_spatial(&self, phi: &[Expr], plan: &SamplePlan) -> Result<KundtMetric, MetricError> {
        let t = self.transverse_dim();
        if phi.len() != t {
            return Err(MetricError::Shape {
                what: "spatial map",
                dimension: self.n,
            });
        }
        for (e, f) in phi.iter().enumerate() {
            if f.depends_on(Coord::V) {
                return Err(MetricError::OutsideChart {
                    field: format!("x{} map (v)", e + 3),
                    dimension: self.n,
                });
            }
            for k in 0..e {
                if f.depends_on(Coord::x(k + 3)) {
                    return Err(MetricError::NonTriangularJacobian {
                        from: k + 3,
                        into: e + 3,
                    });
                }
            }
        }
        let compose = |e: &Expr| compose_spatial(e, phi, self.n);
        let jac: Vec<Vec<Expr>> = phi
            .iter()
            .map(|f| (0..t).map(|h| f.diff(Coord::x(h + 3))).collect())
            .collect();
        let phi_u: Vec<Expr> = phi.iter().map(|f| f.diff(Coord::U)).collect();
        for p in plan.points() {
            let mut det = 1.0;
            for (e, row) in jac.iter().enumerate() {
                det *= row[e].eval(&p).map_err(|source| MetricError::Eval {
                    point: p.coords().to_vec(),
                    source,
                })?;
            }
            if det.abs() < 1e-12 {
                return Err(MetricError::SingularJacobian(p.coords().to_vec()));
            }
        }

        let g: Vec<Vec<Expr>> = self
            .transverse_metric()
            .iter()
            .map(|row| row.iter().map(compose).collect())
            .collect();
        let w: Vec<Expr> = self.w.iter().map(compose).collect();
        let mut h = compose(&self.h);
        for e in 0..t {
            h = h + &w[e] * &phi_u[e];
            for f in 0..t {
                h = h + 0.5 * &g[e][f] * &phi_u[e] * &phi_u[f];
            }
        }
        let new_w: Vec<Expr> = (0..t)
            .map(|hh| {
                (0..t)
                    .map(|e| {
                        let cov: Expr = (0..t).map(|f| &g[e][f] * &phi_u[f]).sum();
                        (&w[e] + cov) * &jac[e][hh]
                    })
                    .sum()
            })
            .collect();
        let m_old: Vec<Vec<Expr>> = self.m.iter().map(|row| row.iter().map(compose).collect()).collect();
        let m_new: Vec<Vec<Expr>> = (0..t)
            .map(|i| {
                (0..t)
                    .map(|hh| {
                        if hh < i {
                            Expr::zero()
                        } else {
                            (i..=hh).map(|e| &m_old[i][e] * &jac[e][hh]).sum()
                        }
                    })
                    .collect()
            })
            .collect();
        KundtMetric::new(self.n, h, new_w, m_new)
    }

    /// Largest pointwise difference of `H`, `Ŵ` and `g_ef` against another metric.
    pub fn max_field_difference(&self, other: &KundtMetric, plan: &SamplePlan) -> Result<f64, MetricError> {
        let mut worst: f64 = 0.0;
        for p in plan.points() {
            let err = |source| MetricError::Eval {
                point: p.coords().to_vec(),
                source,
            };
            let a = self.coordinate_metric_at(&p).map_err(err)?;
            let b = other.coordinate_metric_at(&p).map_err(err)?;
            worst = worst.max((a - b).abs().max());
        }
        Ok(worst)
    }
}

/// `e(u, v, φ(u, x'))`: simultaneous substitution of the transverse coordinates.
pub fn compose_spatial(e: &Expr, phi: &[Expr], n: usize) -> Expr {
    let mut out = e.clone();
    for k in 0..phi.len() {
        out = out.substitute(Coord::x(k + 3), &Expr::var(Coord(n + k)));
    }
    for (k, f) in phi.iter().enumerate() {
        out = out.substitute(Coord(n + k), f);
    }
    out
}

pub fn identity_frame(t: usize) -> Vec<Vec<Expr>> {
    (0..t)
        .map(|i| {
            (0..t)
                .map(|e| if i == e { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect()
}

fn max_abs(e: &Expr, plan: &SamplePlan) -> Result<f64, MetricError> {
    let mut worst: f64 = 0.0;
    for p in plan.points() {
        let v = e.eval(&p).map_err(|source| MetricError::Eval {
            point: p.coords().to_vec(),
            source,
        })?;
        worst = worst.max(v.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Result of [`qr_upper_triangularize`].
#[derive(Clone, Debug)]
pub enum TriangularFrame {
    /// The input was already upper triangular and is returned as is.
    Symbolic(Vec<Vec<Expr>>),
    /// Upper-triangular factors with positive diagonal, one per sample point.
    Pointwise(Vec<(Point, DMatrix<f64>)>),
}

/// Upper-triangular `m'` with `m'ᵀm' = mᵀm` for a general frame matrix.
pub fn qr_upper_triangularize(frame: &[Vec<Expr>], plan: &SamplePlan) -> Result<TriangularFrame, MetricError> {
    let t = frame.len();
    let triangular = frame
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().take(i).all(Expr::is_zero));
    if triangular {
        return Ok(TriangularFrame::Symbolic(frame.to_vec()));
    }
    let mut out = Vec::new();
    for p in plan.points() {
        let mut f = DMatrix::zeros(t, t);
        for (i, row) in frame.iter().enumerate() {
            for (e, entry) in row.iter().enumerate() {
                f[(i, e)] = entry.eval(&p).map_err(|source| MetricError::Eval {
                    point: p.coords().to_vec(),
                    source,
                })?;
            }
        }
        out.push((
            p.clone(),
            triangular_factor(&f).ok_or_else(|| MetricError::RankDeficient(p.coords().to_vec()))?,
        ));
    }
    Ok(TriangularFrame::Pointwise(out))
}

/// `R` of `F = QR` with the signs chosen so that `diag(R) > 0`.
pub fn triangular_factor(f: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = f.abs().max().max(1e-300);
    let mut r = f.clone().qr().r();
    for i in 0..r.nrows() {
        if r[(i, i)].abs() <= 1e-13 * scale {
            return None;
        }
        if r[(i, i)] < 0.0 {
            let mut row = r.row_mut(i);
            row *= -1.0;
        }
    }
    Some(r)
}
