//! Riemann, Ricci and Weyl frame components from the connection, and the
//! first covariant derivative of Riemann.
//!
//! Only `R_2ij2`, `R_2ijk` and `R_ijkl` are computed from closed forms; the
//! rest of the frame array is filled from the Riemann symmetries.

use serde::Serialize;

use crate::expr::jet::{Jet, JetSpace};
use crate::frame::{raise, FrameError, FrameJets};
use crate::metric::KundtMetric;
use crate::report::{Check, Worst};
use crate::sample::{Point, SamplePlan};

/// Riemann frame components as jets.
pub struct CurvatureJets<'s> {
    pub n: usize,
    pub t: usize,
    pub r2ij2: Vec<Vec<Jet<'s>>>,
    pub r2ijk: Vec<Vec<Vec<Jet<'s>>>>,
    pub rijkl: Vec<Vec<Vec<Vec<Jet<'s>>>>>,
    /// Printed Ricci components.
    pub ric22: Jet<'s>,
    pub ric2i: Vec<Jet<'s>>,
    pub ricij: Vec<Vec<Jet<'s>>>,
    riemann: Vec<Jet<'s>>,
}

impl<'s> CurvatureJets<'s> {
    pub fn build(fj: &FrameJets<'s>) -> CurvatureJets<'s> {
        let t = fj.t;
        let n = fj.n;
        let zero = fj.zero().clone();
        let dx = |i: usize| i + 2;

        // P_ij = ½A_ij + B_(ij), Q_ij = ½A_ij - B_[ij] = Γ_ij2
        let p: Vec<Vec<Jet>> = (0..t)
            .map(|i| (0..t).map(|j| fj.a[i][j].scale(0.5) + fj.b_sym(i, j)).collect())
            .collect();
        let q: Vec<Vec<Jet>> = (0..t)
            .map(|i| (0..t).map(|j| fj.a[i][j].scale(0.5) - fj.b_anti(i, j)).collect())
            .collect();
        let g = |i: usize, j: usize, k: usize| fj.gamma_t(i, j, k);
        let td = |i: usize, f: &Jet<'s>| fj.transverse_derivative(i, f);

        // ½(m_le,f - m_lf,e) E_je E_kf summed over e, f
        let mut mcurl = vec![vec![vec![zero.clone(); t]; t]; t];
        for l in 0..t {
            let md: Vec<Vec<Jet>> = (0..t)
                .map(|e| (0..t).map(|f| fj.m[l][e].diff(dx(f))).collect())
                .collect();
            for j in 0..t {
                for k in 0..t {
                    let mut acc = zero.clone();
                    for e in 0..=j {
                        for f in 0..=k {
                            acc += (&md[e][f] - &md[f][e]) * &fj.e[j][e] * &fj.e[k][f];
                        }
                    }
                    mcurl[l][j][k] = acc.scale(0.5);
                }
            }
        }

        let mut r2ij2 = vec![vec![zero.clone(); t]; t];
        for i in 0..t {
            for j in 0..t {
                let mut acc = td(j, &fj.j[i]) + p[i][j].diff(0);
                for k in 0..t {
                    acc += &p[i][k] * &fj.b[k][j];
                    acc -= &fj.j[k] * g(k, i, j);
                    acc += &p[k][j] * &q[i][k];
                }
                r2ij2[i][j] = acc;
            }
        }

        let dp: Vec<Vec<Vec<Jet>>> = (0..t)
            .map(|i| (0..t).map(|k| (0..t).map(|j| td(j, &p[i][k])).collect()).collect())
            .collect();
        let mut r2ijk = vec![vec![vec![zero.clone(); t]; t]; t];
        for i in 0..t {
            for j in 0..t {
                for k in 0..t {
                    let mut acc = &dp[i][j][k] - &dp[i][k][j];
                    for l in 0..t {
                        acc += p[i][l].scale(2.0) * &mcurl[l][j][k];
                        acc -= &p[l][j] * g(l, i, k);
                        acc += &p[l][k] * g(l, i, j);
                    }
                    r2ijk[i][j][k] = acc;
                }
            }
        }

        // [Γ_ijh m_he]_,f (E_kf E_le - E_lf E_ke)
        let mut rijkl = vec![vec![vec![vec![zero.clone(); t]; t]; t]; t];
        for i in 0..t {
            for j in 0..t {
                let gm: Vec<Jet> = (0..t)
                    .map(|e| {
                        let mut acc = zero.clone();
                        for h in 0..=e {
                            acc += g(i, j, h) * &fj.m[h][e];
                        }
                        acc
                    })
                    .collect();
                let dgm: Vec<Vec<Jet>> = gm.iter().map(|x| (0..t).map(|f| x.diff(dx(f))).collect()).collect();
                for k in 0..t {
                    for l in 0..t {
                        let mut acc = zero.clone();
                        for e in 0..t {
                            for f in 0..t {
                                let mut w = zero.clone();
                                if f <= k && e <= l {
                                    w += &fj.e[k][f] * &fj.e[l][e];
                                }
                                if f <= l && e <= k {
                                    w -= &fj.e[l][f] * &fj.e[k][e];
                                }
                                acc += &dgm[e][f] * w;
                            }
                        }
                        for h in 0..t {
                            acc -= g(i, h, l) * g(h, j, k);
                            acc += g(i, h, k) * g(h, j, l);
                        }
                        rijkl[i][j][k][l] = acc;
                    }
                }
            }
        }

        // Printed Ricci sums.
        let mut ric22 = zero.clone();
        for i in 0..t {
            ric22 -= td(i, &fj.j[i]);
            ric22 -= p[i][i].diff(0);
            for k in 0..t {
                ric22 -= &p[i][k] * &fj.b[k][i];
                ric22 += &fj.j[k] * g(k, i, i);
                ric22 -= &p[k][i] * &q[i][k];
            }
        }
        let ric2i: Vec<Jet> = (0..t)
            .map(|i| {
                let mut acc = zero.clone();
                for j in 0..t {
                    acc += td(j, &p[j][i]);
                    acc -= td(i, &fj.b_sym(j, j));
                    for l in 0..t {
                        acc -= p[j][l].scale(2.0) * &mcurl[l][j][i];
                        acc += &p[l][j] * g(l, j, i);
                        acc -= &p[l][i] * g(l, j, j);
                    }
                }
                acc
            })
            .collect();
        let mut ricij = vec![vec![zero.clone(); t]; t];
        for i in 0..t {
            for j in 0..t {
                let mut acc = zero.clone();
                for k in 0..t {
                    acc += &rijkl[k][i][k][j];
                }
                ricij[i][j] = acc;
            }
        }
        // The printed R_ij sum is term for term Σ_k R_kikj of the formula above.

        let mut riemann = vec![zero.clone(); n * n * n * n];
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        for i in 0..t {
            let pi = i + 2;
            for j in 0..t {
                let pj = j + 2;
                let x = &r2ij2[i][j];
                riemann[idx(1, pi, pj, 1)] = x.clone();
                riemann[idx(pi, 1, 1, pj)] = x.clone();
                riemann[idx(pi, 1, pj, 1)] = -x;
                riemann[idx(1, pi, 1, pj)] = -x;
                for k in 0..t {
                    let pk = k + 2;
                    let y = &r2ijk[i][j][k];
                    riemann[idx(1, pi, pj, pk)] = y.clone();
                    riemann[idx(pi, 1, pj, pk)] = -y;
                    riemann[idx(pj, pk, 1, pi)] = y.clone();
                    riemann[idx(pj, pk, pi, 1)] = -y;
                    for l in 0..t {
                        riemann[idx(pi, pj, pk, l + 2)] = rijkl[i][j][k][l].clone();
                    }
                }
            }
        }

        CurvatureJets {
            n,
            t,
            r2ij2,
            r2ijk,
            rijkl,
            ric22,
            ric2i,
            ricij,
            riemann,
        }
    }

    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> &Jet<'s> {
        let n = self.n;
        &self.riemann[((a * n + b) * n + c) * n + d]
    }

    pub fn riemann_all(&self) -> &[Jet<'s>] {
        &self.riemann
    }

    /// `R_bd = η^ac R_abcd` as jets.
    pub fn ricci_contracted(&self) -> Vec<Jet<'s>> {
        let n = self.n;
        let zero = self.ric22.space().zero();
        let mut out = vec![zero; n * n];
        for b in 0..n {
            for d in 0..n {
                let mut acc = self.ric22.space().zero();
                for a in 0..n {
                    acc += self.riemann(a, b, raise(a), d);
                }
                out[b * n + d] = acc;
            }
        }
        out
    }

    pub fn values(&self) -> CurvatureData {
        let n = self.n;
        let t = self.t;
        let v2 =
            |m: &Vec<Vec<Jet>>| -> Vec<Vec<f64>> { m.iter().map(|r| r.iter().map(Jet::value).collect()).collect() };
        let riemann: Vec<f64> = self.riemann.iter().map(Jet::value).collect();
        let ricci: Vec<f64> = self.ricci_contracted().iter().map(Jet::value).collect();
        let scalar = (0..n).map(|b| ricci[b * n + raise(b)]).sum();
        CurvatureData {
            n,
            r2ij2: v2(&self.r2ij2),
            r2ijk: self.r2ijk.iter().map(v2).collect(),
            rijkl: self.rijkl.iter().map(|x| x.iter().map(v2).collect()).collect(),
            ricci_22: self.ric22.value(),
            ricci_2i: self.ric2i.iter().map(Jet::value).collect(),
            ricci_ij: v2(&self.ricij),
            ricci_scalar: scalar,
            riemann,
            ricci,
            transverse: t,
        }
    }
}

/// Curvature values at one point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureData {
    pub n: usize,
    pub transverse: usize,
    pub r2ij2: Vec<Vec<f64>>,
    pub r2ijk: Vec<Vec<Vec<f64>>>,
    pub rijkl: Vec<Vec<Vec<Vec<f64>>>>,
    /// From the printed Ricci sums.
    pub ricci_22: f64,
    pub ricci_2i: Vec<f64>,
    pub ricci_ij: Vec<Vec<f64>>,
    pub ricci_scalar: f64,
    /// Full `R_abcd` in frame positions, flattened.
    #[serde(skip)]
    pub riemann: Vec<f64>,
    /// Full `R_bd = η^ac R_abcd`, flattened.
    #[serde(skip)]
    pub ricci: Vec<f64>,
}

impl CurvatureData {
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.n;
        self.riemann[((a * n + b) * n + c) * n + d]
    }

    pub fn ricci(&self, b: usize, d: usize) -> f64 {
        self.ricci[b * self.n + d]
    }
}

/// Riemann and Ricci frame components at a point.
pub fn riemann_frame(metric: &KundtMetric, p: &Point) -> Result<CurvatureData, FrameError> {
    let space = JetSpace::new(metric.dimension(), 2);
    let fj = FrameJets::build(metric, &space, p)?;
    Ok(CurvatureJets::build(&fj).values())
}

/// The Weyl components with an `ℓ` slot that survive for CCNV metrics.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WeylNullComponents {
    pub c1212: f64,
    pub c1i2j: Vec<Vec<f64>>,
    pub c12i2: Vec<f64>,
    /// `C_1i2j` with the `R δ_ij / 6` trace term, which agrees with
    /// `c1i2j` only in four dimensions.
    pub c1i2j_dim4_form: Vec<Vec<f64>>,
}

pub fn weyl_null_components(c: &CurvatureData) -> WeylNullComponents {
    let n = c.n as f64;
    let t = c.transverse;
    let r = c.ricci_scalar;
    let rij = |i: usize, j: usize| c.ricci(i + 2, j + 2);
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    WeylNullComponents {
        c1212: -r / ((n - 1.0) * (n - 2.0)),
        c1i2j: (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| -rij(i, j) / (n - 2.0) + r * delta(i, j) / ((n - 1.0) * (n - 2.0)))
                    .collect()
            })
            .collect(),
        c12i2: (0..t).map(|i| c.ricci(1, i + 2) / (n - 2.0)).collect(),
        c1i2j_dim4_form: (0..t)
            .map(|i| (0..t).map(|j| -rij(i, j) / (n - 2.0) + r * delta(i, j) / 6.0).collect())
            .collect(),
    }
}

/// Full Weyl component `C_abcd` from Riemann, Ricci and `R`, for cross checks.
pub fn weyl_component(c: &CurvatureData, a: usize, b: usize, cc: usize, d: usize) -> f64 {
    use crate::frame::eta;
    let n = c.n as f64;
    let r = c.ricci_scalar;
    c.riemann(a, b, cc, d)
        - (eta(a, cc) * c.ricci(b, d) - eta(a, d) * c.ricci(b, cc) + eta(b, d) * c.ricci(a, cc)
            - eta(b, cc) * c.ricci(a, d))
            / (n - 2.0)
        + r * (eta(a, cc) * eta(b, d) - eta(a, d) * eta(b, cc)) / ((n - 1.0) * (n - 2.0))
}

/// `∇_e R_abcd` in frame positions at the jet expansion point, flattened as
/// `[e][a][b][c][d]`. Needs jets of order 3.
pub fn covariant_derivative_riemann(fj: &FrameJets<'_>, cj: &CurvatureJets<'_>) -> Vec<f64> {
    let n = fj.n;
    let n4 = n * n * n * n;
    let r: Vec<f64> = cj.riemann_all().iter().map(Jet::value).collect();
    let ri = |a: usize, b: usize, c: usize, d: usize| r[((a * n + b) * n + c) * n + d];
    // Γ^f_ae as values
    let mut gu = vec![0.0; n * n * n];
    for f in 0..n {
        for a in 0..n {
            for e in 0..n {
                gu[(f * n + a) * n + e] = fj.gamma_up(f, a, e).value();
            }
        }
    }
    let g = |f: usize, a: usize, e: usize| gu[(f * n + a) * n + e];
    let mut out = vec![0.0; n * n4];
    for e in 0..n {
        let dr: Vec<f64> = cj
            .riemann_all()
            .iter()
            .map(|x| {
                if x.coeffs().iter().all(|&c| c == 0.0) {
                    0.0
                } else {
                    fj.frame_derivative(e, x).value()
                }
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let flat = ((a * n + b) * n + c) * n + d;
                        let mut v = dr[flat];
                        for f in 0..n {
                            v -= g(f, a, e) * ri(f, b, c, d)
                                + g(f, b, e) * ri(a, f, c, d)
                                + g(f, c, e) * ri(a, b, f, d)
                                + g(f, d, e) * ri(a, b, c, f);
                        }
                        out[e * n4 + flat] = v;
                    }
                }
            }
        }
    }
    out
}

/// Largest |component| with at least one slot along `ℓ` (frame position 0),
/// for a flattened array of the given rank.
pub fn max_ell_contraction(values: &[f64], n: usize, rank: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (flat, v) in values.iter().enumerate() {
        let mut rest = flat;
        let mut has_ell = false;
        for _ in 0..rank {
            if rest % n == 0 {
                has_ell = true;
            }
            rest /= n;
        }
        if has_ell {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Largest |component| of positive boost weight (more `ℓ` slots than `n` slots).
pub fn max_positive_boost_weight(values: &[f64], n: usize, rank: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (flat, v) in values.iter().enumerate() {
        let mut rest = flat;
        let mut weight = 0i32;
        for _ in 0..rank {
            match rest % n {
                0 => weight += 1,
                1 => weight -= 1,
                _ => {}
            }
            rest /= n;
        }
        if weight > 0 {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// `(∇_l T)_il` summed over `l`, with the transverse connection.
fn transverse_divergence<'s>(fj: &FrameJets<'s>, tensor: &[Vec<Jet<'s>>], i: usize) -> Jet<'s> {
    let t = fj.t;
    let mut acc = fj.zero().clone();
    for l in 0..t {
        acc += fj.transverse_derivative(l, &tensor[i][l]);
        for m in 0..t {
            acc -= fj.gamma_t(m, i, l) * &tensor[m][l];
            acc -= fj.gamma_t(m, l, l) * &tensor[i][m];
        }
    }
    acc
}

/// Residuals of `2R_2i + (g^jk ∂_u g_jk)_|i + A_il|l - (B_il + B_li)_|l` at
/// the expansion point. `R_2i` is taken from the full contraction.
pub fn divergence_identity_at(fj: &FrameJets<'_>, cj: &CurvatureJets<'_>) -> Vec<f64> {
    let t = fj.t;
    let n = fj.n;
    // g^jk ∂_u g_jk = ∂_u ln det g = 2 Σ m_ii,u / m_ii for triangular m.
    let mut trace = fj.zero().clone();
    for i in 0..t {
        trace += fj.m[i][i].diff(0) * fj.m[i][i].recip();
    }
    let trace = trace.scale(2.0);
    let bsym: Vec<Vec<Jet>> = (0..t)
        .map(|i| (0..t).map(|l| &fj.b[i][l] + &fj.b[l][i]).collect())
        .collect();
    let ricci = cj.ricci_contracted();
    (0..t)
        .map(|i| {
            let r2i = ricci[n + i + 2].value();
            let rhs = fj.transverse_derivative(i, &trace).value() + transverse_divergence(fj, &fj.a, i).value()
                - transverse_divergence(fj, &bsym, i).value();
            (2.0 * r2i + rhs).abs()
        })
        .collect()
}

/// Pointwise structural checks on the connection and the curvature:
/// antisymmetries, the `B_(ij)` identity, Riemann symmetries, the divergence
/// identity for `R_2i` and the vanishing of every `ℓ` contraction of `R` and `∇R`.
pub fn check_structure(metric: &KundtMetric, plan: &SamplePlan) -> Vec<Check> {
    let n = metric.dimension();
    let t = metric.transverse_dim();
    let space = JetSpace::new(n, 3);
    let names = [
        "A_antisymmetric",
        "D_antisymmetric",
        "Gamma_ijk_antisymmetric",
        "B_symmetric_part",
        "riemann_symmetries",
        "divergence_identity",
        "ell_contraction_riemann",
        "ell_contraction_nabla_riemann",
    ];
    let tols = [1e-12, 1e-12, 1e-12, 1e-10, 1e-10, 1e-9, 1e-10, 1e-10];
    let mut worst: Vec<Worst> = names.iter().map(|_| Worst::new()).collect();
    for p in plan.points() {
        let fj = match FrameJets::build(metric, &space, &p) {
            Ok(f) => f,
            Err(e) => {
                worst[0].fail(&p, e.to_string());
                continue;
            }
        };
        let cj = CurvatureJets::build(&fj);
        let mut w = [0.0f64; 8];
        for i in 0..t {
            for j in 0..t {
                w[0] = w[0].max((fj.a[i][j].value() + fj.a[j][i].value()).abs());
                // B_ij + B_ji = -m_ie m_jf ∂_u g^ef, with g^ef = Σ_k E_ke E_kf
                let mut rhs = 0.0;
                for e in 0..t {
                    for f in 0..t {
                        let mut dg = fj.zero().clone();
                        for k in 0..t {
                            dg += &fj.e[k][e] * &fj.e[k][f];
                        }
                        rhs -= fj.m[i][e].value() * fj.m[j][f].value() * dg.diff(0).value();
                    }
                }
                w[3] = w[3].max((fj.b[i][j].value() + fj.b[j][i].value() - rhs).abs());
                for k in 0..t {
                    w[1] = w[1].max((fj.d[i][j][k].value() + fj.d[i][k][j].value()).abs());
                    w[2] = w[2].max((fj.gamma_t(i, j, k).value() + fj.gamma_t(j, i, k).value()).abs());
                }
            }
        }
        let r: Vec<f64> = cj.riemann_all().iter().map(Jet::value).collect();
        let ri = |a: usize, b: usize, c: usize, d: usize| r[((a * n + b) * n + c) * n + d];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let x = ri(a, b, c, d);
                        let sym = (x + ri(b, a, c, d))
                            .abs()
                            .max((x + ri(a, b, d, c)).abs())
                            .max((x - ri(c, d, a, b)).abs())
                            .max((x + ri(a, c, d, b) + ri(a, d, b, c)).abs());
                        w[4] = w[4].max(sym);
                    }
                }
            }
        }
        w[5] = divergence_identity_at(&fj, &cj).into_iter().fold(0.0, f64::max);
        w[6] = max_ell_contraction(&r, n, 4);
        w[7] = max_ell_contraction(&covariant_derivative_riemann(&fj, &cj), n, 5);
        for (k, v) in w.iter().enumerate() {
            worst[k].observe(*v, &p);
        }
    }
    names
        .iter()
        .zip(tols)
        .zip(&worst)
        .map(|((name, tol), w)| Check::bounded(name, w, tol))
        .collect()
}
