#![allow(dead_code)]

use kundt::catalog::random_case;
use kundt::{parse_expr, Expr, KundtMetric, SamplePlan};

pub struct Sample {
    pub name: &'static str,
    pub metric: KundtMetric,
    /// Range of every transverse coordinate.
    pub x_range: (f64, f64),
}

impl Sample {
    pub fn plan(&self, count: usize, seed: u64) -> SamplePlan {
        SamplePlan::new(self.metric.dimension(), count, seed).with_x_range(self.x_range.0, self.x_range.1)
    }
}

pub fn ex(s: &str, n: usize) -> Expr {
    parse_expr(s, n).unwrap()
}

fn diag(n: usize, entries: &[&str]) -> Vec<Vec<Expr>> {
    let t = n - 2;
    (0..t)
        .map(|i| {
            (0..t)
                .map(|e| if i == e { ex(entries[i], n) } else { Expr::zero() })
                .collect()
        })
        .collect()
}

/// Unit 2-sphere in polar coordinates `(x3, x4)`, with some `H` and `Ŵ₄`.
pub fn sphere(h: &str, w4: &str) -> KundtMetric {
    KundtMetric::new(4, ex(h, 4), vec![Expr::zero(), ex(w4, 4)], diag(4, &["1", "sin(x3)"])).unwrap()
}

/// Hyperbolic 3-space `dx3² + e^{2x3}(dx4² + dx5²)`.
pub fn hyperbolic(h: &str) -> KundtMetric {
    KundtMetric::new(
        5,
        ex(h, 5),
        vec![Expr::zero(); 3],
        diag(5, &["1", "exp(x3)", "exp(x3)"]),
    )
    .unwrap()
}

/// Generic N = 5 metric with every field switched on and a u-dependent frame.
pub fn generic() -> KundtMetric {
    let n = 5;
    KundtMetric::new(
        n,
        ex("x3*x4^2 + sin(u)*x5", n),
        vec![Expr::zero(), ex("u*x3 + x5", n), ex("x4^2", n)],
        vec![
            vec![ex("exp(u*x4/3)", n), ex("x5/4", n), Expr::zero()],
            vec![Expr::zero(), ex("1 + x3^2/5", n), ex("u/3", n)],
            vec![Expr::zero(), Expr::zero(), ex("2 + cos(x4)", n)],
        ],
    )
    .unwrap()
}

/// The metrics every curvature-level property is checked on.
pub fn corpus() -> Vec<Sample> {
    let flat = (-1.0, 1.0);
    let plan = SamplePlan::new(5, 10, 1);
    vec![
        Sample {
            name: "minkowski",
            metric: KundtMetric::minkowski(4),
            x_range: flat,
        },
        Sample {
            name: "pp-wave",
            metric: KundtMetric::flat_transverse(4, ex("x3^2", 4), vec![Expr::zero(); 2]),
            x_range: flat,
        },
        Sample {
            name: "w4-twist",
            metric: KundtMetric::flat_transverse(5, Expr::zero(), vec![Expr::zero(), ex("x3*u", 5), Expr::zero()]),
            x_range: flat,
        },
        Sample {
            name: "sphere",
            metric: sphere("u*x3^2 + x4", "x3*u"),
            x_range: (0.3, 2.5),
        },
        Sample {
            name: "hyperbolic",
            metric: hyperbolic("sin(u)*x4*x5 + x3"),
            x_range: flat,
        },
        Sample {
            name: "catalog-2.26",
            metric: random_case("2.26", 5, 3, &plan).unwrap().metric,
            x_range: flat,
        },
        Sample {
            name: "generic",
            metric: generic(),
            x_range: flat,
        },
    ]
}
