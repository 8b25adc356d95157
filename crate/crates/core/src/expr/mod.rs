//! Symbolic scalar fields over the chart `(u, v, x3, ..., xN)`.
//!
//! An [`Expr`] is an immutable tree. Construction goes through smart
//! constructors that fold constants and drop `0`/`1` identities; no other
//! simplification is attempted; equality of fields is always checked
//! pointwise.

mod display;
pub mod jet;
mod parse;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sample::Point;
use jet::{Jet, JetSpace};

pub use parse::{parse_expr, ParseError};

/// A chart coordinate. Index 0 is `u`, 1 is `v`, index `k >= 2` is `x{k+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord(pub usize);

impl Coord {
    pub const U: Coord = Coord(0);
    pub const V: Coord = Coord(1);

    /// Transverse coordinate `x{e}` for `e >= 3`.
    pub fn x(e: usize) -> Coord {
        assert!(e >= 3, "transverse coordinates start at x3");
        Coord(e - 1)
    }

    pub fn index(self) -> usize {
        self.0
    }

    /// The `e` of `x{e}`, or `None` for `u` and `v`.
    pub fn transverse_label(self) -> Option<usize> {
        (self.0 >= 2).then_some(self.0 + 1)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("u"),
            1 => f.write_str("v"),
            k => write!(f, "x{}", k + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Coord),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Apply(Func, Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogNonPositive => "log of a non-positive value",
            DomainKind::SqrtNegative => "sqrt of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: DomainKind,
    pub subexpr: String,
}

impl EvalError {
    fn new(kind: DomainKind, at: &Expr) -> Self {
        EvalError {
            kind,
            subexpr: at.to_string(),
        }
    }
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(c: Coord) -> Expr {
        Expr::from_node(Node::Var(c))
    }

    pub fn u() -> Expr {
        Expr::var(Coord::U)
    }

    pub fn v() -> Expr {
        Expr::var(Coord::V)
    }

    pub fn x(e: usize) -> Expr {
        Expr::var(Coord::x(e))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg_expr(a: &Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::from_node(Node::Neg(a.clone())),
        }
    }

    pub fn add_expr(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(x), _) if x == 0.0 => b.clone(),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Expr::from_node(Node::Add(a.clone(), b.clone())),
        }
    }

    pub fn sub_expr(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg_expr(b),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Expr::from_node(Node::Sub(a.clone(), b.clone())),
        }
    }

    pub fn mul_expr(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b.clone(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Expr::from_node(Node::Mul(a.clone(), b.clone())),
        }
    }

    pub fn div_expr(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Expr::from_node(Node::Div(a.clone(), b.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        match (self.as_const(), n) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Some(c), _) if c != 0.0 || n > 0 => Expr::constant(c.powi(n)),
            _ => Expr::from_node(Node::Pow(self.clone(), n)),
        }
    }

    pub fn apply(f: Func, a: &Expr) -> Expr {
        if let Some(c) = a.as_const() {
            let folded = match f {
                Func::Sin => Some(c.sin()),
                Func::Cos => Some(c.cos()),
                Func::Exp => Some(c.exp()),
                Func::Log if c > 0.0 => Some(c.ln()),
                Func::Sqrt if c >= 0.0 => Some(c.sqrt()),
                _ => None,
            };
            if let Some(v) = folded {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Apply(f, a.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self)
    }
    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self)
    }
    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self)
    }
    pub fn ln(&self) -> Expr {
        Expr::apply(Func::Log, self)
    }
    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self)
    }

    /// Exact partial derivative with respect to a chart coordinate.
    pub fn diff(&self, wrt: Coord) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(c) => {
                if *c == wrt {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => -a.diff(wrt),
            Node::Add(a, b) => a.diff(wrt) + b.diff(wrt),
            Node::Sub(a, b) => a.diff(wrt) - b.diff(wrt),
            Node::Mul(a, b) => a.diff(wrt) * b + a * b.diff(wrt),
            Node::Div(a, b) => {
                let da = a.diff(wrt);
                let db = b.diff(wrt);
                if db.is_zero() {
                    da / b
                } else {
                    (da * b - a * db) / b.powi(2)
                }
            }
            Node::Pow(a, n) => {
                let da = a.diff(wrt);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::constant(*n as f64) * a.powi(n - 1) * da
            }
            Node::Apply(f, a) => {
                let da = a.diff(wrt);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Exp => self.clone(),
                    Func::Log => Expr::one() / a,
                    Func::Sqrt => Expr::constant(0.5) / self,
                };
                outer * da
            }
        }
    }

    /// Whether the expression tree mentions `c` at all.
    pub fn depends_on(&self, c: Coord) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(x) => *x == c,
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => a.depends_on(c),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.depends_on(c) || b.depends_on(c),
        }
    }

    /// Largest coordinate index mentioned, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(x) => Some(x.0),
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => a.max_coord(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.max_coord().max(b.max_coord()),
        }
    }

    /// Replace every occurrence of `c` by `with`.
    pub fn substitute(&self, c: Coord, with: &Expr) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(x) => {
                if *x == c {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            Node::Neg(a) => -a.substitute(c, with),
            Node::Add(a, b) => a.substitute(c, with) + b.substitute(c, with),
            Node::Sub(a, b) => a.substitute(c, with) - b.substitute(c, with),
            Node::Mul(a, b) => a.substitute(c, with) * b.substitute(c, with),
            Node::Div(a, b) => a.substitute(c, with) / b.substitute(c, with),
            Node::Pow(a, n) => a.substitute(c, with).powi(*n),
            Node::Apply(f, a) => Expr::apply(*f, &a.substitute(c, with)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => 1 + a.node_count(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Evaluate at a point of the chart.
    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        let value = match self.node() {
            Node::Const(c) => *c,
            Node::Var(c) => p[c.0],
            Node::Neg(a) => -a.eval(p)?,
            Node::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Node::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Node::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Node::Div(a, b) => {
                let den = b.eval(p)?;
                if den == 0.0 {
                    return Err(EvalError::new(DomainKind::DivisionByZero, self));
                }
                a.eval(p)? / den
            }
            Node::Pow(a, n) => {
                let base = a.eval(p)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::new(DomainKind::DivisionByZero, self));
                }
                base.powi(*n)
            }
            Node::Apply(f, a) => {
                let x = a.eval(p)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(EvalError::new(DomainKind::LogNonPositive, self));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::new(DomainKind::SqrtNegative, self));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::new(DomainKind::NonFinite, self))
        }
    }

    /// Evaluate as a truncated Taylor jet in all chart coordinates.
    pub fn eval_jet<'s>(&self, space: &'s JetSpace, p: &Point) -> Result<Jet<'s>, EvalError> {
        Ok(match self.node() {
            Node::Const(c) => space.constant(*c),
            Node::Var(c) => space.variable(c.0, p[c.0]),
            Node::Neg(a) => -a.eval_jet(space, p)?,
            Node::Add(a, b) => a.eval_jet(space, p)? + b.eval_jet(space, p)?,
            Node::Sub(a, b) => a.eval_jet(space, p)? - b.eval_jet(space, p)?,
            Node::Mul(a, b) => a.eval_jet(space, p)? * b.eval_jet(space, p)?,
            Node::Div(a, b) => {
                let den = b.eval_jet(space, p)?;
                if den.value() == 0.0 {
                    return Err(EvalError::new(DomainKind::DivisionByZero, self));
                }
                a.eval_jet(space, p)? * den.recip()
            }
            Node::Pow(a, n) => {
                let base = a.eval_jet(space, p)?;
                if base.value() == 0.0 && *n < 0 {
                    return Err(EvalError::new(DomainKind::DivisionByZero, self));
                }
                base.powi(*n)
            }
            Node::Apply(f, a) => {
                let x = a.eval_jet(space, p)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x.value() <= 0.0 {
                            return Err(EvalError::new(DomainKind::LogNonPositive, self));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x.value() <= 0.0 {
                            return Err(EvalError::new(DomainKind::SqrtNegative, self));
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

impl From<Coord> for Expr {
    fn from(c: Coord) -> Expr {
        Expr::var(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(&self, rhs)
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, &rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(&self, &Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self, &Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(&Expr::constant(self), &rhs)
            }
        }
        impl std::ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(&Expr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, add_expr);
binop!(Sub, sub, sub_expr);
binop!(Mul, mul, mul_expr);
binop!(Div, div, div_expr);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg_expr(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg_expr(self)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |acc, e| acc + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(vals: &[f64]) -> Point {
        Point::new(vals.to_vec())
    }

    #[test]
    fn constant_folding_and_identities() {
        let x3 = Expr::x(3);
        assert_eq!(&x3 * 1.0, x3);
        assert!((&x3 * 0.0).is_zero());
        assert_eq!(&x3 + 0.0, x3);
        assert_eq!((Expr::constant(2.0) * Expr::constant(3.0)).as_const(), Some(6.0));
        assert_eq!(-(-x3.clone()), x3);
        assert_eq!(x3.powi(1), x3);
        assert!(x3.powi(0).is_one());
    }

    #[test]
    fn power_rule_and_independence() {
        let e = Expr::x(3).powi(2);
        let d = e.diff(Coord::x(3));
        assert_eq!(d.eval(&pt(&[0.0, 0.0, 3.0, 0.0])).unwrap(), 6.0);
        assert!(e.diff(Coord::x(4)).is_zero());
    }

    #[test]
    fn product_chain_rule() {
        let e = Expr::u().sin() * Expr::x(3);
        let d = e.diff(Coord::U);
        let p = pt(&[0.7, 0.0, 1.3, 0.0]);
        assert!((d.eval(&p).unwrap() - 0.7f64.cos() * 1.3).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse_expr("1/(u-1)", 4).unwrap();
        let err = e.eval(&pt(&[1.0, 0.0, 0.0, 0.0])).unwrap_err();
        assert_eq!(err.kind, DomainKind::DivisionByZero);
        assert!(err.subexpr.contains("u - 1"));

        let e = parse_expr("log(x3)", 4).unwrap();
        assert_eq!(
            e.eval(&pt(&[1.0, 0.0, -1.0, 0.0])).unwrap_err().kind,
            DomainKind::LogNonPositive
        );
        let e = parse_expr("sqrt(x3)", 4).unwrap();
        assert_eq!(e.eval(&pt(&[1.0, 0.0, 4.0, 0.0])).unwrap(), 2.0);
        assert_eq!(
            e.eval(&pt(&[1.0, 0.0, -4.0, 0.0])).unwrap_err().kind,
            DomainKind::SqrtNegative
        );
        assert_eq!(parse_expr("exp(0)", 4).unwrap().eval(&pt(&[0.0; 4])).unwrap(), 1.0);
    }

    #[test]
    fn substitution() {
        let e = parse_expr("x3^2 + u", 4).unwrap();
        let s = e.substitute(Coord::x(3), &parse_expr("x4 - u", 4).unwrap());
        let p = pt(&[0.5, 0.0, 9.0, 2.0]);
        assert_eq!(s.eval(&p).unwrap(), 1.5f64.powi(2) + 0.5);
        assert!(!s.depends_on(Coord::x(3)));
    }
}
