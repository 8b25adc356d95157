use std::fmt::{self, Write};

use super::{Expr, Node};

// Binding strength of the outermost operator as printed.
fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) | Node::Pow(..) => 3,
        Node::Const(_) | Node::Var(_) | Node::Apply(..) => 4,
    }
}

fn write_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_sign_negative() {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{c}")
    }
}

fn write_wrapped(e: &Expr, wrap: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if wrap {
        f.write_char('(')?;
        write_expr(e, f)?;
        f.write_char(')')
    } else {
        write_expr(e, f)
    }
}

// Something that may stand where the grammar wants a `base`.
fn is_base(e: &Expr) -> bool {
    matches!(e.node(), Node::Const(_) | Node::Var(_) | Node::Apply(..) | Node::Neg(_))
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write_const(*c, f),
        Node::Var(c) => write!(f, "{c}"),
        Node::Neg(a) => {
            f.write_char('-')?;
            // `-x^2` would re-parse as (-x)^2, so only bare atoms go unwrapped.
            write_wrapped(a, !matches!(level(a), 4), f)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_wrapped(a, level(a) < 1, f)?;
            f.write_str(if matches!(e.node(), Node::Add(..)) {
                " + "
            } else {
                " - "
            })?;
            write_wrapped(b, level(b) <= 1, f)
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_wrapped(a, level(a) < 2, f)?;
            f.write_char(if matches!(e.node(), Node::Mul(..)) { '*' } else { '/' })?;
            write_wrapped(b, level(b) <= 2 && !is_base(b), f)
        }
        Node::Pow(a, n) => {
            write_wrapped(a, !is_base(a), f)?;
            write!(f, "^{n}")
        }
        Node::Apply(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f)?;
            f.write_char(')')
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}
