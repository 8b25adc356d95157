use thiserror::Error;

use super::{Coord, Expr, Func};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("coordinate `{name}` at offset {offset} is outside x3..x{dimension}")]
    CoordinateOutOfRange {
        name: String,
        offset: usize,
        dimension: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::CoordinateOutOfRange { offset, .. } => *offset,
        }
    }
}

/// Parse an expression over the chart of a spacetime of the given dimension.
pub fn parse_expr(src: &str, dimension: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        text: src,
        pos: 0,
        dimension,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    dimension: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else if self.pos >= self.src.len() {
            Err(self.syntax(format!("expected `{}` before end of input", c as char)))
        } else {
            Err(self.syntax(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.eat(b'/') {
                acc = acc / self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            let n = self.integer()?;
            Ok(base.powi(n))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = digits;
            return Err(self.syntax("expected an integer exponent"));
        }
        self.text[start..self.pos].parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "exponent out of range".into(),
        })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.base()?)
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        self.text[start..i]
            .parse::<f64>()
            .map(Expr::constant)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{}`", &self.text[start..i]),
            })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        if let Some(f) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::apply(f, &arg));
        }
        match name {
            "u" => return Ok(Expr::u()),
            "v" => return Ok(Expr::v()),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(k) if (3..=self.dimension).contains(&k) => Ok(Expr::var(Coord::x(k))),
                    _ => Err(ParseError::CoordinateOutOfRange {
                        name: name.to_string(),
                        offset: start,
                        dimension: self.dimension,
                    }),
                };
            }
        }
        Err(ParseError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_operator_reports_end_offset() {
        let err = parse_expr("x3 +", 4).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn identifiers_are_checked() {
        assert!(matches!(
            parse_expr("x5", 4),
            Err(ParseError::CoordinateOutOfRange { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expr("u + foo", 4),
            Err(ParseError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expr("x2", 5),
            Err(ParseError::CoordinateOutOfRange { .. })
        ));
        assert!(parse_expr("v*x4", 4).is_ok());
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2*3^2 - 8/4/2", 4).unwrap();
        assert_eq!(e.as_const(), Some(1.0 + 18.0 - 1.0));
        let e = parse_expr("2^-2", 4).unwrap();
        assert_eq!(e.as_const(), Some(0.25));
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "x3^2 - u*(v + x4)",
            "-(x3^2) + (-x3)^3",
            "u/(x3*x4) - (u - v) - (-3)*x3",
            "sin(u)*exp(-x3)/sqrt(1 + x4^2)",
            "u - (v - x3)",
            "x3*-u",
        ] {
            let e = parse_expr(s, 4).unwrap();
            let printed = e.to_string();
            let again = parse_expr(&printed, 4).unwrap();
            assert_eq!(e, again, "{s} printed as {printed}");
        }
    }
}
