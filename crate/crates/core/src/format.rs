//! Line-oriented `key = "expr"` files for metrics and Killing candidates.
//!
//! ```text
//! dimension = 5
//! H = "sin(u)*x3^2"
//! W4 = "x3*u"
//! m[3][3] = "exp(u)"   # diagonal defaults to 1, off-diagonal to 0
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{parse_expr, Expr, ParseError};
use crate::killing::KillingCandidate;
use crate::metric::{identity_frame, KundtMetric, MetricError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unterminated string")]
    Unterminated { line: usize },
    #[error("missing `dimension`")]
    MissingDimension,
    #[error("line {line}: bad dimension `{value}`")]
    BadDimension { line: usize, value: String },
    #[error("line {line}: `{key}`: {source}")]
    Expr {
        line: usize,
        key: String,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: `{key}` conflicts with `{other}`")]
    Conflict { line: usize, key: String, other: String },
    #[error("line {line}: `{key}` must be a number")]
    NotANumber { line: usize, key: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

struct Entry {
    line: usize,
    value: String,
}

fn split_entries(text: &str) -> Result<BTreeMap<String, Entry>, FormatError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw, line)?;
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(FormatError::Malformed { line })?;
        let key: String = key.chars().filter(|c| !c.is_whitespace()).collect();
        let value = unquote(value.trim(), line)?;
        if key.is_empty() || value.is_empty() {
            return Err(FormatError::Malformed { line });
        }
        if out.contains_key(&key) {
            return Err(FormatError::Duplicate { line, key });
        }
        out.insert(key, Entry { line, value });
    }
    Ok(out)
}

// `#` starts a comment unless it sits inside quotes.
fn strip_comment(raw: &str, line: usize) -> Result<&str, FormatError> {
    let mut quoted = false;
    for (i, ch) in raw.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return Ok(&raw[..i]),
            _ => {}
        }
    }
    if quoted {
        return Err(FormatError::Unterminated { line });
    }
    Ok(raw)
}

fn unquote(v: &str, line: usize) -> Result<String, FormatError> {
    match v.strip_prefix('"') {
        Some(rest) => rest
            .strip_suffix('"')
            .map(str::to_string)
            .ok_or(FormatError::Unterminated { line }),
        None => Ok(v.to_string()),
    }
}

fn take_dimension(entries: &mut BTreeMap<String, Entry>) -> Result<Option<usize>, FormatError> {
    match entries.remove("dimension") {
        None => Ok(None),
        Some(e) => e
            .value
            .parse::<usize>()
            .map(Some)
            .map_err(|_| FormatError::BadDimension {
                line: e.line,
                value: e.value,
            }),
    }
}

fn expr_of(key: &str, e: &Entry, n: usize) -> Result<Expr, FormatError> {
    parse_expr(&e.value, n).map_err(|source| FormatError::Expr {
        line: e.line,
        key: key.to_string(),
        source,
    })
}

// `m[i][e]` with both indices in 3..=n.
fn frame_key(key: &str, n: usize) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("m[")?.strip_suffix(']')?;
    let (i, e) = rest.split_once("][")?;
    let (i, e): (usize, usize) = (i.parse().ok()?, e.parse().ok()?);
    ((3..=n).contains(&i) && (3..=n).contains(&e)).then_some((i - 3, e - 3))
}

pub fn parse_metric(text: &str) -> Result<KundtMetric, FormatError> {
    let mut entries = split_entries(text)?;
    let n = take_dimension(&mut entries)?.ok_or(FormatError::MissingDimension)?;
    if n < 4 {
        return Err(MetricError::Dimension(n).into());
    }
    let t = n - 2;
    let mut h = Expr::zero();
    let mut w = vec![Expr::zero(); t];
    let mut m = identity_frame(t);
    for (key, e) in &entries {
        if key == "H" {
            h = expr_of(key, e, n)?;
        } else if let Some(idx) = key
            .strip_prefix('W')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|k| (3..=n).contains(k))
        {
            w[idx - 3] = expr_of(key, e, n)?;
        } else if let Some((i, j)) = frame_key(key, n) {
            m[i][j] = expr_of(key, e, n)?;
        } else {
            return Err(FormatError::UnknownKey {
                line: e.line,
                key: key.clone(),
            });
        }
    }
    Ok(KundtMetric::new(n, h, w, m)?)
}

/// Inverse of [`parse_metric`]; entries equal to their defaults are omitted.
pub fn write_metric(metric: &KundtMetric) -> String {
    let mut out = format!("dimension = {}\n", metric.dimension());
    out.push_str(&format!("H = \"{}\"\n", metric.h()));
    for (k, w) in metric.w().iter().enumerate() {
        if !w.is_zero() {
            out.push_str(&format!("W{} = \"{}\"\n", k + 3, w));
        }
    }
    for (i, row) in metric.frame().iter().enumerate() {
        for (e, x) in row.iter().enumerate() {
            let default = if i == e { x.is_one() } else { x.is_zero() };
            if !default {
                out.push_str(&format!("m[{}][{}] = \"{}\"\n", i + 3, e + 3, x));
            }
        }
    }
    out
}

/// Keys `F1`, `F2`, `F3`, or `c1`, `c2` for `F1 = c1 u + c2`. Missing
/// functions default to 0. An optional `dimension` must match `dimension`.
pub fn parse_candidate(text: &str, dimension: usize) -> Result<KillingCandidate, FormatError> {
    let mut entries = split_entries(text)?;
    if let Some(d) = entries.get("dimension") {
        let line = d.line;
        if take_dimension(&mut entries)? != Some(dimension) {
            return Err(FormatError::Conflict {
                line,
                key: "dimension".into(),
                other: format!("metric dimension {dimension}"),
            });
        }
    }
    let mut f = [Expr::zero(), Expr::zero(), Expr::zero()];
    let mut c = [0.0f64; 2];
    for (key, e) in &entries {
        match key.as_str() {
            "F1" | "F2" | "F3" => {
                let k = key[1..].parse::<usize>().expect("F key") - 1;
                f[k] = expr_of(key, e, dimension)?;
            }
            "c1" | "c2" => {
                if let Some(f1) = entries.get("F1") {
                    return Err(FormatError::Conflict {
                        line: e.line.max(f1.line),
                        key: key.clone(),
                        other: "F1".into(),
                    });
                }
                let k = key[1..].parse::<usize>().expect("c key") - 1;
                c[k] = expr_of(key, e, dimension)?
                    .as_const()
                    .ok_or_else(|| FormatError::NotANumber {
                        line: e.line,
                        key: key.clone(),
                    })?;
            }
            _ => {
                return Err(FormatError::UnknownKey {
                    line: e.line,
                    key: key.clone(),
                })
            }
        }
    }
    let [f1, f2, f3] = f;
    if entries.contains_key("F1") {
        Ok(KillingCandidate::new(f1, f2, f3))
    } else {
        Ok(KillingCandidate::with_constants(c[0], c[1], f2, f3))
    }
}

pub fn write_candidate(candidate: &KillingCandidate) -> String {
    format!(
        "F1 = \"{}\"\nF2 = \"{}\"\nF3 = \"{}\"\n",
        candidate.f1, candidate.f2, candidate.f3
    )
}
