//! Truncated multivariate Taylor series.
//!
//! A [`Jet`] holds the Taylor coefficients of a scalar field around a point,
//! in all chart coordinates, up to a fixed total degree. Partial derivatives
//! of a jet are exact up to one degree lower, so a jet of order 3 carries
//! enough information to differentiate a field three times.

use std::collections::HashMap;
use std::ops;

/// Monomial layout and multiplication tables shared by all jets of a given
/// number of variables and order.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<Vec<u8>>,
    degree: Vec<usize>,
    products: Vec<(u32, u32, u32)>,
    // For each variable: (source, target, factor) with target + e_var = source.
    derivs: Vec<Vec<(u32, u32, f64)>>,
    unit: Vec<usize>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> JetSpace {
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        for d in 0..=order {
            let mut current = vec![0u8; nvars];
            push_degree(&mut monomials, &mut current, 0, d);
        }
        let index: HashMap<Vec<u8>, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degree: Vec<usize> = monomials.iter().map(|m| m.iter().map(|&a| a as usize).sum()).collect();

        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let mut derivs = vec![Vec::new(); nvars];
        let mut unit = vec![0; nvars];
        for (var, table) in derivs.iter_mut().enumerate() {
            let mut e = vec![0u8; nvars];
            e[var] = 1;
            unit[var] = index[&e];
            for (t, m) in monomials.iter().enumerate() {
                if degree[t] == order {
                    continue;
                }
                let mut src = m.clone();
                src[var] += 1;
                table.push((index[&src] as u32, t as u32, src[var] as f64));
            }
        }

        JetSpace {
            nvars,
            order,
            monomials,
            degree,
            products,
            derivs,
            unit,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn constant(&self, c: f64) -> Jet<'_> {
        let mut coeffs = vec![0.0; self.len()];
        coeffs[0] = c;
        Jet {
            space: self,
            coeffs,
            valid: self.order,
        }
    }

    pub fn zero(&self) -> Jet<'_> {
        self.constant(0.0)
    }

    /// The coordinate function `x_var` expanded around `at`.
    pub fn variable(&self, var: usize, at: f64) -> Jet<'_> {
        let mut j = self.constant(at);
        if self.order > 0 {
            j.coeffs[self.unit[var]] = 1.0;
        }
        j
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, var: usize, remaining: usize) {
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    if current.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        push_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

#[derive(Clone, Debug)]
pub struct Jet<'s> {
    space: &'s JetSpace,
    coeffs: Vec<f64>,
    valid: usize,
}

impl<'s> Jet<'s> {
    pub fn space(&self) -> &'s JetSpace {
        self.space
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Total degree up to which the coefficients are exact.
    pub fn valid_order(&self) -> usize {
        self.valid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Exact partial derivative; the result is valid one degree lower.
    pub fn diff(&self, var: usize) -> Jet<'s> {
        assert!(self.valid > 0, "jet has no derivative information left");
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(src, dst, factor) in &self.space.derivs[var] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Jet {
            space: self.space,
            coeffs,
            valid: self.valid - 1,
        }
    }

    /// `f(self)` from the Taylor coefficients of `f` at `self.value()`.
    fn compose(&self, taylor: &[f64]) -> Jet<'s> {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let k = taylor.len() - 1;
        let mut acc = self.space.constant(taylor[k]);
        for &t in taylor[..k].iter().rev() {
            acc = &acc * &h;
            acc.coeffs[0] += t;
        }
        acc.valid = self.valid;
        acc
    }

    fn taylor_len(&self) -> usize {
        self.space.order + 1
    }

    pub fn recip(&self) -> Jet<'s> {
        let a = self.value();
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|k| (-1f64).powi(k as i32) / a.powi(k as i32 + 1))
            .collect();
        self.compose(&t)
    }

    pub fn exp(&self) -> Jet<'s> {
        let e = self.value().exp();
        let mut fact = 1.0;
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                e / fact
            })
            .collect();
        self.compose(&t)
    }

    pub fn ln(&self) -> Jet<'s> {
        let a = self.value();
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    (-1f64).powi(k as i32 + 1) / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        self.compose(&t)
    }

    fn trig(&self, cycle: [f64; 4]) -> Jet<'s> {
        let mut fact = 1.0;
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                cycle[k % 4] / fact
            })
            .collect();
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet<'s> {
        let (s, c) = self.value().sin_cos();
        self.trig([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet<'s> {
        let (s, c) = self.value().sin_cos();
        self.trig([c, -s, -c, s])
    }

    pub fn sqrt(&self) -> Jet<'s> {
        let a = self.value();
        let mut binom = 1.0;
        let t: Vec<f64> = (0..self.taylor_len())
            .map(|k| {
                if k > 0 {
                    binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                }
                binom * a.powf(0.5 - k as f64)
            })
            .collect();
        self.compose(&t)
    }

    pub fn powi(&self, n: i32) -> Jet<'s> {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut result = self.space.constant(1.0);
        result.valid = self.valid;
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn scale(&self, s: f64) -> Jet<'s> {
        Jet {
            space: self.space,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            valid: self.valid,
        }
    }

    /// Coefficient of a monomial given by its exponent vector.
    pub fn coefficient(&self, exponents: &[u8]) -> f64 {
        self.space
            .monomials
            .iter()
            .position(|m| m.as_slice() == exponents)
            .map_or(0.0, |i| self.coeffs[i])
    }

    /// Drop coefficients above the valid degree.
    pub fn truncate(mut self) -> Jet<'s> {
        for (c, &d) in self.coeffs.iter_mut().zip(&self.space.degree) {
            if d > self.valid {
                *c = 0.0;
            }
        }
        self
    }
}

impl<'s> ops::Add<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    fn add(self, rhs: &Jet<'s>) -> Jet<'s> {
        Jet {
            space: self.space,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
            valid: self.valid.min(rhs.valid),
        }
    }
}

impl<'s> ops::Sub<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    fn sub(self, rhs: &Jet<'s>) -> Jet<'s> {
        Jet {
            space: self.space,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
            valid: self.valid.min(rhs.valid),
        }
    }
}

impl<'s> ops::Mul<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    fn mul(self, rhs: &Jet<'s>) -> Jet<'s> {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.space.products {
            let a = self.coeffs[i as usize];
            if a != 0.0 {
                coeffs[k as usize] += a * rhs.coeffs[j as usize];
            }
        }
        Jet {
            space: self.space,
            coeffs,
            valid: self.valid.min(rhs.valid),
        }
    }
}

impl<'s> ops::Div<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Jet<'s>) -> Jet<'s> {
        self * &rhs.recip()
    }
}

impl<'s> ops::Neg for &Jet<'s> {
    type Output = Jet<'s>;
    fn neg(self) -> Jet<'s> {
        self.scale(-1.0)
    }
}

impl<'s> ops::Neg for Jet<'s> {
    type Output = Jet<'s>;
    fn neg(self) -> Jet<'s> {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($trait:ident, $method:ident) => {
        impl<'s> ops::$trait<Jet<'s>> for Jet<'s> {
            type Output = Jet<'s>;
            fn $method(self, rhs: Jet<'s>) -> Jet<'s> {
                ops::$trait::$method(&self, &rhs)
            }
        }
        impl<'s> ops::$trait<&Jet<'s>> for Jet<'s> {
            type Output = Jet<'s>;
            fn $method(self, rhs: &Jet<'s>) -> Jet<'s> {
                ops::$trait::$method(&self, rhs)
            }
        }
        impl<'s> ops::$trait<Jet<'s>> for &Jet<'s> {
            type Output = Jet<'s>;
            fn $method(self, rhs: Jet<'s>) -> Jet<'s> {
                ops::$trait::$method(self, &rhs)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

impl<'s> ops::AddAssign<&Jet<'s>> for Jet<'s> {
    fn add_assign(&mut self, rhs: &Jet<'s>) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        self.valid = self.valid.min(rhs.valid);
    }
}

impl<'s> ops::AddAssign<Jet<'s>> for Jet<'s> {
    fn add_assign(&mut self, rhs: Jet<'s>) {
        *self += &rhs;
    }
}

impl<'s> ops::SubAssign<&Jet<'s>> for Jet<'s> {
    fn sub_assign(&mut self, rhs: &Jet<'s>) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        self.valid = self.valid.min(rhs.valid);
    }
}

impl<'s> ops::SubAssign<Jet<'s>> for Jet<'s> {
    fn sub_assign(&mut self, rhs: Jet<'s>) {
        *self -= &rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_count() {
        // C(n + k, k)
        assert_eq!(JetSpace::new(5, 3).len(), 56);
        assert_eq!(JetSpace::new(6, 2).len(), 28);
    }

    #[test]
    fn product_rule_matches_closed_form() {
        let sp = JetSpace::new(2, 3);
        let x = sp.variable(0, 0.3);
        let y = sp.variable(1, -1.2);
        let f = (&x * &y).sin() * x.exp();
        // d/dx [sin(xy) e^x] = (y cos(xy) + sin(xy)) e^x
        let dx = f.diff(0);
        let (xv, yv) = (0.3f64, -1.2f64);
        let expect = (yv * (xv * yv).cos() + (xv * yv).sin()) * xv.exp();
        assert!((dx.value() - expect).abs() < 1e-14);
        // d2/dxdy [xy] = 1
        assert!(((&x * &y).diff(0).diff(1).value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn third_derivatives_of_elementary_functions() {
        let sp = JetSpace::new(1, 3);
        let x = sp.variable(0, 0.7);
        let d3 = |j: Jet| j.diff(0).diff(0).diff(0).value();
        let a = 0.7f64;
        assert!((d3(x.ln()) - 2.0 / a.powi(3)).abs() < 1e-12);
        assert!((d3(x.sqrt()) - 0.375 * a.powf(-2.5)).abs() < 1e-12);
        assert!((d3(x.recip()) + 6.0 / a.powi(4)).abs() < 1e-12);
        assert!((d3(x.cos()) - a.sin()).abs() < 1e-12);
        assert!((d3(x.powi(-2)) + 24.0 / a.powi(5)).abs() < 1e-10);
    }
}
