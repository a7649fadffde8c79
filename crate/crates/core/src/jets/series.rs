//! Truncated univariate power series in the expansion parameter `s`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{JhiError, Result};

/// `c_0 + c_1 s + ... + c_K s^K`, all arithmetic truncated at order `K`.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Pow(f64),
}

impl TruncatedSeries {
    /// Builds a series from its coefficients; the truncation order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least c_0");
        Self { coeffs }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The series generator `s` (requires order >= 1 to be non-trivial).
    pub fn generator(order: usize) -> Self {
        let mut out = Self::zero(order);
        if order >= 1 {
            out.coeffs[1] = 1.0;
        }
        out
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Horner evaluation of the truncated polynomial at `s`.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `i!` times the `i`-th coefficient, i.e. the exact `i`-th derivative at `s = 0`.
    pub fn derivative_at_zero(&self, i: usize) -> Result<f64> {
        if i > self.order() {
            return Err(JhiError::TruncationOrder {
                requested: i,
                order: self.order(),
            });
        }
        let factorial: f64 = (1..=i).map(|j| j as f64).product();
        Ok(factorial * self.coeffs[i])
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(JhiError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let k = self.order();
        let mut coeffs = vec![0.0; k + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs[..=k - i].iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(Self { coeffs })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let b0 = other.coeffs[0];
        if b0 == 0.0 {
            return Err(JhiError::SingularSeries);
        }
        let k = self.order();
        let mut q = vec![0.0; k + 1];
        for n in 0..=k {
            let acc: f64 = (1..=n).map(|j| other.coeffs[j] * q[n - j]).sum();
            q[n] = (self.coeffs[n] - acc) / b0;
        }
        Ok(Self { coeffs: q })
    }

    pub fn exp(&self) -> Self {
        let k = self.order();
        let a = &self.coeffs;
        let mut b = vec![0.0; k + 1];
        b[0] = a[0].exp();
        for n in 1..=k {
            let acc: f64 = (1..=n).map(|j| j as f64 * a[j] * b[n - j]).sum();
            b[n] = acc / n as f64;
        }
        Self { coeffs: b }
    }

    pub fn ln(&self) -> Result<Self> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(JhiError::Domain {
                function: "log",
                value: a[0],
            });
        }
        let k = self.order();
        let mut b = vec![0.0; k + 1];
        b[0] = a[0].ln();
        for n in 1..=k {
            let acc: f64 = (1..n).map(|j| j as f64 * b[j] * a[n - j]).sum();
            b[n] = (a[n] - acc / n as f64) / a[0];
        }
        Ok(Self { coeffs: b })
    }

    /// Sine and cosine together; their recurrences are coupled.
    pub fn sin_cos(&self) -> (Self, Self) {
        let k = self.order();
        let a = &self.coeffs;
        let mut s = vec![0.0; k + 1];
        let mut c = vec![0.0; k + 1];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for n in 1..=k {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=n {
                ss += j as f64 * a[j] * c[n - j];
                cc += j as f64 * a[j] * s[n - j];
            }
            s[n] = ss / n as f64;
            c[n] = -cc / n as f64;
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    pub fn sqrt(&self) -> Result<Self> {
        if !(self.coeffs[0] > 0.0) {
            return Err(JhiError::Domain {
                function: "sqrt",
                value: self.coeffs[0],
            });
        }
        self.powf_positive(0.5)
    }

    pub fn powf(&self, r: f64) -> Result<Self> {
        if r.fract() == 0.0 && r.abs() < 64.0 {
            return self.powi(r as i32);
        }
        if !(self.coeffs[0] > 0.0) {
            return Err(JhiError::Domain {
                function: "pow",
                value: self.coeffs[0],
            });
        }
        self.powf_positive(r)
    }

    fn powf_positive(&self, r: f64) -> Result<Self> {
        let k = self.order();
        let a = &self.coeffs;
        let mut b = vec![0.0; k + 1];
        b[0] = a[0].powf(r);
        for n in 1..=k {
            let acc: f64 = (1..=n)
                .map(|j| ((r + 1.0) * j as f64 - n as f64) * a[j] * b[n - j])
                .sum();
            b[n] = acc / (n as f64 * a[0]);
        }
        Ok(Self { coeffs: b })
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..n.unsigned_abs() {
            out = out.checked_mul(self)?;
        }
        if n < 0 {
            out = Self::constant(1.0, self.order()).checked_div(&out)?;
        }
        Ok(out)
    }
}

/// Truncated arithmetic on two series of equal order. `Neg` ignores `b`.
pub fn series_arith(op: SeriesOp, a: &TruncatedSeries, b: &TruncatedSeries) -> Result<TruncatedSeries> {
    match op {
        SeriesOp::Add => a.checked_add(b),
        SeriesOp::Sub => a.checked_sub(b),
        SeriesOp::Mul => a.checked_mul(b),
        SeriesOp::Div => a.checked_div(b),
        SeriesOp::Neg => Ok(a.scale(-1.0)),
    }
}

/// Taylor coefficients of `f(a(s))` truncated at the order of `a`.
pub fn series_elementary(f: Elementary, a: &TruncatedSeries) -> Result<TruncatedSeries> {
    match f {
        Elementary::Exp => Ok(a.exp()),
        Elementary::Log => a.ln(),
        Elementary::Sin => Ok(a.sin()),
        Elementary::Cos => Ok(a.cos()),
        Elementary::Sqrt => a.sqrt(),
        Elementary::Pow(r) => a.powf(r),
    }
}

pub fn extract_derivative(a: &TruncatedSeries, i: usize) -> Result<f64> {
    a.derivative_at_zero(i)
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries{:?}", self.coeffs)
    }
}

// Operator sugar. Mismatched orders are a programming error here; use the
// `checked_*` methods or `series_arith` when the orders come from input.
impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.checked_add(rhs).expect("series order mismatch")
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.checked_sub(rhs).expect("series order mismatch")
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.checked_mul(rhs).expect("series order mismatch")
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[f64]) -> TruncatedSeries {
        TruncatedSeries::new(c.to_vec())
    }

    #[test]
    fn square_of_one_plus_s() {
        let a = s(&[1.0, 1.0, 0.0]);
        let out = series_arith(SeriesOp::Mul, &a, &a).unwrap();
        assert_eq!(out.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn additive_identity() {
        let a = s(&[0.3, -2.5]);
        let out = series_arith(SeriesOp::Add, &a, &TruncatedSeries::zero(1)).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn reciprocal_of_one_plus_s_alternates() {
        // long division of 1/(1+s): coefficients (-1)^j
        let out = series_arith(SeriesOp::Div, &s(&[1.0, 0.0, 0.0]), &s(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(out.coeffs(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn division_by_zero_constant_term_is_singular() {
        let err = series_arith(SeriesOp::Div, &s(&[1.0, 0.0]), &s(&[0.0, 1.0])).unwrap_err();
        assert_eq!(err, JhiError::SingularSeries);
    }

    #[test]
    fn mismatched_orders_are_rejected() {
        let err = series_arith(SeriesOp::Add, &s(&[1.0]), &s(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, JhiError::OrderMismatch { .. }));
    }

    #[test]
    fn elementary_small_cases() {
        let e = series_elementary(Elementary::Exp, &s(&[0.0, 1.0])).unwrap();
        assert_eq!(e.coeffs(), &[1.0, 1.0]);
        let c = series_elementary(Elementary::Cos, &s(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(c.coeffs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn log_of_one_plus_s_against_finite_differences() {
        let l = series_elementary(Elementary::Log, &s(&[1.0, 1.0, 0.0])).unwrap();
        // oracle: central differences of g(s) = ln(1+s) at 0
        let g = |x: f64| (1.0 + x).ln();
        let h = 1e-4;
        let d1 = (g(h) - g(-h)) / (2.0 * h);
        let d2 = (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
        assert!((l.coeff(0) - 0.0).abs() < 1e-15);
        assert!((l.coeff(1) - d1).abs() < 1e-8);
        assert!((l.coeff(2) - d2 / 2.0).abs() < 1e-6);
        assert!((l.coeff(2) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn domain_violations_name_the_function() {
        let bad = s(&[-1.0, 1.0]);
        match series_elementary(Elementary::Log, &bad).unwrap_err() {
            JhiError::Domain { function, .. } => assert_eq!(function, "log"),
            other => panic!("unexpected {other:?}"),
        }
        match series_elementary(Elementary::Sqrt, &s(&[0.0, 1.0])).unwrap_err() {
            JhiError::Domain { function, .. } => assert_eq!(function, "sqrt"),
            other => panic!("unexpected {other:?}"),
        }
        match series_elementary(Elementary::Pow(1.5), &bad).unwrap_err() {
            JhiError::Domain { function, .. } => assert_eq!(function, "pow"),
            other => panic!("unexpected {other:?}"),
        }
        // integer powers are fine at any constant term
        assert!(series_elementary(Elementary::Pow(3.0), &bad).is_ok());
    }

    #[test]
    fn derivative_extraction() {
        let a = s(&[3.0, 2.0, 5.0]);
        assert_eq!(extract_derivative(&a, 0).unwrap(), 3.0);
        assert_eq!(extract_derivative(&a, 2).unwrap(), 10.0);
        let c3 = 0.75;
        assert_eq!(extract_derivative(&s(&[0.0, 0.0, 1.3, c3]), 3).unwrap(), 6.0 * c3);
        assert!(matches!(
            extract_derivative(&a, 3),
            Err(JhiError::TruncationOrder { requested: 3, order: 2 })
        ));
    }
}
