//! Multivariate truncated Taylor polynomials ("jets").
//!
//! A [`Jet`] is either a plain constant or a polynomial in `nvars` nilpotent
//! increments truncated at a total degree. Every model formula in the crate is
//! written once against `Jet` and then evaluated as a plain number, a
//! gradient carrier, a Hessian carrier, or a mixed spatial/`s` expansion just
//! by choosing the shape of the inputs.

use std::collections::HashMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Monomial layout of a jet: all exponent vectors of total degree `<= order`.
pub struct Shape {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
}

impl Shape {
    /// Shared, cached shape for `nvars` variables and total degree `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Shape> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Shape>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("shape cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Shape::build(nvars, order)))
            .clone()
    }

    fn build(nvars: usize, order: usize) -> Shape {
        let mut exponents: Vec<Vec<u8>> = vec![vec![0; nvars]];
        for degree in 1..=order {
            let mut current = Vec::new();
            push_exponents(nvars, degree, 0, &mut vec![0; nvars], &mut current);
            exponents.extend(current);
        }
        let lookup: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let degree_of = |e: &[u8]| e.iter().map(|&x| x as usize).sum::<usize>();
        let mut products = Vec::new();
        for (i, a) in exponents.iter().enumerate() {
            let da = degree_of(a);
            for (j, b) in exponents.iter().enumerate() {
                if da + degree_of(b) > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, lookup[&sum] as u32));
            }
        }
        Shape {
            nvars,
            order,
            exponents,
            lookup,
            products,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn index_of(&self, exponent: &[u8]) -> Option<usize> {
        self.lookup.get(exponent).copied()
    }

    pub fn exponent(&self, index: usize) -> &[u8] {
        &self.exponents[index]
    }

    fn unit(&self, var: usize) -> Vec<u8> {
        let mut e = vec![0; self.nvars];
        e[var] = 1;
        e
    }
}

fn push_exponents(nvars: usize, remaining: usize, var: usize, scratch: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if var + 1 == nvars {
        scratch[var] = remaining as u8;
        out.push(scratch.clone());
        scratch[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        scratch[var] = k as u8;
        push_exponents(nvars, remaining - k, var + 1, scratch, out);
    }
    scratch[var] = 0;
}

#[derive(Clone)]
enum Repr {
    Const(f64),
    Poly(Arc<Shape>, Vec<f64>),
}

/// A truncated multivariate Taylor polynomial, or a bare constant.
#[derive(Clone)]
pub struct Jet(Repr);

impl Jet {
    pub fn constant(value: f64) -> Jet {
        Jet(Repr::Const(value))
    }

    /// The independent variable `value + d_var` on `shape`.
    pub fn variable(shape: &Arc<Shape>, var: usize, value: f64) -> Jet {
        assert!(var < shape.nvars, "variable index out of range");
        let mut c = vec![0.0; shape.len()];
        c[0] = value;
        c[shape.lookup[&shape.unit(var)]] = 1.0;
        Jet(Repr::Poly(shape.clone(), c))
    }

    /// Seeds every coordinate of `point` as an independent variable of a fresh shape.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        let shape = Shape::get(point.len(), order);
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(&shape, i, v))
            .collect()
    }

    /// Seeds `point` on an existing shape whose first `point.len()` variables are spatial.
    pub fn seed_on(shape: &Arc<Shape>, point: &[f64]) -> Vec<Jet> {
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(shape, i, v))
            .collect()
    }

    pub fn value(&self) -> f64 {
        match &self.0 {
            Repr::Const(v) => *v,
            Repr::Poly(_, c) => c[0],
        }
    }

    pub fn shape(&self) -> Option<&Arc<Shape>> {
        match &self.0 {
            Repr::Const(_) => None,
            Repr::Poly(s, _) => Some(s),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.0, Repr::Const(_))
    }

    /// Raw Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exponent: &[u8]) -> f64 {
        match &self.0 {
            Repr::Const(v) => {
                if exponent.iter().all(|&e| e == 0) {
                    *v
                } else {
                    0.0
                }
            }
            Repr::Poly(s, c) => s.index_of(exponent).map_or(0.0, |i| c[i]),
        }
    }

    /// First partial derivative with respect to `var` at the expansion point.
    pub fn partial(&self, var: usize) -> f64 {
        match &self.0 {
            Repr::Const(_) => 0.0,
            Repr::Poly(s, c) => {
                if var >= s.nvars || s.order == 0 {
                    return 0.0;
                }
                c[s.lookup[&s.unit(var)]]
            }
        }
    }

    /// Gradient over the first `n` variables.
    pub fn gradient(&self, n: usize) -> Vec<f64> {
        (0..n).map(|v| self.partial(v)).collect()
    }

    /// Second partial derivative with respect to `i` and `j`.
    pub fn second_partial(&self, i: usize, j: usize) -> f64 {
        match &self.0 {
            Repr::Const(_) => 0.0,
            Repr::Poly(s, c) => {
                if s.order < 2 {
                    return 0.0;
                }
                let mut e = vec![0u8; s.nvars];
                e[i] += 1;
                e[j] += 1;
                let raw = c[s.lookup[&e]];
                if i == j {
                    2.0 * raw
                } else {
                    raw
                }
            }
        }
    }

    /// Partial derivative as a jet; the top-degree information is lost.
    pub fn derivative(&self, var: usize) -> Jet {
        match &self.0 {
            Repr::Const(_) => Jet::constant(0.0),
            Repr::Poly(s, c) => {
                let mut out = vec![0.0; s.len()];
                for (idx, e) in s.exponents.iter().enumerate() {
                    if e[var] == 0 || c[idx] == 0.0 {
                        continue;
                    }
                    let mut lowered = e.clone();
                    lowered[var] -= 1;
                    out[s.lookup[&lowered]] += c[idx] * e[var] as f64;
                }
                Jet(Repr::Poly(s.clone(), out))
            }
        }
    }

    /// Coefficient of `d_var^power`, as a jet in the remaining variables.
    pub fn slice(&self, var: usize, power: u8) -> Jet {
        match &self.0 {
            Repr::Const(v) => Jet::constant(if power == 0 { *v } else { 0.0 }),
            Repr::Poly(s, c) => {
                let mut out = vec![0.0; s.len()];
                for (idx, e) in s.exponents.iter().enumerate() {
                    if e[var] != power {
                        continue;
                    }
                    let mut lowered = e.clone();
                    lowered[var] = 0;
                    out[s.lookup[&lowered]] = c[idx];
                }
                Jet(Repr::Poly(s.clone(), out))
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.0 {
            Repr::Const(v) => v.is_finite(),
            Repr::Poly(_, c) => c.iter().all(|v| v.is_finite()),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        match &self.0 {
            Repr::Const(v) => v.abs(),
            Repr::Poly(_, c) => c.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    pub fn scale(&self, k: f64) -> Jet {
        self.map(|v| v * k)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        match &self.0 {
            Repr::Const(v) => Jet::constant(f(*v)),
            Repr::Poly(s, c) => Jet(Repr::Poly(s.clone(), c.iter().map(|&v| f(v)).collect())),
        }
    }

    fn offset(&self, k: f64) -> Jet {
        match &self.0 {
            Repr::Const(v) => Jet::constant(v + k),
            Repr::Poly(s, c) => {
                let mut c = c.clone();
                c[0] += k;
                Jet(Repr::Poly(s.clone(), c))
            }
        }
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        match (&self.0, &other.0) {
            (Repr::Const(a), Repr::Const(b)) => Jet::constant(f(*a, *b)),
            (Repr::Poly(s, a), Repr::Const(b)) => {
                let mut c: Vec<f64> = a.iter().map(|&x| f(x, 0.0)).collect();
                c[0] = f(a[0], *b);
                Jet(Repr::Poly(s.clone(), c))
            }
            (Repr::Const(a), Repr::Poly(s, b)) => {
                let mut c: Vec<f64> = b.iter().map(|&y| f(0.0, y)).collect();
                c[0] = f(*a, b[0]);
                Jet(Repr::Poly(s.clone(), c))
            }
            (Repr::Poly(s, a), Repr::Poly(t, b)) => {
                assert_same_shape(s, t);
                Jet(Repr::Poly(s.clone(), a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()))
            }
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        match (&self.0, &other.0) {
            (Repr::Const(a), Repr::Const(b)) => Jet::constant(a * b),
            (Repr::Poly(_, _), Repr::Const(b)) => self.scale(*b),
            (Repr::Const(a), Repr::Poly(_, _)) => other.scale(*a),
            (Repr::Poly(s, a), Repr::Poly(t, b)) => {
                assert_same_shape(s, t);
                let mut out = vec![0.0; s.len()];
                for &(i, j, k) in &s.products {
                    out[k as usize] += a[i as usize] * b[j as usize];
                }
                Jet(Repr::Poly(s.clone(), out))
            }
        }
    }

    /// `f(self)` given the Taylor coefficients `f^(m)(a0)/m!` of `f` at the constant term.
    fn compose(&self, taylor: impl Fn(usize) -> f64) -> Jet {
        match &self.0 {
            Repr::Const(_) => Jet::constant(taylor(0)),
            Repr::Poly(s, _) => {
                let order = s.order;
                let h = self.offset(-self.value());
                let mut acc = Jet::constant(taylor(order));
                for m in (0..order).rev() {
                    acc = acc.product(&h).offset(taylor(m));
                }
                acc
            }
        }
    }

    pub fn recip(&self) -> Jet {
        let a0 = self.value();
        self.compose(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign / a0.powi(m as i32 + 1)
        })
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(|m| e / factorial(m))
    }

    /// Natural logarithm; yields NaN coefficients for a non-positive constant term.
    pub fn ln(&self) -> Jet {
        let a0 = self.value();
        self.compose(|m| {
            if m == 0 {
                a0.ln()
            } else {
                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                sign / (m as f64 * a0.powi(m as i32))
            }
        })
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(|m| {
            let d = match m % 4 {
                0 => s,
                1 => c,
                2 => -s,
                _ => -c,
            };
            d / factorial(m)
        })
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(|m| {
            let d = match m % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            };
            d / factorial(m)
        })
    }

    /// Real power `self^r`; needs a positive constant term unless `r` is a small integer.
    pub fn powf(&self, r: f64) -> Jet {
        if r.fract() == 0.0 && r.abs() <= 16.0 {
            return self.powi(r as i32);
        }
        let a0 = self.value();
        if !(a0 > 0.0) {
            return self.map(|_| f64::NAN);
        }
        self.compose(|m| binomial(r, m) * a0.powf(r - m as f64))
    }

    pub fn sqrt(&self) -> Jet {
        let a0 = self.value();
        if !(a0 > 0.0) {
            return self.map(|_| f64::NAN);
        }
        self.compose(|m| binomial(0.5, m) * a0.powf(0.5 - m as f64))
    }

    pub fn powi(&self, n: i32) -> Jet {
        let mut out = Jet::constant(1.0);
        let mut base = self.clone();
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                out = out.product(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.product(&base);
            }
        }
        if n < 0 {
            out.recip()
        } else {
            out
        }
    }

    /// `atan(w)` for an increment with vanishing constant term.
    fn atan_of_increment(&self) -> Jet {
        self.compose(|m| {
            if m % 2 == 0 {
                0.0
            } else {
                let k = (m - 1) / 2;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / m as f64
            }
        })
    }

    pub fn atan(&self) -> Jet {
        let a0 = self.value();
        // atan(a) = atan(a0) + atan((a - a0) / (1 + a a0))
        let w = &self.offset(-a0) / &(self.scale(a0).offset(1.0));
        w.atan_of_increment().offset(a0.atan())
    }

    /// Four-quadrant angle of `(x, y)`, expanded around the base point's branch.
    pub fn atan2(y: &Jet, x: &Jet) -> Jet {
        let (y0, x0) = (y.value(), x.value());
        let theta0 = y0.atan2(x0);
        // tan(theta - theta0) = (x0 y - y0 x) / (x0 x + y0 y)
        let num = &y.scale(x0) - &x.scale(y0);
        let den = &x.scale(x0) + &y.scale(y0);
        (&num / &den).atan_of_increment().offset(theta0)
    }
}

fn assert_same_shape(a: &Arc<Shape>, b: &Arc<Shape>) {
    assert!(
        Arc::ptr_eq(a, b) || (a.nvars == b.nvars && a.order == b.order),
        "jets on different shapes ({}x{} vs {}x{})",
        a.nvars,
        a.order,
        b.nvars,
        b.order
    );
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

fn binomial(r: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, k| acc * (r - k as f64) / (k as f64 + 1.0))
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Const(v) => write!(f, "Jet({v})"),
            Repr::Poly(s, c) => write!(f, "Jet[{}x{}]{:?}", s.nvars, s.order, c),
        }
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Jet {
        Jet::constant(v)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Div<&Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        match &rhs.0 {
            Repr::Const(b) => self.scale(1.0 / b),
            Repr::Poly(..) => self.product(&rhs.recip()),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(&Jet::constant(rhs))
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                self.$method(&Jet::constant(rhs))
            }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&Jet::constant(self)).$method(&rhs)
            }
        }
        impl $tr<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&Jet::constant(self)).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::constant(0.0), |acc, x| acc + x)
    }
}

/// Evaluates a jet-valued formula at plain numbers.
pub fn constants(values: &[f64]) -> Vec<Jet> {
    values.iter().map(|&v| Jet::constant(v)).collect()
}

/// Constant terms of a slice of jets.
pub fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn shape_counts_monomials() {
        assert_eq!(Shape::get(2, 2).len(), 6);
        assert_eq!(Shape::get(6, 4).len(), 210);
        assert_eq!(Shape::get(3, 0).len(), 1);
    }

    #[test]
    fn product_rule_and_hessian() {
        let v = Jet::seed(&[2.0, 3.0], 2);
        let f = &v[0] * &v[0] * &v[1];
        assert_eq!(f.value(), 12.0);
        assert_eq!(f.partial(0), 12.0);
        assert_eq!(f.partial(1), 4.0);
        assert_eq!(f.second_partial(0, 0), 6.0);
        assert_eq!(f.second_partial(0, 1), 4.0);
        assert_eq!(f.second_partial(1, 1), 0.0);
    }

    #[test]
    fn elementary_derivatives_match_calculus() {
        let x = 0.7;
        let v = Jet::seed(&[x], 3);
        let checks: Vec<(Jet, [f64; 3])> = vec![
            (v[0].exp(), [x.exp(), x.exp(), x.exp()]),
            (v[0].ln(), [1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)]),
            (v[0].sin(), [x.cos(), -x.sin(), -x.cos()]),
            (v[0].cos(), [-x.sin(), -x.cos(), x.sin()]),
            (v[0].sqrt(), [0.5 / x.sqrt(), -0.25 * x.powf(-1.5), 0.375 * x.powf(-2.5)]),
            (v[0].atan(), [1.0 / (1.0 + x * x), -2.0 * x / (1.0 + x * x).powi(2), (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3)]),
            (v[0].recip(), [-1.0 / (x * x), 2.0 / x.powi(3), -6.0 / x.powi(4)]),
        ];
        for (jet, d) in checks {
            assert!(close(jet.partial(0), d[0], 1e-13), "{jet:?}");
            assert!(close(jet.coeff(&[2]) * 2.0, d[1], 1e-13), "{jet:?}");
            assert!(close(jet.coeff(&[3]) * 6.0, d[2], 1e-13), "{jet:?}");
        }
    }

    #[test]
    fn atan2_tracks_the_quadrant() {
        for &(x, y) in &[(1.0, 1.0), (-1.0, 0.5), (-0.3, -2.0), (0.2, -0.1)] {
            let v = Jet::seed(&[x, y], 2);
            let th = Jet::atan2(&v[1], &v[0]);
            let r2 = x * x + y * y;
            assert!(close(th.value(), f64::atan2(y, x), 1e-15));
            assert!(close(th.partial(0), -y / r2, 1e-14));
            assert!(close(th.partial(1), x / r2, 1e-14));
            assert!(close(th.second_partial(0, 0), 2.0 * x * y / (r2 * r2), 1e-12));
        }
    }

    #[test]
    fn derivative_and_slice() {
        let v = Jet::seed(&[1.0, 2.0], 3);
        // f = x^2 y + y^3
        let f = &(&v[0] * &v[0]) * &v[1] + v[1].powi(3);
        let fx = f.derivative(0);
        assert_eq!(fx.value(), 4.0);
        assert_eq!(fx.partial(0), 4.0);
        // coefficient of dy^1 as function of dx: d/dy f = x^2 + 3 y^2 -> 1 + 12 + 2 dx + dx^2
        let sl = f.slice(1, 1);
        assert_eq!(sl.value(), 13.0);
        assert_eq!(sl.partial(0), 2.0);
        assert_eq!(sl.coeff(&[2, 0]), 1.0);
    }

    #[test]
    fn non_finite_is_detected() {
        let v = Jet::seed(&[-1.0], 2);
        assert!(!v[0].ln().is_finite());
        assert!(!v[0].sqrt().is_finite());
        assert!(v[0].powf(2.0).is_finite());
    }
}
