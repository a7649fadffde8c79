//! Truncated Taylor arithmetic: univariate series in `s`, duals over series,
//! and the multivariate [`Jet`] that every model formula is written against.

mod dual;
mod jet;
mod series;

pub use dual::DualOverSeries;
pub use jet::{constants, values, Jet, Shape};
pub use series::{extract_derivative, series_arith, series_elementary, Elementary, SeriesOp, TruncatedSeries};

use crate::error::{JhiError, Result};

/// A scalar formula over jets, evaluable at any jet shape.
pub type JetFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;

/// Value and full gradient of `f` at `point`.
pub fn evaluate_with_gradient(f: &JetFn, point: &[f64]) -> Result<(f64, Vec<f64>)> {
    let jet = f(&Jet::seed(point, 1));
    if !jet.is_finite() {
        return Err(JhiError::Evaluation(format!("non-finite value or gradient at {point:?}")));
    }
    Ok((jet.value(), jet.gradient(point.len())))
}

/// Value of `f` at plain numbers.
pub fn evaluate(f: &JetFn, point: &[f64]) -> Result<f64> {
    let v = f(&constants(point)).value();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(JhiError::Evaluation(format!("non-finite value at {point:?}")))
    }
}

/// Hessian of `f` at `point`.
pub fn evaluate_hessian(f: &JetFn, point: &[f64]) -> Result<Vec<Vec<f64>>> {
    let jet = f(&Jet::seed(point, 2));
    if !jet.is_finite() {
        return Err(JhiError::Evaluation(format!("non-finite Hessian at {point:?}")));
    }
    let n = point.len();
    Ok((0..n).map(|i| (0..n).map(|j| jet.second_partial(i, j)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_lifted_contact_hamiltonian() {
        let f = |v: &[Jet]| &v[3] * (&v[0] + &v[2]);
        let (val, g) = evaluate_with_gradient(&f, &[0.1, -1.1, 0.09, 1.0]).unwrap();
        assert!((val - 0.19).abs() < 1e-15);
        let expect = [1.0, 0.0, 1.0, 0.19];
        for (a, b) in g.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_has_zero_gradient() {
        let f = |_: &[Jet]| Jet::constant(7.0);
        let (val, g) = evaluate_with_gradient(&f, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(val, 7.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn time_independent_field() {
        let f = |v: &[Jet]| &v[0] * &v[0] + &v[1] * &v[1];
        let (_, g) = evaluate_with_gradient(&f, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g, vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn undefined_point_is_an_error() {
        let f = |v: &[Jet]| v[0].ln();
        assert!(matches!(evaluate_with_gradient(&f, &[-1.0]), Err(JhiError::Evaluation(_))));
    }
}
