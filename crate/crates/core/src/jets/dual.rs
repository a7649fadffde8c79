use super::jet::Jet;
use super::series::TruncatedSeries;
use crate::error::{JhiError, Result};

/// A truncated series in `s` paired with its first spatial partials, each itself a series.
#[derive(Clone, Debug, PartialEq)]
pub struct DualOverSeries {
    pub value: TruncatedSeries,
    pub partials: Vec<TruncatedSeries>,
}

impl DualOverSeries {
    pub fn constant(value: TruncatedSeries, dim: usize) -> Self {
        let order = value.order();
        DualOverSeries {
            value,
            partials: vec![TruncatedSeries::zero(order); dim],
        }
    }

    /// The coordinate `var` at `value`, constant in `s`.
    pub fn variable(value: f64, var: usize, dim: usize, order: usize) -> Self {
        let mut d = DualOverSeries::constant(TruncatedSeries::constant(value, order), dim);
        d.partials[var] = TruncatedSeries::constant(1.0, order);
        d
    }

    /// Reads a jet over `dim` spatial variables plus `s` (variable index `dim`).
    pub fn from_jet(jet: &Jet, dim: usize, order: usize) -> Self {
        let mut value = vec![0.0; order + 1];
        let mut partials = vec![vec![0.0; order + 1]; dim];
        let mut e = vec![0u8; dim + 1];
        for j in 0..=order {
            e[dim] = j as u8;
            value[j] = jet.coeff(&e);
            for (i, p) in partials.iter_mut().enumerate() {
                e[i] = 1;
                p[j] = jet.coeff(&e);
                e[i] = 0;
            }
        }
        DualOverSeries {
            value: TruncatedSeries::new(value),
            partials: partials.into_iter().map(TruncatedSeries::new).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.partials.len()
    }

    pub fn order(&self) -> usize {
        self.value.order()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(TruncatedSeries::is_finite)
    }

    fn check(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(JhiError::Evaluation("non-finite dual-over-series value".into()))
        }
    }

    fn chain(&self, value: TruncatedSeries, derivative: &TruncatedSeries) -> Result<Self> {
        let partials = self
            .partials
            .iter()
            .map(|p| derivative.checked_mul(p))
            .collect::<Result<Vec<_>>>()?;
        DualOverSeries { value, partials }.check()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let partials = self
            .partials
            .iter()
            .zip(&other.partials)
            .map(|(a, b)| a.checked_add(b))
            .collect::<Result<Vec<_>>>()?;
        DualOverSeries {
            value: self.value.checked_add(&other.value)?,
            partials,
        }
        .check()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        DualOverSeries {
            value: self.value.scale(-1.0),
            partials: self.partials.iter().map(|p| p.scale(-1.0)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let partials = self
            .partials
            .iter()
            .zip(&other.partials)
            .map(|(a, b)| other.value.checked_mul(a)?.checked_add(&self.value.checked_mul(b)?))
            .collect::<Result<Vec<_>>>()?;
        DualOverSeries {
            value: self.value.checked_mul(&other.value)?,
            partials,
        }
        .check()
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        let recip = TruncatedSeries::constant(1.0, other.order()).checked_div(&other.value)?;
        let d = recip.checked_mul(&recip)?.scale(-1.0);
        let r = other.chain(recip, &d)?;
        self.mul(&r)
    }

    pub fn exp(&self) -> Result<Self> {
        let v = self.value.exp();
        self.chain(v.clone(), &v)
    }

    pub fn ln(&self) -> Result<Self> {
        let v = self.value.ln()?;
        let d = TruncatedSeries::constant(1.0, self.order()).checked_div(&self.value)?;
        self.chain(v, &d)
    }

    pub fn sin(&self) -> Result<Self> {
        let (s, c) = self.value.sin_cos();
        self.chain(s, &c)
    }

    pub fn cos(&self) -> Result<Self> {
        let (s, c) = self.value.sin_cos();
        self.chain(c, &s.scale(-1.0))
    }

    pub fn sqrt(&self) -> Result<Self> {
        let v = self.value.sqrt()?;
        let d = TruncatedSeries::constant(0.5, self.order()).checked_div(&v)?;
        self.chain(v, &d)
    }

    pub fn powf(&self, r: f64) -> Result<Self> {
        let v = self.value.powf(r)?;
        let d = self.value.powf(r - 1.0)?.scale(r);
        self.chain(v, &d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_have_zero_partials() {
        let c = DualOverSeries::constant(TruncatedSeries::new(vec![2.0, 1.0]), 3);
        let e = c.exp().unwrap();
        assert!(e.partials.iter().all(|p| p.coeffs().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn product_and_quotient_rules() {
        let x = DualOverSeries::variable(2.0, 0, 2, 2);
        let mut y = DualOverSeries::variable(3.0, 1, 2, 2);
        y.value = TruncatedSeries::new(vec![3.0, 1.0, 0.0]);
        let q = x.div(&y).unwrap();
        // x / (3 + s): d/dx = 1/(3+s) = 1/3 - s/9 + s^2/27
        let dx = q.partials[0].coeffs();
        assert!((dx[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((dx[1] + 1.0 / 9.0).abs() < 1e-15);
        assert!((dx[2] - 1.0 / 27.0).abs() < 1e-15);
        // d/dy = -x/(3+s)^2 = -2/9 + 4 s/27 - ...
        let dy = q.partials[1].coeffs();
        assert!((dy[0] + 2.0 / 9.0).abs() < 1e-15);
        assert!((dy[1] - 4.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_multivariate_jet() {
        let shape = super::super::jet::Shape::get(3, 3);
        let x = Jet::variable(&shape, 0, 0.4);
        let y = Jet::variable(&shape, 1, 1.3);
        let s = Jet::variable(&shape, 2, 0.0);
        let f = (&x * &y + &s).sin() * (&y + &s * &s).ln();
        let from_jet = DualOverSeries::from_jet(&f, 2, 2);

        let dx = DualOverSeries::variable(0.4, 0, 2, 2);
        let mut dy = DualOverSeries::variable(1.3, 1, 2, 2);
        let gen = DualOverSeries::constant(TruncatedSeries::generator(2), 2);
        let sin_part = dx.mul(&dy).unwrap().add(&gen).unwrap().sin().unwrap();
        dy = dy.add(&gen.mul(&gen).unwrap()).unwrap();
        let direct = sin_part.mul(&dy.ln().unwrap()).unwrap();
        for j in 0..=2 {
            assert!((from_jet.value.coeff(j) - direct.value.coeff(j)).abs() < 1e-14);
            for i in 0..2 {
                assert!((from_jet.partials[i].coeff(j) - direct.partials[i].coeff(j)).abs() < 1e-14);
            }
        }
    }
}
