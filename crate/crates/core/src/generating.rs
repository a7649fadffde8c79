//! Generating-function coefficients `S_1 .. S_k` of the discrete flow.
//!
//! All coefficients are evaluated together on one jet shape over the extended
//! coordinates plus the formal parameter `s` (the last jet variable). With
//! `g` spatial derivatives requested and order `k`, the shape carries total
//! degree `g + k - 1`, which is exactly what the recursion consumes: each
//! pass differentiates once and slices one power of `s` away.

use std::sync::Arc;

use serde::Serialize;

use crate::birealization::BiRealization;
use crate::error::{JhiError, Result};
use crate::jacobi::{ExtendedState, ScalarField};
use crate::jets::{DualOverSeries, Jet, Shape};

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Recursion,
    ClosedForm,
}

#[derive(Clone)]
pub struct GeneratingCoefficients {
    hhat: ScalarField,
    realization: BiRealization,
    order: usize,
    overrides: Vec<Option<ScalarField>>,
    zero: Vec<bool>,
}

/// Sets up `S_1 = Hhat` and the recursion for `S_2 .. S_k`.
pub fn compute_coefficients(hhat: ScalarField, realization: &BiRealization, k: usize) -> Result<GeneratingCoefficients> {
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(JhiError::Configuration(format!("generating order {k} outside 1..={MAX_ORDER}")));
    }
    Ok(GeneratingCoefficients {
        hhat,
        realization: realization.clone(),
        order: k,
        overrides: vec![None; k],
        zero: vec![false; k],
    })
}

impl GeneratingCoefficients {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn realization(&self) -> &BiRealization {
        &self.realization
    }

    pub fn lifted_hamiltonian(&self) -> &ScalarField {
        &self.hhat
    }

    pub fn provenance(&self, i: usize) -> Provenance {
        if self.overrides[i - 1].is_some() {
            Provenance::ClosedForm
        } else {
            Provenance::Recursion
        }
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.zero[i - 1]
    }

    /// Replaces the recursion for `S_i` (`i >= 2`) by a closed form.
    pub fn with_override(mut self, i: usize, f: ScalarField) -> Self {
        if i >= 2 && i <= self.order {
            self.overrides[i - 1] = Some(f);
        }
        self
    }

    /// Marks `S_i = 0` for coefficients whose sup over `points` is below `1e-12 (1 + |Hhat|)`.
    pub fn with_zero_detection(mut self, points: &[Vec<f64>]) -> Result<Self> {
        for i in 2..=self.order {
            let mut zero = !points.is_empty();
            for p in points {
                let s = self.values(p)?;
                if s[i - 1].abs() > 1e-12 * (1.0 + s[0].abs()) {
                    zero = false;
                    break;
                }
            }
            self.zero[i - 1] = zero;
        }
        Ok(self)
    }

    /// The same coefficients with overrides and zero flags removed.
    pub fn recursion_only(&self) -> Self {
        GeneratingCoefficients {
            overrides: vec![None; self.order],
            zero: vec![false; self.order],
            ..self.clone()
        }
    }

    /// Jets of `S_1 .. S_k` at `y`, where `y` lives on a shape whose last variable is `s`.
    pub fn coefficient_jets(&self, y: &[Jet]) -> Vec<Jet> {
        let m = y.len();
        let shape = y.iter().find_map(|v| v.shape().cloned());
        let s = match &shape {
            Some(sh) if sh.nvars() > m => Jet::variable(sh, m, 0.0),
            _ => Jet::constant(0.0),
        };
        let mut out: Vec<Jet> = Vec::with_capacity(self.order);
        out.push((self.hhat)(y));
        for i in 1..self.order {
            if let Some(f) = &self.overrides[i] {
                out.push(f(y));
                continue;
            }
            if self.zero[i] {
                out.push(Jet::constant(0.0));
                continue;
            }
            let mut cov = vec![Jet::constant(0.0); m];
            let mut s_pow = Jet::constant(1.0);
            for (j, sj) in out.iter().enumerate() {
                s_pow = &s_pow * &s;
                if self.zero[j] {
                    continue;
                }
                for (l, c) in cov.iter_mut().enumerate() {
                    *c = &*c + &(&s_pow * &sj.derivative(l));
                }
            }
            let image = self.realization.alpha_jet(y, &cov);
            let h = (self.hhat)(&image);
            out.push(h.slice(m, i as u8).scale(1.0 / (i as f64 + 1.0)));
        }
        out
    }

    /// Seeds `point` on the shape needed for `g` spatial derivatives.
    pub fn seed(&self, point: &[f64], g: usize) -> Vec<Jet> {
        let shape = Shape::get(point.len() + 1, g + self.order - 1);
        Jet::seed_on(&shape, point)
    }

    /// `sum_i ds^i grad S_i` as jets in `y`.
    pub fn covector_jets(&self, y: &[Jet], ds: f64) -> Vec<Jet> {
        let m = y.len();
        let coeffs = self.coefficient_jets(y);
        let mut cov = vec![Jet::constant(0.0); m];
        let mut h = 1.0;
        for (i, si) in coeffs.iter().enumerate() {
            h *= ds;
            if self.zero[i] {
                continue;
            }
            for (l, c) in cov.iter_mut().enumerate() {
                *c = &*c + &si.derivative(l).scale(h);
            }
        }
        cov
    }

    /// Values `S_1(p) .. S_k(p)`.
    pub fn values(&self, point: &[f64]) -> Result<Vec<f64>> {
        let jets = self.coefficient_jets(&self.seed(point, 0));
        finite(jets.iter().map(Jet::value).collect(), point)
    }

    /// Value and extended gradient of `S_i` at `point`.
    pub fn gradient(&self, i: usize, point: &[f64]) -> Result<(f64, Vec<f64>)> {
        let jets = self.coefficient_jets(&self.seed(point, 1));
        let s = &jets[i - 1];
        let g = finite(s.gradient(point.len()), point)?;
        Ok((finite(vec![s.value()], point)?[0], g))
    }

    /// Plain-valued `sum_i ds^i grad S_i(y)`.
    pub fn covector_values(&self, point: &[f64], ds: f64) -> Result<Vec<f64>> {
        if ds == 0.0 {
            return Ok(vec![0.0; point.len()]);
        }
        let cov = self.covector_jets(&self.seed(point, 1), ds);
        finite(cov.iter().map(Jet::value).collect(), point)
    }
}

fn finite(v: Vec<f64>, point: &[f64]) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(JhiError::Evaluation(format!("generating coefficients undefined at {point:?}")))
    }
}

/// `sum_{i=1}^k ds^i grad S_i(y)` over all extended coordinates.
pub fn combined_covector(coeffs: &GeneratingCoefficients, ds: f64, y: &ExtendedState) -> Result<Vec<f64>> {
    coeffs.covector_values(&y.to_vec(), ds)
}

/// Largest scaled violation of `S_i(x, zt) = z S_i(x, t)` and of the matching gradient identities.
///
/// Each component defect is divided by `1 + |reference|`.
pub fn homogeneity_defect(coeffs: &GeneratingCoefficients, s: &ExtendedState, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Err(JhiError::InvalidScale(z));
    }
    let p = s.to_vec();
    let mut q = p.clone();
    let n = p.len() - 1;
    q[n] *= z;
    let a = coeffs.coefficient_jets(&coeffs.seed(&p, 1));
    let b = coeffs.coefficient_jets(&coeffs.seed(&q, 1));
    let rel = |got: f64, want: f64| (got - want).abs() / (1.0 + want.abs());
    let mut worst = 0.0f64;
    for (sa, sb) in a.iter().zip(&b) {
        worst = worst.max(rel(sb.value(), z * sa.value()));
        for l in 0..n {
            worst = worst.max(rel(sb.partial(l), z * sa.partial(l)));
        }
        worst = worst.max(rel(sb.partial(n), sa.partial(n)));
    }
    if worst.is_finite() {
        Ok(worst)
    } else {
        Err(JhiError::Evaluation(format!("homogeneity defect undefined at {p:?}")))
    }
}

/// The truncated generating function `S_s = sum_j s^j S_j` at `y` with its extended gradient.
pub fn generating_series(coeffs: &GeneratingCoefficients, y: &ExtendedState) -> Result<DualOverSeries> {
    let p = y.to_vec();
    let m = p.len();
    let k = coeffs.order();
    let shape = Shape::get(m + 1, k + 1);
    let seeded = Jet::seed_on(&shape, &p);
    let s = Jet::variable(&shape, m, 0.0);
    let jets = coeffs.coefficient_jets(&seeded);
    let mut total = Jet::constant(0.0);
    let mut s_pow = Jet::constant(1.0);
    for sj in &jets {
        s_pow = &s_pow * &s;
        total = &total + &(&s_pow * sj);
    }
    let d = DualOverSeries::from_jet(&total, m, k);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(JhiError::Evaluation(format!("generating series undefined at {p:?}")))
    }
}

/// Convenience: wraps a closure as a scalar field.
pub fn field<F>(f: F) -> ScalarField
where
    F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
{
    Arc::new(f)
}
