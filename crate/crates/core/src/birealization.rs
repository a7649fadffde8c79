//! Homogeneous symplectic bi-realizations `(alpha, beta)`.
//!
//! Every realization here satisfies `beta(s, xi) = alpha(s, -xi)`, so only
//! `alpha` is stored. It is written against jets so that the generating
//! recursion and the Newton Jacobian can differentiate through it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{JhiError, Result};
use crate::jacobi::{CotangentData, ExtendedState, JacobiStructure, MatrixFn, VectorFn};
use crate::jets::{constants, values, Jet};

/// `alpha(base, xi)` over extended coordinates.
pub type AlphaFn = dyn Fn(&[Jet], &[Jet]) -> Vec<Jet> + Send + Sync;
/// Admissibility of a `(base, image)` pair.
pub type DomainFn = dyn Fn(&[f64], &[f64]) -> bool + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizationKind {
    Exact,
    Transported,
    FirstOrderApproximate,
}

impl fmt::Display for RealizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RealizationKind::Exact => "exact",
            RealizationKind::Transported => "transported",
            RealizationKind::FirstOrderApproximate => "first_order_approximate",
        })
    }
}

#[derive(Clone)]
pub struct BiRealization {
    alpha: Arc<AlphaFn>,
    domain: Arc<DomainFn>,
    kind: RealizationKind,
}

impl fmt::Debug for BiRealization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiRealization({})", self.kind)
    }
}

fn nonzero_scale(base: &[f64], image: &[f64]) -> bool {
    let (t, t1) = (base[base.len() - 1], image[image.len() - 1]);
    t1.abs() > 1e-8 * t.abs()
}

impl BiRealization {
    pub fn new(alpha: Arc<AlphaFn>, domain: Arc<DomainFn>, kind: RealizationKind) -> Self {
        BiRealization { alpha, domain, kind }
    }

    pub fn kind(&self) -> RealizationKind {
        self.kind
    }

    pub fn alpha_jet(&self, base: &[Jet], xi: &[Jet]) -> Vec<Jet> {
        (self.alpha)(base, xi)
    }

    pub fn beta_jet(&self, base: &[Jet], xi: &[Jet]) -> Vec<Jet> {
        let neg: Vec<Jet> = xi.iter().map(|v| -v).collect();
        (self.alpha)(base, &neg)
    }

    /// Checks an image computed from `base`; non-finite values and domain exits are errors.
    pub fn check_image(&self, base: &[f64], image: &[f64]) -> Result<()> {
        if image.iter().any(|v| !v.is_finite()) {
            return Err(JhiError::OutOfDomain(format!("non-finite image {image:?}")));
        }
        if image[image.len() - 1] == 0.0 || !(self.domain)(base, image) {
            return Err(JhiError::OutOfDomain(format!("image {image:?} of base {base:?}")));
        }
        Ok(())
    }

    fn apply(&self, base: &[f64], xi: &[f64], sign: f64) -> Result<Vec<f64>> {
        let xi: Vec<f64> = xi.iter().map(|v| sign * v).collect();
        let image = values(&(self.alpha)(&constants(base), &constants(&xi)));
        self.check_image(base, &image)?;
        Ok(image)
    }

    /// `alpha` on flat extended vectors.
    pub fn alpha_values(&self, base: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        self.apply(base, xi, 1.0)
    }

    /// `beta` on flat extended vectors.
    pub fn beta_values(&self, base: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        self.apply(base, xi, -1.0)
    }

    pub fn alpha(&self, c: &CotangentData) -> Result<ExtendedState> {
        ExtendedState::from_slice(&self.alpha_values(&c.base.to_vec(), &c.covector())?)
    }

    pub fn beta(&self, c: &CotangentData) -> Result<ExtendedState> {
        ExtendedState::from_slice(&self.beta_values(&c.base.to_vec(), &c.covector())?)
    }

    pub fn domain_ok(&self, c: &CotangentData) -> bool {
        self.alpha(c).is_ok()
    }
}

/// A diffeomorphism `F` of extended coordinates with its Jacobian.
#[derive(Clone)]
pub struct CoordinateChange {
    forward: Arc<VectorFn>,
    inverse: Arc<VectorFn>,
    jacobian: Arc<MatrixFn>,
}

impl CoordinateChange {
    /// `jacobian(y)` must return `DF(y)` with rows indexed by the components of `F`.
    pub fn new(forward: Arc<VectorFn>, inverse: Arc<VectorFn>, jacobian: Arc<MatrixFn>) -> Self {
        CoordinateChange {
            forward,
            inverse,
            jacobian,
        }
    }

    pub fn identity() -> Self {
        CoordinateChange::new(
            Arc::new(|y: &[Jet]| y.to_vec()),
            Arc::new(|y: &[Jet]| y.to_vec()),
            Arc::new(|y: &[Jet]| {
                (0..y.len())
                    .map(|i| (0..y.len()).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 })).collect())
                    .collect()
            }),
        )
    }

    pub fn forward_jet(&self, y: &[Jet]) -> Vec<Jet> {
        (self.forward)(y)
    }

    pub fn inverse_jet(&self, y: &[Jet]) -> Vec<Jet> {
        (self.inverse)(y)
    }

    pub fn jacobian_jet(&self, y: &[Jet]) -> Vec<Vec<Jet>> {
        (self.jacobian)(y)
    }

    pub fn forward(&self, y: &[f64]) -> Vec<f64> {
        values(&self.forward_jet(&constants(y)))
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        values(&self.inverse_jet(&constants(y)))
    }

    /// `(F(y), DF(y)^{-T} xi)` on jets.
    pub fn lift_jet(&self, y: &[Jet], xi: &[Jet]) -> Option<(Vec<Jet>, Vec<Jet>)> {
        let df = self.jacobian_jet(y);
        let n = df.len();
        let dft: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| df[j][i].clone()).collect()).collect();
        let eta = solve_jets(dft, xi.to_vec())?;
        Some((self.forward_jet(y), eta))
    }
}

/// Gaussian elimination with partial pivoting on the constant terms.
fn solve_jets(mut a: Vec<Vec<Jet>>, mut b: Vec<Jet>) -> Option<Vec<Jet>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))?;
        // only an exact zero pivot is rejected; column scales differ wildly near t = 0
        if a[pivot][col].value() == 0.0 || !a[pivot][col].value().is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for row in col + 1..n {
            if a[row][col].is_constant() && a[row][col].value() == 0.0 {
                continue;
            }
            let f = &a[row][col] * &inv;
            for k in col..n {
                let v = &a[row][k] - &(&f * &a[col][k]);
                a[row][k] = v;
            }
            let v = &b[row] - &(&f * &b[col]);
            b[row] = v;
        }
    }
    let mut x = vec![Jet::constant(0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            if a[row][k].is_constant() && a[row][k].value() == 0.0 {
                continue;
            }
            acc = &acc - &(&a[row][k] * &x[k]);
        }
        x[row] = &acc / &a[row][row];
    }
    Some(x)
}

/// Pushes cotangent data forward through `F`: base `F(y)`, covector `eta` with `DF^T eta = xi`.
///
/// The image base is an extended state whose last coordinate is the last component of `F`.
pub fn cotangent_lift(change: &CoordinateChange, c: &CotangentData) -> Result<CotangentData> {
    let y = c.base.to_vec();
    let image = change.forward(&y);
    let df = values(&change.jacobian_jet(&constants(&y)).concat());
    let n = y.len();
    let m = DMatrix::from_row_slice(n, n, &df);
    let eta = m
        .transpose()
        .lu()
        .solve(&DVector::from_vec(c.covector()))
        .ok_or(JhiError::LiftSingular)?;
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(JhiError::LiftSingular);
    }
    CotangentData::from_covector(ExtendedState::from_slice(&image)?, eta.as_slice())
}

/// `alpha = F^{-1} o alpha_can o (F^{-1})^*`, with the domain predicate supplied by the caller.
pub fn transported_birealization(change: &CoordinateChange, canonical: &BiRealization, domain: Arc<DomainFn>) -> BiRealization {
    let change = change.clone();
    let canonical = canonical.clone();
    let alpha = move |y: &[Jet], xi: &[Jet]| match change.lift_jet(y, xi) {
        Some((fy, eta)) => change.inverse_jet(&canonical.alpha_jet(&fy, &eta)),
        None => vec![Jet::constant(f64::NAN); y.len()],
    };
    BiRealization::new(Arc::new(alpha), domain, RealizationKind::Transported)
}

/// Midpoint shifts on conjugate pairs `(q, p)`: `q - eta_p / 2`, `p + eta_q / 2`; other slots pass through.
pub fn canonical_pair_birealization(dim: usize, pairs: &[(usize, usize)]) -> Result<BiRealization> {
    let mut used = vec![false; dim];
    for &(q, p) in pairs {
        for i in [q, p] {
            if i >= dim || used[i] {
                return Err(JhiError::Configuration(format!("malformed conjugate pairing {pairs:?} in dimension {dim}")));
            }
            used[i] = true;
        }
    }
    let pairs = pairs.to_vec();
    let alpha = move |x: &[Jet], eta: &[Jet]| {
        let mut out = x.to_vec();
        for &(q, p) in &pairs {
            out[q] = &x[q] - &eta[p].scale(0.5);
            out[p] = &x[p] + &eta[q].scale(0.5);
        }
        out
    };
    Ok(BiRealization::new(
        Arc::new(alpha),
        Arc::new(|_: &[f64], _: &[f64]| true),
        RealizationKind::Exact,
    ))
}

/// `alpha^i(s, xi) = s^i - (1/2) sum_j Pi^{ij}(s) xi_j`, with `Pi` taken at the base point.
pub fn first_order_birealization(j: &JacobiStructure) -> BiRealization {
    let j = j.clone();
    let alpha = move |s: &[Jet], xi: &[Jet]| {
        let pi = j.poisson_jet(s);
        s.iter()
            .zip(&pi)
            .map(|(si, row)| {
                let shift: Jet = row.iter().zip(xi).map(|(p, x)| p * x).sum();
                si - &shift.scale(0.5)
            })
            .collect()
    };
    BiRealization::new(Arc::new(alpha), Arc::new(nonzero_scale), RealizationKind::FirstOrderApproximate)
}

/// Domain predicate requiring the image scale to stay away from zero.
pub fn scale_domain() -> Arc<DomainFn> {
    Arc::new(nonzero_scale)
}

/// Coordinates `(U, V, Z) = (log x, t (y^-gamma - 1) / (a gamma), log t - gamma log y)`.
pub fn lotka_volterra_change(a: f64, gamma: f64) -> CoordinateChange {
    let ag = a * gamma;
    let forward = move |s: &[Jet]| {
        let (x, y, t) = (&s[0], &s[1], &s[2]);
        vec![
            x.ln(),
            t * &(y.powf(-gamma) - 1.0) / ag,
            t.ln() - y.ln() * gamma,
        ]
    };
    let inverse = move |w: &[Jet]| {
        let (u, v, z) = (&w[0], &w[1], &w[2]);
        let c = v * &(-z).exp() * ag;
        let one_minus = 1.0 - &c;
        vec![u.exp(), one_minus.powf(1.0 / gamma), z.exp() * one_minus]
    };
    let jacobian = move |s: &[Jet]| {
        let (x, y, t) = (&s[0], &s[1], &s[2]);
        let zero = Jet::constant(0.0);
        vec![
            vec![x.recip(), zero.clone(), zero.clone()],
            vec![zero.clone(), -(t * &y.powf(-gamma - 1.0)) / a, (y.powf(-gamma) - 1.0) / ag],
            vec![zero, -(gamma * &y.recip()), t.recip()],
        ]
    };
    CoordinateChange::new(Arc::new(forward), Arc::new(inverse), Arc::new(jacobian))
}

/// Closed-form Lotka-Volterra realization on the positive orthant (`c = 0`, `d + f = a gamma`).
pub fn lotka_volterra_birealization(a: f64, gamma: f64) -> BiRealization {
    let ag = a * gamma;
    let alpha = move |s: &[Jet], xi: &[Jet]| {
        let (x, y, t) = (&s[0], &s[1], &s[2]);
        let (xi_x, xi_y, xi_t) = (&xi[0], &xi[1], &xi[2]);
        let shift = (xi_t * ag + &(y * xi_y) * &t.recip() * a) * 0.5;
        let x1 = x * &shift.exp();
        let v1 = t * &(y.powf(-gamma) - 1.0) / ag + &(x * xi_x) * 0.5;
        let z1 = t.ln() - y.ln() * gamma;
        let c = &v1 * &(-&z1).exp() * ag;
        let one_minus = 1.0 - &c;
        vec![x1, one_minus.powf(1.0 / gamma), z1.exp() * one_minus]
    };
    let domain = move |base: &[f64], image: &[f64]| {
        base.iter().all(|&v| v > 0.0) && image.iter().all(|&v| v > 0.0) && image[1].powf(gamma) > 1e-10
    };
    BiRealization::new(Arc::new(alpha), Arc::new(domain), RealizationKind::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contact_change() -> CoordinateChange {
        CoordinateChange::new(
            Arc::new(|s: &[Jet]| vec![s[0].clone(), &s[1] * &s[3], -&s[2], s[3].clone()]),
            Arc::new(|w: &[Jet]| vec![w[0].clone(), &w[1] / &w[3], -&w[2], w[3].clone()]),
            Arc::new(|s: &[Jet]| {
                let z = || Jet::constant(0.0);
                let o = |v: f64| Jet::constant(v);
                vec![
                    vec![o(1.0), z(), z(), z()],
                    vec![z(), s[3].clone(), z(), s[1].clone()],
                    vec![z(), z(), o(-1.0), z()],
                    vec![z(), z(), z(), o(1.0)],
                ]
            }),
        )
    }

    fn contact_realization() -> BiRealization {
        let can = canonical_pair_birealization(4, &[(1, 0), (3, 2)]).unwrap();
        transported_birealization(&contact_change(), &can, scale_domain())
    }

    fn state(v: &[f64]) -> ExtendedState {
        ExtendedState::from_slice(v).unwrap()
    }

    #[test]
    fn canonical_single_pair() {
        let r = canonical_pair_birealization(2, &[(0, 1)]).unwrap();
        let a = r.alpha_values(&[1.0, 1.0], &[0.2, 0.4]).unwrap();
        assert!((a[0] - 0.8).abs() < 1e-15 && (a[1] - 1.1).abs() < 1e-15);
        let b = r.beta_values(&[1.0, 1.0], &[0.2, 0.4]).unwrap();
        assert!((b[0] - 1.2).abs() < 1e-15 && (b[1] - 0.9).abs() < 1e-15);
        assert_eq!(r.alpha_values(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn malformed_pairing_is_configuration_error() {
        assert!(canonical_pair_birealization(2, &[(0, 0)]).unwrap_err().is_configuration());
        assert!(canonical_pair_birealization(2, &[(0, 2)]).unwrap_err().is_configuration());
    }

    #[test]
    fn identity_lift() {
        let c = CotangentData::from_covector(state(&[0.3, -0.2, 1.5]), &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(cotangent_lift(&CoordinateChange::identity(), &c).unwrap(), c);
    }

    #[test]
    fn contact_lift_uses_inverse_transpose() {
        let change = contact_change();
        let c = CotangentData::from_covector(state(&[0.4, -0.7, 0.2, 1.3]), &[0.1, -0.3, 0.25, 0.05]).unwrap();
        let lifted = cotangent_lift(&change, &c).unwrap();
        // oracle: xi = DF^T eta
        let y = c.base.to_vec();
        let df = DMatrix::from_row_slice(4, 4, &values(&change.jacobian_jet(&constants(&y)).concat()));
        let back = df.transpose() * DVector::from_vec(lifted.covector());
        for (a, b) in back.iter().zip(c.covector()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(lifted.base.to_vec(), vec![0.4, -0.7 * 1.3, -0.2, 1.3]);
    }

    #[test]
    fn transported_contact_is_unital_and_reflective() {
        let r = contact_realization();
        let base = [0.1, -1.1, 0.09, 1.0];
        assert_eq!(r.alpha_values(&base, &[0.0; 4]).unwrap(), base.to_vec());
        let xi = [0.03, -0.02, 0.05, 0.01];
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        assert_eq!(r.beta_values(&base, &xi).unwrap(), r.alpha_values(&base, &neg).unwrap());
    }

    #[test]
    fn lotka_volterra_lift_matches_closed_covector() {
        let (a, gamma) = (1.0, 2.0);
        let change = lotka_volterra_change(a, gamma);
        let (x, y, t) = (4.0, 2.0, 1.0);
        let (xx, xy, xt) = (0.3, -0.2, 0.1);
        let c = CotangentData::from_covector(state(&[x, y, t]), &[xx, xy, xt]).unwrap();
        let lifted = cotangent_lift(&change, &c).unwrap();
        let eta = lifted.covector();
        assert!((eta[0] - x * xx).abs() < 1e-12);
        assert!((eta[1] - (-a * gamma * xt - a * y / t * xy)).abs() < 1e-12);
    }

    #[test]
    fn lotka_volterra_closed_form_equals_transport() {
        let (a, gamma) = (1.0, 2.0);
        let closed = lotka_volterra_birealization(a, gamma);
        let can = canonical_pair_birealization(3, &[(0, 1)]).unwrap();
        let transported = transported_birealization(&lotka_volterra_change(a, gamma), &can, scale_domain());
        let base = [4.0, 2.0, 1.0];
        let xi = [0.01, -0.03, 0.02];
        let p = closed.alpha_values(&base, &xi).unwrap();
        let q = transported.alpha_values(&base, &xi).unwrap();
        for (u, v) in p.iter().zip(&q) {
            assert!((u - v).abs() < 1e-12, "{p:?} vs {q:?}");
        }
        assert_eq!(closed.alpha_values(&base, &[0.0; 3]).unwrap().len(), 3);
    }

    #[test]
    fn lotka_volterra_rejects_non_positive_base() {
        let r = lotka_volterra_birealization(1.0, 2.0);
        assert!(matches!(r.alpha_values(&[-1.0, 2.0, 1.0], &[0.0; 3]), Err(JhiError::OutOfDomain(_))));
    }

    #[test]
    fn jet_solver_matches_dense_solver() {
        let a = [[2.0, 1.0, 0.0], [0.5, 3.0, 1.0], [0.0, 1.0, -1.5]];
        let b = [1.0, -2.0, 0.5];
        let x = solve_jets(
            a.iter().map(|r| constants(r)).collect(),
            constants(&b),
        )
        .unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| a[i][j]);
        let expect = m.lu().solve(&DVector::from_row_slice(&b)).unwrap();
        for (u, v) in values(&x).iter().zip(expect.iter()) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}
