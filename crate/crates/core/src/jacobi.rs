//! Jacobi structures, their Poissonization and the lifted Hamiltonian dynamics.
//!
//! Extended coordinates are `(x_0, .., x_{n-1}, t)`, with `t` always last.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{JhiError, Result};
use crate::jets::{constants, evaluate_with_gradient, values, Jet, JetFn};

/// A scalar field written against jets.
pub type ScalarField = Arc<JetFn>;
/// A matrix-valued field written against jets.
pub type MatrixFn = dyn Fn(&[Jet]) -> Vec<Vec<Jet>> + Send + Sync;
/// A vector-valued field written against jets.
pub type VectorFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// A point `(x, t)` of the Poissonized manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl ExtendedState {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if t == 0.0 {
            return Err(JhiError::SingularScale);
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(JhiError::Evaluation(format!("non-finite state ({x:?}, {t})")));
        }
        Ok(ExtendedState { x, t })
    }

    /// Splits a flat extended vector; the last entry is `t`.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let (t, x) = v.split_last().ok_or_else(|| JhiError::Configuration("empty state vector".into()))?;
        ExtendedState::new(x.to_vec(), *t)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push(self.t);
        v
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// A covector `(xi_x, xi_t)` attached to an extended state.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentData {
    pub base: ExtendedState,
    pub xi_x: Vec<f64>,
    pub xi_t: f64,
}

impl CotangentData {
    pub fn new(base: ExtendedState, xi_x: Vec<f64>, xi_t: f64) -> Result<Self> {
        if xi_x.len() != base.dim() {
            return Err(JhiError::Configuration(format!(
                "covector has {} spatial components, base has {}",
                xi_x.len(),
                base.dim()
            )));
        }
        Ok(CotangentData { base, xi_x, xi_t })
    }

    /// Builds from a flat extended covector whose last entry is `xi_t`.
    pub fn from_covector(base: ExtendedState, xi: &[f64]) -> Result<Self> {
        let (xi_t, xi_x) = xi
            .split_last()
            .ok_or_else(|| JhiError::Configuration("empty covector".into()))?;
        CotangentData::new(base, xi_x.to_vec(), *xi_t)
    }

    pub fn zero(base: ExtendedState) -> Self {
        let n = base.dim();
        CotangentData {
            base,
            xi_x: vec![0.0; n],
            xi_t: 0.0,
        }
    }

    pub fn covector(&self) -> Vec<f64> {
        let mut v = self.xi_x.clone();
        v.push(self.xi_t);
        v
    }
}

/// The pair `(Lambda, E)` given as coordinate formulas.
#[derive(Clone)]
pub struct JacobiStructure {
    dim: usize,
    lambda: Arc<MatrixFn>,
    e: Arc<VectorFn>,
}

impl JacobiStructure {
    pub fn new(dim: usize, lambda: Arc<MatrixFn>, e: Arc<VectorFn>) -> Self {
        JacobiStructure { dim, lambda, e }
    }

    /// Builds `Lambda` from its upper entries `(i, j, Lambda^{ij})`; the rest follows by antisymmetry.
    pub fn from_entries<L, E>(dim: usize, entries: L, e: E) -> Self
    where
        L: Fn(&[Jet]) -> Vec<(usize, usize, Jet)> + Send + Sync + 'static,
        E: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        let lambda = move |x: &[Jet]| {
            let mut m = vec![vec![Jet::constant(0.0); dim]; dim];
            for (i, j, v) in entries(x) {
                m[j][i] = -&v;
                m[i][j] = v;
            }
            m
        };
        JacobiStructure::new(dim, Arc::new(lambda), Arc::new(e))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda_jet(&self, x: &[Jet]) -> Vec<Vec<Jet>> {
        (self.lambda)(x)
    }

    pub fn e_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.e)(x)
    }

    pub fn lambda_at(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.lambda_jet(&constants(x));
        DMatrix::from_fn(self.dim, self.dim, |i, j| m[i][j].value())
    }

    pub fn e_at(&self, x: &[f64]) -> Vec<f64> {
        values(&self.e_jet(&constants(x)))
    }

    /// The Poisson tensor of the Poissonization at extended jets `s = (x, t)`.
    pub fn poisson_jet(&self, s: &[Jet]) -> Vec<Vec<Jet>> {
        let n = self.dim;
        let (x, t) = (&s[..n], &s[n]);
        let lambda = self.lambda_jet(x);
        let e = self.e_jet(x);
        let inv_t = t.recip();
        let mut p = vec![vec![Jet::constant(0.0); n + 1]; n + 1];
        for i in 0..n {
            for j in 0..n {
                p[i][j] = &lambda[i][j] * &inv_t;
            }
            p[n][i] = e[i].clone();
            p[i][n] = -&e[i];
        }
        p
    }
}

/// A Hamiltonian `H(x)` on the Jacobi coordinates.
#[derive(Clone)]
pub struct HamiltonianField {
    h: ScalarField,
}

impl HamiltonianField {
    pub fn new<F>(h: F) -> Self
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        HamiltonianField { h: Arc::new(h) }
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        (self.h)(x)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        crate::jets::evaluate(self.h.as_ref(), x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        evaluate_with_gradient(self.h.as_ref(), x)
    }

    /// The lifted Hamiltonian `t H(x)` as a field on extended coordinates.
    pub fn lifted(&self) -> ScalarField {
        let h = self.h.clone();
        Arc::new(move |s: &[Jet]| {
            let (t, x) = s.split_last().expect("extended coordinates");
            t * h(x)
        })
    }
}

/// `X_H^i = sum_j Lambda^{ij} d_j H - H E^i`.
pub fn jacobi_vector_field(j: &JacobiStructure, h: &HamiltonianField, x: &[f64]) -> Result<Vec<f64>> {
    let (hv, dh) = h.gradient(x)?;
    let lambda = j.lambda_at(x);
    let e = j.e_at(x);
    Ok((0..j.dim())
        .map(|i| (0..j.dim()).map(|k| lambda[(i, k)] * dh[k]).sum::<f64>() - hv * e[i])
        .collect())
}

pub fn poisson_matrix(j: &JacobiStructure, s: &ExtendedState) -> Result<DMatrix<f64>> {
    if s.t == 0.0 {
        return Err(JhiError::SingularScale);
    }
    let p = j.poisson_jet(&constants(&s.to_vec()));
    let m = j.dim() + 1;
    Ok(DMatrix::from_fn(m, m, |a, b| p[a][b].value()))
}

pub fn lifted_hamiltonian(h: &HamiltonianField, s: &ExtendedState) -> Result<f64> {
    Ok(s.t * h.value(&s.x)?)
}

/// `X_Hhat = (X_H, t E(H))`.
pub fn lifted_vector_field(j: &JacobiStructure, h: &HamiltonianField, s: &ExtendedState) -> Result<Vec<f64>> {
    if s.t == 0.0 {
        return Err(JhiError::SingularScale);
    }
    let (hv, dh) = h.gradient(&s.x)?;
    let lambda = j.lambda_at(&s.x);
    let e = j.e_at(&s.x);
    let n = j.dim();
    let mut v: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| lambda[(i, k)] * dh[k]).sum::<f64>() - hv * e[i])
        .collect();
    let eh: f64 = e.iter().zip(&dh).map(|(a, b)| a * b).sum();
    v.push(s.t * eh);
    Ok(v)
}

/// `h_z(x, t) = (x, z t)`.
pub fn homogeneity_action(s: &ExtendedState, z: f64) -> Result<ExtendedState> {
    if z == 0.0 || !z.is_finite() {
        return Err(JhiError::InvalidScale(z));
    }
    ExtendedState::new(s.x.clone(), z * s.t)
}

/// `T*h_z(x, t, xi_x, xi_t) = (x, z t, z xi_x, xi_t)`.
pub fn cotangent_homogeneity(c: &CotangentData, z: f64) -> Result<CotangentData> {
    let base = homogeneity_action(&c.base, z)?;
    Ok(CotangentData {
        base,
        xi_x: c.xi_x.iter().map(|v| z * v).collect(),
        xi_t: c.xi_t,
    })
}

/// Largest violation of antisymmetry and of the two Jacobi identities over the sample.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiReport {
    pub antisymmetry: f64,
    pub bracket_residual: f64,
    pub lie_derivative_residual: f64,
    pub passed: bool,
}

impl JacobiReport {
    pub fn max_residual(&self) -> f64 {
        self.antisymmetry.max(self.bracket_residual).max(self.lie_derivative_residual)
    }
}

/// Checks `[Lambda, Lambda] = 2 E ^ Lambda` and `[E, Lambda] = 0` at the sample points.
pub fn verify_jacobi_conditions(j: &JacobiStructure, points: &[Vec<f64>], tol: f64) -> JacobiReport {
    let n = j.dim();
    let mut antisym = 0.0f64;
    let mut bracket = 0.0f64;
    let mut lie = 0.0f64;
    for x in points {
        let seeded = Jet::seed(x, 1);
        let lam = j.lambda_jet(&seeded);
        let e = j.e_jet(&seeded);
        let l = |a: usize, b: usize| lam[a][b].value();
        let dl = |c: usize, a: usize, b: usize| lam[a][b].partial(c);
        let ev = |a: usize| e[a].value();
        let de = |c: usize, a: usize| e[a].partial(c);
        let scale = 1.0
            + (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| l(a, b).abs())
                .fold(0.0, f64::max);
        for a in 0..n {
            for b in 0..n {
                antisym = antisym.max((l(a, b) + l(b, a)).abs() / scale);
                let mut r = 0.0;
                for c in 0..n {
                    r += ev(c) * dl(c, a, b) - l(c, b) * de(c, a) - l(a, c) * de(c, b);
                }
                lie = lie.max(r.abs());
                for c in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += l(m, a) * dl(m, b, c) + l(m, b) * dl(m, c, a) + l(m, c) * dl(m, a, b);
                    }
                    let lhs = 2.0 * s;
                    let wedge = ev(a) * l(b, c) + ev(b) * l(c, a) + ev(c) * l(a, b);
                    bracket = bracket.max((lhs - 2.0 * wedge).abs());
                }
            }
        }
    }
    let passed = antisym <= tol && bracket <= tol && lie <= tol;
    JacobiReport {
        antisymmetry: antisym,
        bracket_residual: bracket,
        lie_derivative_residual: lie,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contact() -> JacobiStructure {
        JacobiStructure::from_entries(
            3,
            |x: &[Jet]| vec![(1, 0, Jet::constant(1.0)), (1, 2, x[1].clone())],
            |_: &[Jet]| vec![Jet::constant(0.0), Jet::constant(0.0), Jet::constant(-1.0)],
        )
    }

    fn q_plus_z() -> HamiltonianField {
        HamiltonianField::new(|x: &[Jet]| &x[0] + &x[2])
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn contact_vector_field() {
        let v = jacobi_vector_field(&contact(), &q_plus_z(), &[0.1, -1.1, 0.09]).unwrap();
        let expect = [0.0, -0.1, 0.19];
        assert!(v.iter().zip(expect).all(|(a, b)| close(*a, b)), "{v:?}");
    }

    #[test]
    fn zero_hamiltonian_has_zero_field() {
        let h = HamiltonianField::new(|_: &[Jet]| Jet::constant(0.0));
        let v = jacobi_vector_field(&contact(), &h, &[0.3, 0.2, 0.1]).unwrap();
        assert!(v.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn contact_poisson_matrix() {
        let s = ExtendedState::new(vec![0.1, -1.1, 0.09], 1.0).unwrap();
        let p = poisson_matrix(&contact(), &s).unwrap();
        assert!(close(p[(1, 0)], 1.0));
        assert!(close(p[(1, 2)], -1.1));
        assert!(close(p[(3, 2)], -1.0));
        assert!(close(p[(2, 3)], 1.0));
        assert_eq!(p.clone() + p.transpose(), DMatrix::zeros(4, 4));
        let s2 = homogeneity_action(&s, 2.0).unwrap();
        let p2 = poisson_matrix(&contact(), &s2).unwrap();
        assert!(close(p2[(1, 0)], 0.5));
        assert!(close(p2[(3, 2)], -1.0));
    }

    #[test]
    fn lifted_quantities() {
        let s = ExtendedState::new(vec![0.1, -1.1, 0.09], 1.0).unwrap();
        assert!(close(lifted_hamiltonian(&q_plus_z(), &s).unwrap(), 0.19));
        let s2 = homogeneity_action(&s, 2.0).unwrap();
        assert!(close(lifted_hamiltonian(&q_plus_z(), &s2).unwrap(), 0.38));
        let v = lifted_vector_field(&contact(), &q_plus_z(), &s).unwrap();
        assert!(close(v[3], -1.0));
        assert!(close(v[2], 0.19));
    }

    #[test]
    fn singular_scale_and_invalid_scale() {
        assert_eq!(ExtendedState::new(vec![1.0], 0.0), Err(JhiError::SingularScale));
        let s = ExtendedState::new(vec![1.0], 1.0).unwrap();
        assert_eq!(homogeneity_action(&s, 0.0), Err(JhiError::InvalidScale(0.0)));
    }

    #[test]
    fn cotangent_homogeneity_scales_spatial_covector() {
        let base = ExtendedState::new(vec![0.5, -0.2], 1.0).unwrap();
        let c = CotangentData::new(base, vec![0.3, 0.4], 0.7).unwrap();
        let d = cotangent_homogeneity(&c, 2.0).unwrap();
        assert_eq!(d.base.x, vec![0.5, -0.2]);
        assert_eq!(d.base.t, 2.0);
        assert_eq!(d.xi_x, vec![0.6, 0.8]);
        assert_eq!(d.xi_t, 0.7);
        let back = cotangent_homogeneity(&d, 0.5).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn contact_structure_is_jacobi() {
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|k| {
                let a = k as f64 * 0.37;
                vec![a.sin(), a.cos() * 2.0, a - 1.0]
            })
            .collect();
        let r = verify_jacobi_conditions(&contact(), &pts, 1e-10);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn trivial_structure_is_jacobi() {
        let j = JacobiStructure::from_entries(2, |_: &[Jet]| vec![], |_: &[Jet]| vec![Jet::constant(0.0); 2]);
        let r = verify_jacobi_conditions(&j, &[vec![0.1, 0.2]], 0.0);
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn broken_structure_is_rejected() {
        // Lambda = x d_x ^ d_y with E = 0 is Poisson, but adding E = d_x breaks [E, Lambda] = 0.
        let j = JacobiStructure::from_entries(
            2,
            |x: &[Jet]| vec![(0, 1, x[0].clone())],
            |_: &[Jet]| vec![Jet::constant(1.0), Jet::constant(0.0)],
        );
        let r = verify_jacobi_conditions(&j, &[vec![0.4, 0.2]], 1e-10);
        assert!(!r.passed);
    }
}
