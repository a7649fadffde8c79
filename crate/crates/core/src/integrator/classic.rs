use super::{Integrator, MethodOptions, StepDiagnostics};
use crate::error::{JhiError, Result};
use crate::jacobi::{lifted_vector_field, ExtendedState, HamiltonianField, JacobiStructure};
use crate::models::ModelDefinition;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RungeKuttaKind {
    /// Explicit midpoint rule; the default second-order baseline.
    Midpoint,
    Heun,
    Classic4,
}

impl RungeKuttaKind {
    pub fn name(&self) -> &'static str {
        match self {
            RungeKuttaKind::Midpoint => "rk2",
            RungeKuttaKind::Heun => "heun",
            RungeKuttaKind::Classic4 => "rk4",
        }
    }
}

/// Explicit Runge-Kutta on the lifted vector field `X_Hhat`.
pub struct RungeKutta {
    structure: JacobiStructure,
    hamiltonian: HamiltonianField,
    kind: RungeKuttaKind,
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

impl RungeKutta {
    pub fn new(model: &ModelDefinition, kind: RungeKuttaKind) -> Self {
        RungeKutta {
            structure: model.structure.clone(),
            hamiltonian: model.hamiltonian.clone(),
            kind,
        }
    }

    fn field(&self, y: &[f64]) -> Result<Vec<f64>> {
        lifted_vector_field(&self.structure, &self.hamiltonian, &ExtendedState::from_slice(y)?)
    }
}

impl Integrator for RungeKutta {
    fn label(&self) -> String {
        self.kind.name().to_string()
    }

    fn step(&self, state: &ExtendedState, h: f64) -> Result<(ExtendedState, StepDiagnostics)> {
        let y = state.to_vec();
        let k1 = self.field(&y)?;
        let next = match self.kind {
            RungeKuttaKind::Midpoint => {
                let k2 = self.field(&axpy(&y, h / 2.0, &k1))?;
                axpy(&y, h, &k2)
            }
            RungeKuttaKind::Heun => {
                let k2 = self.field(&axpy(&y, h, &k1))?;
                let avg: Vec<f64> = k1.iter().zip(&k2).map(|(a, b)| 0.5 * (a + b)).collect();
                axpy(&y, h, &avg)
            }
            RungeKuttaKind::Classic4 => {
                let k2 = self.field(&axpy(&y, h / 2.0, &k1))?;
                let k3 = self.field(&axpy(&y, h / 2.0, &k2))?;
                let k4 = self.field(&axpy(&y, h, &k3))?;
                let slope: Vec<f64> = (0..y.len())
                    .map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0)
                    .collect();
                axpy(&y, h, &slope)
            }
        };
        Ok((ExtendedState::from_slice(&next)?, StepDiagnostics::explicit(h)))
    }
}

/// Semi-implicit symplectic Euler for contact models on `(q, p, z)`.
///
/// `p` is implicit with `q` frozen, `q` then uses the new `p`, and `z`, `t`
/// are updated explicitly last.
pub struct SymplecticEuler {
    structure: JacobiStructure,
    hamiltonian: HamiltonianField,
    tol: f64,
    max_iter: usize,
}

impl SymplecticEuler {
    pub fn new(model: &ModelDefinition, options: &MethodOptions) -> Result<Self> {
        if !model.contact_form {
            return Err(JhiError::Capability(format!(
                "symplectic_euler is defined for contact models only, not {}",
                model.label()
            )));
        }
        Ok(SymplecticEuler {
            structure: model.structure.clone(),
            hamiltonian: model.hamiltonian.clone(),
            tol: options.newton_tol,
            max_iter: options.newton_max_iter,
        })
    }

    fn field(&self, y: &[f64]) -> Result<Vec<f64>> {
        lifted_vector_field(&self.structure, &self.hamiltonian, &ExtendedState::from_slice(y)?)
    }
}

impl Integrator for SymplecticEuler {
    fn label(&self) -> String {
        "symplectic_euler".into()
    }

    fn step(&self, state: &ExtendedState, h: f64) -> Result<(ExtendedState, StepDiagnostics)> {
        let y = state.to_vec();
        let g = |p: f64| -> Result<f64> {
            let mut w = y.clone();
            w[1] = p;
            Ok(p - y[1] - h * self.field(&w)?[1])
        };
        let mut p = y[1];
        let mut iterations = 0;
        let mut res = g(p)?.abs();
        while res > self.tol * (1.0 + y[1].abs()) {
            if iterations == self.max_iter {
                return Err(JhiError::NonConvergence {
                    iterations,
                    residual: res,
                });
            }
            let e = f64::EPSILON.cbrt() * p.abs().max(1.0);
            let slope = (g(p + e)? - g(p - e)?) / (2.0 * e);
            if slope == 0.0 || !slope.is_finite() {
                return Err(JhiError::DegenerateStep);
            }
            p -= g(p)? / slope;
            res = g(p)?.abs();
            iterations += 1;
        }
        let mut w = y.clone();
        w[1] = p;
        let f = self.field(&w)?;
        w[0] = y[0] + h * f[0];
        let f = self.field(&w)?;
        w[2] = y[2] + h * f[2];
        w[3] = y[3] + h * f[3];
        Ok((
            ExtendedState::from_slice(&w)?,
            StepDiagnostics {
                iterations,
                residual: res,
                ds: h,
                partial: false,
            },
        ))
    }
}
