use nalgebra::{DMatrix, DVector};

use super::{Integrator, JacobianMode, MethodOptions, StepConfig, StepDiagnostics};
use crate::birealization::BiRealization;
use crate::error::{JhiError, Result};
use crate::generating::GeneratingCoefficients;
use crate::jacobi::ExtendedState;
use crate::models::ModelDefinition;

/// The solved point of the implicit equation and how it was reached.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub y: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

const MAX_BACKTRACK: usize = 20;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn residual(realization: &BiRealization, coeffs: &GeneratingCoefficients, ds: f64, y: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let cov = coeffs.covector_values(y, ds)?;
    let image = realization.alpha_values(y, &cov)?;
    Ok(image.iter().zip(target).map(|(a, b)| a - b).collect())
}

fn residual_and_jacobian(
    realization: &BiRealization,
    coeffs: &GeneratingCoefficients,
    cfg: &StepConfig,
    y: &[f64],
    target: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = y.len();
    match cfg.jacobian_mode {
        JacobianMode::Dual => {
            let seeded = coeffs.seed(y, 2);
            let cov = coeffs.covector_jets(&seeded, cfg.ds);
            let image = realization.alpha_jet(&seeded, &cov);
            let values: Vec<f64> = image.iter().map(|j| j.value()).collect();
            realization.check_image(y, &values)?;
            let r: Vec<f64> = values.iter().zip(target).map(|(a, b)| a - b).collect();
            let jac = DMatrix::from_fn(m, m, |i, j| image[i].partial(j));
            if jac.iter().any(|v| !v.is_finite()) {
                return Err(JhiError::Evaluation(format!("non-finite Newton matrix at {y:?}")));
            }
            Ok((r, jac))
        }
        JacobianMode::FiniteDifference => {
            let r = residual(realization, coeffs, cfg.ds, y, target)?;
            let mut jac = DMatrix::zeros(m, m);
            let eps = f64::EPSILON.cbrt();
            for j in 0..m {
                let h = eps * y[j].abs().max(1.0);
                let mut yp = y.to_vec();
                let mut ym = y.to_vec();
                yp[j] += h;
                ym[j] -= h;
                let rp = residual(realization, coeffs, cfg.ds, &yp, target)?;
                let rm = residual(realization, coeffs, cfg.ds, &ym, target)?;
                for i in 0..m {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            Ok((r, jac))
        }
    }
}

/// Predictor used when `alpha` is undefined at the target itself: `alpha(x, eps c) - x` is about
/// `eps` times half the step's displacement, so the solution sits near `x - (alpha(x, eps c) - x) / eps`.
fn midpoint_guess(realization: &BiRealization, coeffs: &GeneratingCoefficients, ds: f64, x: &[f64]) -> Result<Vec<f64>> {
    let eps = 1e-4;
    let cov: Vec<f64> = coeffs.covector_values(x, ds)?.iter().map(|c| c * eps).collect();
    let image = realization.alpha_values(x, &cov)?;
    Ok(x.iter().zip(&image).map(|(xi, ai)| xi - (ai - xi) / eps).collect())
}

/// Solves `alpha(y, sum ds^i grad S_i(y)) = target` by Newton's method from `y = target`.
///
/// `cfg.ds` may be negative (a backward step).
pub fn solve_implicit(
    realization: &BiRealization,
    coeffs: &GeneratingCoefficients,
    cfg: &StepConfig,
    target: &ExtendedState,
) -> Result<NewtonOutcome> {
    let target = target.to_vec();
    if cfg.ds == 0.0 {
        return Ok(NewtonOutcome {
            y: target,
            iterations: 0,
            residual: 0.0,
        });
    }
    let threshold = cfg.newton_tol * (1.0 + max_abs(&target));
    let mut y = target.clone();
    let mut assembled = match residual_and_jacobian(realization, coeffs, cfg, &y, &target) {
        Ok(a) => a,
        Err(JhiError::OutOfDomain(_) | JhiError::Evaluation(_)) => {
            y = midpoint_guess(realization, coeffs, cfg.ds, &target)?;
            residual_and_jacobian(realization, coeffs, cfg, &y, &target)?
        }
        Err(e) => return Err(e),
    };
    for iteration in 0..cfg.newton_max_iter {
        let (r, jac) = assembled;
        let res = max_abs(&r);
        let delta = jac.lu().solve(&DVector::from_vec(r)).ok_or(JhiError::DegenerateStep)?;
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(JhiError::DegenerateStep);
        }
        if res <= threshold {
            // final polishing update with the already assembled matrix
            for (yi, di) in y.iter_mut().zip(delta.iter()) {
                *yi -= di;
            }
            return Ok(NewtonOutcome {
                y,
                iterations: iteration,
                residual: res,
            });
        }
        // halve the update while the trial point leaves the realization's domain
        let mut scale = 1.0;
        let mut attempt = 0;
        assembled = loop {
            let trial: Vec<f64> = y.iter().zip(delta.iter()).map(|(yi, di)| yi - scale * di).collect();
            match residual_and_jacobian(realization, coeffs, cfg, &trial, &target) {
                Ok(next) => {
                    y = trial;
                    break next;
                }
                Err(e @ (JhiError::OutOfDomain(_) | JhiError::Evaluation(_))) => {
                    attempt += 1;
                    if attempt > MAX_BACKTRACK {
                        return Err(e);
                    }
                    scale *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        if iteration + 1 == cfg.newton_max_iter {
            return Err(JhiError::NonConvergence {
                iterations: cfg.newton_max_iter,
                residual: max_abs(&assembled.0),
            });
        }
    }
    Err(JhiError::NonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })
}

/// One JHI step: solve for `y`, then map forward with `beta`.
pub fn jhi_step(
    realization: &BiRealization,
    coeffs: &GeneratingCoefficients,
    cfg: &StepConfig,
    s_n: &ExtendedState,
) -> Result<(ExtendedState, StepDiagnostics)> {
    let sol = solve_implicit(realization, coeffs, cfg, s_n)?;
    let cov = coeffs.covector_values(&sol.y, cfg.ds)?;
    let next = realization.beta_values(&sol.y, &cov)?;
    let state = ExtendedState::from_slice(&next)?;
    Ok((
        state,
        StepDiagnostics {
            iterations: sol.iterations,
            residual: sol.residual,
            ds: cfg.ds,
            partial: false,
        },
    ))
}

/// JHI-k bound to a model's realization and generating coefficients.
pub struct JhiIntegrator {
    realization: BiRealization,
    coeffs: GeneratingCoefficients,
    options: MethodOptions,
    order: usize,
}

impl JhiIntegrator {
    pub fn new(model: &ModelDefinition, order: usize, options: &MethodOptions) -> Result<Self> {
        let coeffs = model.coefficients(order)?;
        Ok(JhiIntegrator::from_parts(model.realization.clone(), coeffs, options))
    }

    pub fn from_parts(realization: BiRealization, coeffs: GeneratingCoefficients, options: &MethodOptions) -> Self {
        let order = coeffs.order();
        JhiIntegrator {
            realization,
            coeffs,
            options: options.clone(),
            order,
        }
    }

    pub fn coefficients(&self) -> &GeneratingCoefficients {
        &self.coeffs
    }

    pub fn config(&self, ds: f64) -> StepConfig {
        StepConfig {
            ds,
            order: self.order,
            newton_tol: self.options.newton_tol,
            newton_max_iter: self.options.newton_max_iter,
            jacobian_mode: self.options.jacobian_mode,
        }
    }
}

impl Integrator for JhiIntegrator {
    fn label(&self) -> String {
        format!("jhi{}", self.order)
    }

    fn step(&self, state: &ExtendedState, ds: f64) -> Result<(ExtendedState, StepDiagnostics)> {
        jhi_step(&self.realization, &self.coeffs, &self.config(ds), state)
    }
}
