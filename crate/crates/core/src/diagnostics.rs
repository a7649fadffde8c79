//! Convergence-order studies, invariant drift series and trajectory error norms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{JhiError, Result};
use crate::integrator::{integrate_steps, Integrator, Trajectory};
use crate::jacobi::ExtendedState;
use crate::models::{Casimir, ModelDefinition};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderStudyRow {
    pub ds: f64,
    pub error_l2: f64,
    pub observed_order: Option<f64>,
    /// False when the previous grid was not exactly half as fine; the order then uses the log-ratio of step sizes.
    pub halved: bool,
    /// Set when the run on this grid stopped early; `error_l2` is then NaN.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DriftSeries {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Which coordinates enter an error norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    /// Jacobi coordinates only.
    #[default]
    Jacobi,
    /// Jacobi coordinates and `t`.
    Extended,
}

fn coords(s: &ExtendedState, norm: ErrorNorm) -> Vec<f64> {
    match norm {
        ErrorNorm::Jacobi => s.x.clone(),
        ErrorNorm::Extended => s.to_vec(),
    }
}

fn check_grid(traj: &Trajectory, reference: &Trajectory, stride: usize) -> Result<()> {
    if stride == 0 || traj.is_empty() {
        return Err(JhiError::GridMismatch("empty trajectory or zero stride".into()));
    }
    let needed = (traj.len() - 1) * stride + 1;
    if reference.len() < needed {
        return Err(JhiError::GridMismatch(format!(
            "reference has {} points, stride {stride} over {} points needs {needed}",
            reference.len(),
            traj.len()
        )));
    }
    let span = (reference.times[reference.len() - 1] - reference.times[0]).abs().max(1.0);
    for (i, &t) in traj.times.iter().enumerate() {
        if (t - reference.times[i * stride]).abs() > 1e-9 * span {
            return Err(JhiError::GridMismatch(format!(
                "time {t} does not match reference time {}",
                reference.times[i * stride]
            )));
        }
    }
    Ok(())
}

/// Per-sample Euclidean distance between matched states.
pub fn pointwise_error(traj: &Trajectory, reference: &Trajectory, stride: usize, norm: ErrorNorm) -> Result<Vec<f64>> {
    check_grid(traj, reference, stride)?;
    Ok(traj
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let a = coords(s, norm);
            let b = coords(&reference.states[i * stride], norm);
            a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
        })
        .collect())
}

/// Discrete L2-in-time norm `sqrt(ds * sum_i |x_i - x*_i|^2)` over the matched grid points,
/// with `ds` the mean step of `traj`.
pub fn trajectory_error_with(traj: &Trajectory, reference: &Trajectory, stride: usize, norm: ErrorNorm) -> Result<f64> {
    let e = pointwise_error(traj, reference, stride, norm)?;
    let n = traj.len();
    let ds = if n > 1 {
        (traj.times[n - 1] - traj.times[0]).abs() / (n - 1) as f64
    } else {
        1.0
    };
    Ok((ds * e.iter().map(|v| v * v).sum::<f64>()).sqrt())
}

pub fn trajectory_error(traj: &Trajectory, reference: &Trajectory, stride: usize) -> Result<f64> {
    trajectory_error_with(traj, reference, stride, ErrorNorm::Jacobi)
}

/// First time at which the error relative to the reference state's size exceeds `rel_tol`.
///
/// A trajectory that stopped early and never crossed the threshold diverges at its last time.
pub fn divergence_time(traj: &Trajectory, reference: &Trajectory, stride: usize, rel_tol: f64) -> Result<Option<f64>> {
    let e = pointwise_error(traj, reference, stride, ErrorNorm::Jacobi)?;
    let crossed = e.iter().enumerate().position(|(i, &v)| {
        let size = reference.states[i * stride].x.iter().map(|u| u * u).sum::<f64>().sqrt();
        !(v <= rel_tol * size.max(f64::MIN_POSITIVE))
    });
    if let Some(i) = crossed {
        return Ok(Some(traj.times[i]));
    }
    let full = traj.len() - 1 == (reference.len() - 1) / stride;
    Ok((!full).then(|| traj.times[traj.len() - 1]))
}

/// Observed orders from a sequence of `(ds, error)` pairs; NaN errors mark failed grids.
pub fn order_rows(pairs: &[(f64, f64)], steps: &[usize]) -> Vec<OrderStudyRow> {
    let mut rows: Vec<OrderStudyRow> = Vec::with_capacity(pairs.len());
    for (i, &(ds, error_l2)) in pairs.iter().enumerate() {
        let (observed_order, halved) = if i == 0 {
            (None, true)
        } else {
            let (ds0, e0) = pairs[i - 1];
            let halved = steps[i] == 2 * steps[i - 1];
            let order = if halved {
                (e0 / error_l2).log2()
            } else {
                (e0 / error_l2).ln() / (ds0 / ds).ln()
            };
            (order.is_finite().then_some(order), halved)
        };
        rows.push(OrderStudyRow {
            ds,
            error_l2,
            observed_order,
            halved,
            failure: None,
        });
    }
    rows
}

/// Runs `method` on each grid (step counts) and compares against a subsampled reference.
///
/// A grid whose run fails yields a row with NaN error and the failure message.
pub fn estimate_order(
    method: &dyn Integrator,
    span: (f64, f64),
    grids: &[usize],
    reference: &Trajectory,
    s0: &ExtendedState,
) -> Result<Vec<OrderStudyRow>> {
    estimate_order_with(method, span, grids, reference, s0, ErrorNorm::Jacobi)
}

pub fn estimate_order_with(
    method: &dyn Integrator,
    span: (f64, f64),
    grids: &[usize],
    reference: &Trajectory,
    s0: &ExtendedState,
    norm: ErrorNorm,
) -> Result<Vec<OrderStudyRow>> {
    let ref_steps = reference.len().saturating_sub(1);
    for &n in grids {
        if n == 0 || ref_steps % n != 0 {
            return Err(JhiError::GridMismatch(format!(
                "reference with {ref_steps} steps does not refine a grid of {n} steps"
            )));
        }
    }
    let outcomes: Vec<(f64, Option<String>)> = grids
        .par_iter()
        .map(|&n| match integrate_steps(method, span, n, s0.clone()) {
            Ok(traj) => Ok((trajectory_error_with(&traj, reference, ref_steps / n, norm)?, None)),
            Err(failure) if !failure.error.is_configuration() => Ok((f64::NAN, Some(failure.to_string()))),
            Err(failure) => Err(failure.error),
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = grids
        .iter()
        .zip(&outcomes)
        .map(|(&n, o)| ((span.1 - span.0) / n as f64, o.0))
        .collect();
    let mut rows = order_rows(&pairs, grids);
    for (row, (_, failure)) in rows.iter_mut().zip(outcomes) {
        row.failure = failure;
    }
    Ok(rows)
}

/// `(Hhat(s_0) - Hhat(s_n)) / t_n` along the trajectory.
pub fn hamiltonian_drift(traj: &Trajectory, model: &ModelDefinition) -> Result<DriftSeries> {
    let h0 = model.lifted_value(&traj.states[0])?;
    let values = traj
        .states
        .iter()
        .map(|s| {
            if s.t == 0.0 {
                return Err(JhiError::SingularScale);
            }
            Ok((h0 - model.lifted_value(s)?) / s.t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DriftSeries {
        times: traj.times.clone(),
        values,
    })
}

/// `C(s_n) - C(s_0)` along the trajectory.
pub fn casimir_drift(traj: &Trajectory, casimir: &Casimir) -> Result<DriftSeries> {
    let c0 = casimir.value(&traj.states[0])?;
    let values = traj
        .states
        .iter()
        .map(|s| Ok(casimir.value(s)? - c0))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DriftSeries {
        times: traj.times.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(points: &[(f64, f64)]) -> Trajectory {
        Trajectory {
            times: points.iter().map(|p| p.0).collect(),
            states: points.iter().map(|p| ExtendedState::new(vec![p.1], 1.0).unwrap()).collect(),
            method_label: "test".into(),
            diagnostics: Vec::new(),
        }
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let a = traj(&[(0.0, 1.0), (0.5, 2.0), (1.0, 3.0)]);
        assert_eq!(trajectory_error(&a, &a, 1).unwrap(), 0.0);
    }

    #[test]
    fn subsampling_matches_indices() {
        let fine = traj(&[(0.0, 1.0), (0.25, 9.0), (0.5, 2.0), (0.75, 9.0), (1.0, 3.0)]);
        let coarse = traj(&[(0.0, 1.0), (0.5, 2.5), (1.0, 3.0)]);
        // only the midpoint differs, by 0.5, and ds = 0.5
        assert!((trajectory_error(&coarse, &fine, 2).unwrap() - 0.5 * 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_grid_is_reported() {
        let fine = traj(&[(0.0, 1.0), (0.5, 2.0), (1.0, 3.0)]);
        let coarse = traj(&[(0.0, 1.0), (1.0, 3.0)]);
        assert!(matches!(trajectory_error(&coarse, &fine, 1), Err(JhiError::GridMismatch(_))));
        assert!(matches!(trajectory_error(&coarse, &fine, 3), Err(JhiError::GridMismatch(_))));
    }

    #[test]
    fn halved_grids_give_log2_ratio() {
        let rows = order_rows(&[(0.5, 4e-2), (0.25, 1e-2), (0.1, 1.6e-3)], &[2, 4, 10]);
        assert_eq!(rows[0].observed_order, None);
        assert!((rows[1].observed_order.unwrap() - 2.0).abs() < 1e-12);
        assert!(rows[1].halved);
        assert!(!rows[2].halved);
        assert!((rows[2].observed_order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn failed_grid_has_no_order() {
        let rows = order_rows(&[(0.5, f64::NAN), (0.25, 1e-2), (0.125, 2.5e-3)], &[2, 4, 8]);
        assert_eq!(rows[1].observed_order, None);
        assert!((rows[2].observed_order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_relative_to_reference_size() {
        let reference = traj(&[(0.0, 1.0), (0.5, 10.0), (1.0, 100.0)]);
        let close = traj(&[(0.0, 1.0), (0.5, 10.5), (1.0, 104.0)]);
        assert_eq!(divergence_time(&close, &reference, 1, 0.1).unwrap(), None);
        assert_eq!(divergence_time(&close, &reference, 1, 0.045).unwrap(), Some(0.5));
        let stopped = traj(&[(0.0, 1.0), (0.5, 10.0)]);
        assert_eq!(divergence_time(&stopped, &reference, 1, 0.1).unwrap(), Some(0.5));
    }
}
