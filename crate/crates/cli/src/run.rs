use std::path::PathBuf;

use anyhow::{Context, Result};

use jhi::diagnostics::{casimir_drift, estimate_order, hamiltonian_drift};
use jhi::integrator::{build_method, integrate, reference_solution};
use jhi::jacobi::ExtendedState;
use jhi::models::ModelDefinition;

use crate::config::{Emit, RunConfig};
use crate::output::{write_drift, write_failure_report, write_manifest, write_order_study, write_trajectory};

/// Files written by a run and the numerical failures met along the way.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

/// Configuration problems surface as `Err`; numerical failures are collected in the outcome
/// after the partial outputs have been written.
pub fn run(command: &str, config: &RunConfig, model: &ModelDefinition) -> Result<RunOutcome> {
    let dir = &config.outputs;
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let method = build_method(&config.method, model)?;
    let s0 = ExtendedState::new(config.x0.clone(), config.t0)?;
    let mut files = Vec::new();
    let mut failures = Vec::new();

    let wants_path = config
        .emit
        .iter()
        .any(|e| matches!(e, Emit::Trajectory | Emit::HamiltonianDrift | Emit::CasimirDrift));
    if wants_path {
        let traj = match integrate(method.as_ref(), config.span, config.ds, s0.clone()) {
            Ok(t) => t,
            Err(f) if f.error.is_configuration() => return Err(f.error.into()),
            Err(f) => {
                failures.push(format!("{}: {f}", method.label()));
                f.partial
            }
        };
        if config.emit.contains(&Emit::Trajectory) {
            let p = dir.join("trajectory.csv");
            write_trajectory(&p, &traj, &model.coordinates)?;
            files.push(p);
        }
        if config.emit.contains(&Emit::HamiltonianDrift) {
            match hamiltonian_drift(&traj, model) {
                Ok(d) => {
                    let p = dir.join("hamiltonian_drift.csv");
                    write_drift(&p, &d)?;
                    files.push(p);
                }
                Err(e) => failures.push(format!("hamiltonian drift: {e}")),
            }
        }
        if config.emit.contains(&Emit::CasimirDrift) {
            for c in &model.casimirs {
                match casimir_drift(&traj, c) {
                    Ok(d) => {
                        let p = dir.join(format!("casimir_drift_{}.csv", c.name));
                        write_drift(&p, &d)?;
                        files.push(p);
                    }
                    Err(e) => failures.push(format!("casimir drift {}: {e}", c.name)),
                }
            }
        }
    }

    if config.emit.contains(&Emit::OrderStudy) {
        let n0 = config.coarsest_steps();
        let grids: Vec<usize> = (0..config.levels).map(|k| n0 << k).collect();
        let finest = grids[grids.len() - 1];
        let reference = reference_solution(model, config.span, finest * config.reference_factor + 1, s0.clone());
        match reference {
            Ok(reference) => {
                let rows = estimate_order(method.as_ref(), config.span, &grids, &reference, &s0)?;
                for r in &rows {
                    if let Some(f) = &r.failure {
                        failures.push(format!("order study grid ds = {}: {f}", r.ds));
                    }
                }
                let p = dir.join("order_study.csv");
                write_order_study(&p, &rows)?;
                files.push(p);
            }
            Err(e) if e.is_configuration() => return Err(e.into()),
            Err(e) => failures.push(format!("reference solution: {e}")),
        }
    }

    if !failures.is_empty() {
        files.push(write_failure_report(dir, &failures)?);
    }
    files.push(write_manifest(dir, command, config, &files, &failures)?);
    Ok(RunOutcome { files, failures })
}
