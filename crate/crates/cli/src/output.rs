use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use jhi::diagnostics::{DriftSeries, OrderStudyRow};
use jhi::integrator::Trajectory;

use crate::config::RunConfig;

/// 17 significant digits, enough for a lossless round trip of an f64.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, coordinates: &[String]) -> Result<()> {
    let mut header = vec!["time".to_string()];
    header.extend(coordinates.iter().cloned());
    header.push("t".into());
    let rows = traj.times.iter().zip(&traj.states).map(|(time, s)| {
        let mut r = vec![num(*time)];
        r.extend(s.x.iter().map(|v| num(*v)));
        r.push(num(s.t));
        r
    });
    write_rows(path, &header, rows)
}

pub fn write_order_study(path: &Path, rows: &[OrderStudyRow]) -> Result<()> {
    let header = ["ds", "error_l2", "observed_order"].map(String::from);
    let rows = rows
        .iter()
        .map(|r| vec![num(r.ds), num(r.error_l2), r.observed_order.map(num).unwrap_or_default()]);
    write_rows(path, &header, rows)
}

pub fn write_drift(path: &Path, series: &DriftSeries) -> Result<()> {
    let header = ["time", "value"].map(String::from);
    let rows = series.times.iter().zip(&series.values).map(|(t, v)| vec![num(*t), num(*v)]);
    write_rows(path, &header, rows)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    files: Vec<String>,
    failures: &'a [String],
    config: &'a RunConfig,
}

/// Writes `run_manifest.toml`; its first line is the only time-dependent content of a run.
pub fn write_manifest(dir: &Path, command: &str, config: &RunConfig, files: &[PathBuf], failures: &[String]) -> Result<PathBuf> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        failures,
        config,
    };
    let body = toml::to_string(&manifest).context("serializing the run manifest")?;
    let path = dir.join("run_manifest.toml");
    std::fs::write(&path, format!("# generated at unix time {secs}\n{body}"))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_failure_report(dir: &Path, failures: &[String]) -> Result<PathBuf> {
    let path = dir.join("failure_report.txt");
    let mut text = String::new();
    for f in failures {
        text.push_str(f);
        text.push('\n');
    }
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }
}
