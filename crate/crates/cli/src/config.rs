use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use jhi::models::{build_model, ModelDefinition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Emit {
    Trajectory,
    OrderStudy,
    HamiltonianDrift,
    CasimirDrift,
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Emit::Trajectory => "trajectory",
            Emit::OrderStudy => "order_study",
            Emit::HamiltonianDrift => "hamiltonian_drift",
            Emit::CasimirDrift => "casimir_drift",
        })
    }
}

/// Values read from a TOML file; every key is optional and mirrors [`RunConfig`].
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub method: Option<String>,
    pub span: Option<(f64, f64)>,
    pub ds: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub t0: Option<f64>,
    pub params: Option<BTreeMap<String, f64>>,
    pub outputs: Option<PathBuf>,
    pub emit: Option<Vec<Emit>>,
    pub levels: Option<usize>,
    pub reference_factor: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmitList(pub Vec<Emit>);

fn parse_emit(s: &str) -> std::result::Result<EmitList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| Emit::from_str(v, false))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(EmitList)
}

/// Flags shared by the run subcommands. Each one overrides the configuration file.
#[derive(Clone, Debug, Default, Args)]
pub struct RunFlags {
    /// Model name, optionally with a variant (e.g. jacobi2d:trig).
    #[arg(long)]
    pub model: Option<String>,
    /// Integration method (jhi1, jhi3, rk2, rk4, symplectic_euler, ...).
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub ds: Option<f64>,
    /// Time span as `start,end`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub span: Option<Vec<f64>>,
    /// Initial Jacobi coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Initial homogeneity coordinate.
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    /// Model parameter override, repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with RunConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Outputs to write, comma separated; an empty value writes only the manifest.
    #[arg(long, value_parser = parse_emit)]
    pub emit: Option<EmitList>,
    /// Number of grids in an order study, each half the previous step.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Reference resolution as a multiple of the finest grid.
    #[arg(long)]
    pub reference_factor: Option<usize>,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: String,
    pub method: String,
    pub span: (f64, f64),
    pub ds: f64,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub params: BTreeMap<String, f64>,
    pub outputs: PathBuf,
    pub emit: Vec<Emit>,
    pub levels: usize,
    pub reference_factor: usize,
}

impl RunConfig {
    /// Merges defaults, the optional file and the flags, then validates against the catalog.
    ///
    /// `default_emit` is used when neither the file nor the flags name the outputs.
    pub fn resolve(flags: &RunFlags, default_emit: impl Fn(&ModelDefinition) -> Vec<Emit>) -> Result<(Self, ModelDefinition)> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let model_name = flags
            .model
            .clone()
            .or(file.model)
            .ok_or_else(|| anyhow!("no model given (use --model or the config key 'model')"))?;
        let mut params = file.params.unwrap_or_default();
        params.extend(flags.params.iter().cloned());
        let model = build_model(&model_name, &params)?;

        let span = match flags.span.as_deref() {
            Some(&[a, b]) => (a, b),
            Some(v) => bail!("span needs two values start,end, got {}", v.len()),
            None => file.span.unwrap_or((0.0, 1.0)),
        };
        let x0 = flags.x0.clone().or(file.x0).unwrap_or_else(|| model.default_x0.clone());
        let mut emit = flags.emit.clone().map(|e| e.0).or(file.emit).unwrap_or_else(|| default_emit(&model));
        emit.sort();
        emit.dedup();
        let config = RunConfig {
            model: model.label(),
            method: flags.method.clone().or(file.method).unwrap_or_else(|| "jhi1".into()),
            span,
            ds: flags.ds.or(file.ds).unwrap_or(0.1),
            x0,
            t0: flags.t0.or(file.t0).unwrap_or(1.0),
            params: model.params.clone(),
            outputs: flags.out.clone().or(file.outputs).unwrap_or_else(|| PathBuf::from("jhi-out")),
            emit,
            levels: flags.levels.or(file.levels).unwrap_or(7),
            reference_factor: flags.reference_factor.or(file.reference_factor).unwrap_or(8),
        };
        config.validate(&model)?;
        Ok((config, model))
    }

    fn validate(&self, model: &ModelDefinition) -> Result<()> {
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            bail!("ds must be positive, got {}", self.ds);
        }
        if !(self.span.1 > self.span.0) {
            bail!("span end {} must exceed its start {}", self.span.1, self.span.0);
        }
        if self.x0.len() != model.dim() {
            bail!("x0 has {} entries but {} has dimension {}", self.x0.len(), self.model, model.dim());
        }
        if self.t0 == 0.0 || !self.t0.is_finite() {
            bail!("t0 must be finite and nonzero, got {}", self.t0);
        }
        if self.emit.contains(&Emit::CasimirDrift) && model.casimirs.is_empty() {
            bail!("{} has no Casimir functions to track", self.model);
        }
        if self.emit.contains(&Emit::OrderStudy) {
            let n = (self.span.1 - self.span.0) / self.ds;
            if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
                bail!("an order study needs ds to divide the span evenly");
            }
            if self.levels < 2 || self.levels > 20 {
                bail!("levels must lie in 2..=20, got {}", self.levels);
            }
            if self.reference_factor < 2 {
                bail!("reference_factor must be at least 2");
            }
        }
        Ok(())
    }

    pub fn coarsest_steps(&self) -> usize {
        ((self.span.1 - self.span.0) / self.ds).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(model: &str) -> RunFlags {
        RunFlags {
            model: Some(model.into()),
            ..RunFlags::default()
        }
    }

    #[test]
    fn defaults_come_from_the_model() {
        let (c, _) = RunConfig::resolve(&flags("jacobi3d"), |_| vec![Emit::Trajectory]).unwrap();
        assert_eq!(c.x0, vec![-1.0, 1.0, 1.0]);
        assert_eq!(c.t0, 1.0);
        assert_eq!(c.method, "jhi1");
        assert_eq!(c.emit, vec![Emit::Trajectory]);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "model = \"damped\"\nds = 0.5\nspan = [0.0, 2.0]\nemit = []\n[params]\ngamma = 0.1\n").unwrap();
        let f = RunFlags {
            config: Some(path),
            ds: Some(0.25),
            params: vec![("gamma".into(), 0.2)],
            ..RunFlags::default()
        };
        let (c, _) = RunConfig::resolve(&f, |_| vec![Emit::Trajectory]).unwrap();
        assert_eq!(c.ds, 0.25);
        assert_eq!(c.span, (0.0, 2.0));
        assert_eq!(c.params["gamma"], 0.2);
        assert!(c.emit.is_empty());
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "modle = \"damped\"\n").unwrap();
        assert!(FileConfig::load(&path).is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut f = flags("jacobi3d");
        f.ds = Some(-0.1);
        assert!(RunConfig::resolve(&f, |_| Vec::new()).is_err());
        let mut f = flags("jacobi3d");
        f.x0 = Some(vec![1.0]);
        assert!(RunConfig::resolve(&f, |_| Vec::new()).is_err());
        assert!(RunConfig::resolve(&flags("contact"), |_| vec![Emit::CasimirDrift]).is_err());
    }

    #[test]
    fn param_flags_parse() {
        assert_eq!(parse_param("gamma=0.5").unwrap(), ("gamma".into(), 0.5));
        assert!(parse_param("gamma").is_err());
        assert!(parse_param("gamma=x").is_err());
    }
}
