mod config;
mod output;
mod run;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use jhi::models::{ModelDefinition, ModelRegistry};
use jhi::reproduce::{CriterionReport, CriterionRegistry, TableCriterion};

use config::{Emit, RunConfig, RunFlags};

#[derive(Parser)]
#[command(name = "jhi", version, about = "Experiment runner for Jacobi Hamiltonian integrators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory (emits trajectory.csv by default).
    Simulate(RunFlags),
    /// Convergence study on successively halved grids against an RK4 reference.
    OrderStudy(RunFlags),
    /// Hamiltonian and Casimir drift along one trajectory.
    Drift(RunFlags),
    /// The model catalog with dimensions, parameters and realization kinds.
    ListModels,
    /// Run every acceptance criterion and print one report row per criterion.
    ReproducePaper(ReproduceFlags),
}

#[derive(clap::Args)]
struct ReproduceFlags {
    /// Run only these criteria, comma separated.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
    /// Multiply the expected errors of a convergence criterion, as `id=factor`.
    #[arg(long = "scale-expected", value_parser = parse_scale)]
    scale_expected: Vec<(u8, f64)>,
    /// Also write reproduction_report.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scale(s: &str) -> std::result::Result<(u8, f64), String> {
    let (id, k) = s.split_once('=').ok_or_else(|| format!("expected id=factor, got '{s}'"))?;
    Ok((
        id.trim().parse().map_err(|_| format!("bad criterion id '{id}'"))?,
        k.trim().parse().map_err(|_| format!("bad factor '{k}'"))?,
    ))
}

/// Exit status 2: the request itself is invalid.
struct ConfigFailure(anyhow::Error);

impl From<anyhow::Error> for ConfigFailure {
    fn from(e: anyhow::Error) -> Self {
        ConfigFailure(e)
    }
}

impl From<jhi::JhiError> for ConfigFailure {
    fn from(e: jhi::JhiError) -> Self {
        ConfigFailure(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(f) => experiment("simulate", &f, |_| vec![Emit::Trajectory]),
        Command::OrderStudy(f) => experiment("order-study", &f, |_| vec![Emit::OrderStudy]),
        Command::Drift(f) => experiment("drift", &f, |m| {
            let mut e = vec![Emit::HamiltonianDrift];
            if !m.casimirs.is_empty() {
                e.push(Emit::CasimirDrift);
            }
            e
        }),
        Command::ListModels => list_models().map(|text| {
            print!("{text}");
            true
        }),
        Command::ReproducePaper(f) => reproduce(&f),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(ConfigFailure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn experiment(
    command: &str,
    flags: &RunFlags,
    default_emit: impl Fn(&ModelDefinition) -> Vec<Emit>,
) -> std::result::Result<bool, ConfigFailure> {
    let (config, model) = RunConfig::resolve(flags, default_emit)?;
    let outcome = run::run(command, &config, &model)?;
    for p in &outcome.files {
        println!("{}", p.display());
    }
    for f in &outcome.failures {
        eprintln!("numerical failure: {f}");
    }
    Ok(outcome.failures.is_empty())
}

fn list_models() -> std::result::Result<String, ConfigFailure> {
    let registry = ModelRegistry::standard();
    let mut out = String::new();
    for b in registry.builders() {
        let m = registry.build(b.name(), &Default::default())?;
        let params: Vec<String> = m.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let variants = if b.variants().is_empty() { "-".to_string() } else { b.variants().join(",") };
        writeln!(
            out,
            "{}\tdim={}\tcoordinates={}\trealization={}\tvariants={}\tparams={}\t{}",
            b.name(),
            m.dim(),
            m.coordinates.join(","),
            m.realization.kind(),
            variants,
            if params.is_empty() { "-".to_string() } else { params.join(",") },
            b.summary()
        )
        .expect("writing to a String");
    }
    Ok(out)
}

fn report_csv(rows: &[CriterionReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["criterion", "passed", "title", "failed_checks"])?;
    for r in rows {
        let mut failed: Vec<String> = r
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:.4e} (bound {})", c.label, c.observed, c.bound))
            .collect();
        if let Some(e) = &r.error {
            failed.push(e.clone());
        }
        w.write_record([r.id.to_string(), r.passed.to_string(), r.title.clone(), failed.join("; ")])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn reproduce(flags: &ReproduceFlags) -> std::result::Result<bool, ConfigFailure> {
    let mut registry = CriterionRegistry::standard();
    for &(id, k) in &flags.scale_expected {
        let Some(table) = TableCriterion::standard_tables().into_iter().find(|t| t.id == id) else {
            return Err(anyhow::anyhow!("criterion {id} is not a convergence table").into());
        };
        registry.register(Box::new(table.with_expected_scaled(k)));
    }
    let rows = select(&registry, flags.only.as_deref())?;
    let text = report_csv(&rows)?;
    print!("{text}");
    if let Some(dir) = &flags.out {
        std::fs::create_dir_all(dir).map_err(anyhow::Error::from)?;
        std::fs::write(dir.join("reproduction_report.csv"), &text).map_err(anyhow::Error::from)?;
    }
    Ok(rows.iter().all(|r| r.passed))
}

fn select(registry: &CriterionRegistry, only: Option<&[u8]>) -> Result<Vec<CriterionReport>> {
    match only {
        None => Ok(registry.run().rows),
        Some(ids) => {
            let mut rows = Vec::new();
            for &id in ids {
                match registry.run_one(id) {
                    Some(r) => rows.push(r),
                    None => bail!("no criterion {id} (known: {:?})", registry.ids()),
                }
            }
            Ok(rows)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_listing_has_one_line_per_model() {
        let text = list_models().ok().unwrap();
        assert_eq!(text.lines().count(), 7);
        let rigid = text.lines().find(|l| l.starts_with("rigid_body")).unwrap();
        assert!(rigid.contains("realization=first_order_approximate"));
        let planar = text.lines().find(|l| l.starts_with("jacobi2d")).unwrap();
        assert!(planar.contains("variants=quadratic,trig"));
    }

    #[test]
    fn report_has_a_header_and_one_row_per_criterion() {
        let row = CriterionReport {
            id: 4,
            title: "a, b".into(),
            passed: false,
            checks: Vec::new(),
            error: Some("boom".into()),
        };
        let text = report_csv(&[row]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["criterion,passed,title,failed_checks", "4,false,\"a, b\",boom"]);
    }

    #[test]
    fn scale_flag_parses() {
        assert_eq!(parse_scale("2=10").unwrap(), (2, 10.0));
        assert!(parse_scale("2").is_err());
    }
}
