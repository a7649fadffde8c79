//! The acceptance experiments as a registry of criteria with their expected values as data.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{casimir_drift, divergence_time, estimate_order, hamiltonian_drift, OrderStudyRow};
use crate::error::{JhiError, Result};
use crate::generating::homogeneity_defect;
use crate::integrator::{build_method, integrate, reference_solution, Integrator};
use crate::jacobi::{
    cotangent_homogeneity, homogeneity_action, lifted_vector_field, verify_jacobi_conditions, CotangentData, ExtendedState,
};
use crate::models::{build_model, exact_flow, ModelDefinition, ModelRegistry};

/// One measured quantity and the bound it was held to.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub observed: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    fn at_most(label: impl Into<String>, observed: f64, limit: f64) -> Self {
        Check {
            label: label.into(),
            observed,
            bound: format!("<= {limit:e}"),
            passed: observed <= limit,
        }
    }

    fn at_least(label: impl Into<String>, observed: f64, limit: f64) -> Self {
        Check {
            label: label.into(),
            observed,
            bound: format!(">= {limit:e}"),
            passed: observed >= limit,
        }
    }

    fn within(label: impl Into<String>, observed: f64, lo: f64, hi: f64) -> Self {
        Check {
            label: label.into(),
            observed,
            bound: format!("in [{lo}, {hi}]"),
            passed: observed >= lo && observed <= hi,
        }
    }

    fn factor_of(label: impl Into<String>, observed: f64, expected: f64, factor: f64) -> Self {
        Check {
            label: label.into(),
            observed,
            bound: format!("within x{factor} of {expected:e}"),
            passed: observed >= expected / factor && observed <= expected * factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "criterion {} {}: {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.title)?;
        if let Some(e) = &self.error {
            write!(f, " (error: {e})")?;
        }
        for c in self.checks.iter().filter(|c| !c.passed) {
            write!(f, "; {} = {:.3e} not {}", c.label, c.observed, c.bound)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproductionReport {
    pub rows: Vec<CriterionReport>,
}

impl ReproductionReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, id: u8) -> Option<&CriterionReport> {
        self.rows.iter().find(|r| r.id == id)
    }
}

pub trait Criterion: Send + Sync {
    fn id(&self) -> u8;
    fn title(&self) -> String;
    fn evaluate(&self) -> Result<Vec<Check>>;

    fn run(&self) -> CriterionReport {
        let (checks, error) = match self.evaluate() {
            Ok(c) => (c, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        CriterionReport {
            id: self.id(),
            title: self.title(),
            passed: error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.passed),
            checks,
            error,
        }
    }
}

pub struct CriterionRegistry {
    criteria: Vec<Box<dyn Criterion>>,
}

impl Default for CriterionRegistry {
    fn default() -> Self {
        CriterionRegistry::standard()
    }
}

impl CriterionRegistry {
    pub fn empty() -> Self {
        CriterionRegistry { criteria: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = CriterionRegistry::empty();
        r.register(Box::new(ExactFlowCriterion));
        for t in TableCriterion::standard_tables() {
            r.register(Box::new(t));
        }
        r.register(Box::new(DriftCriterion::standard()));
        r.register(Box::new(ClosedFormCriterion));
        r.register(Box::new(PropertyCriterion { cases: 112 }));
        r
    }

    /// Adds a criterion, replacing any with the same id.
    pub fn register(&mut self, c: Box<dyn Criterion>) {
        self.criteria.retain(|x| x.id() != c.id());
        self.criteria.push(c);
        self.criteria.sort_by_key(|c| c.id());
    }

    pub fn ids(&self) -> Vec<u8> {
        self.criteria.iter().map(|c| c.id()).collect()
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    pub fn run(&self) -> ReproductionReport {
        ReproductionReport {
            rows: self.criteria.par_iter().map(|c| c.run()).collect(),
        }
    }

    pub fn run_one(&self, id: u8) -> Option<CriterionReport> {
        self.criteria.iter().find(|c| c.id() == id).map(|c| c.run())
    }
}

fn model(spec: &str, params: &[(&str, f64)]) -> Result<ModelDefinition> {
    let overrides: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_model(spec, &overrides)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// JHI-1 on the quadratic 2D model against its closed-form flow.
pub struct ExactFlowCriterion;

impl Criterion for ExactFlowCriterion {
    fn id(&self) -> u8 {
        1
    }

    fn title(&self) -> String {
        "exact flow of jacobi2d with H = x^2 + y^2".into()
    }

    fn evaluate(&self) -> Result<Vec<Check>> {
        let m = model("jacobi2d:quadratic", &[])?;
        let span = (0.0, std::f64::consts::PI);
        let jhi = build_method("jhi1", &m)?;
        let traj = integrate(jhi.as_ref(), span, 0.03, m.initial_state())?;
        let exact = exact_flow(&m, &m.default_x0, span.1)?;
        let rec = m.recursion_coefficients(2)?;
        let mut s2 = 0.0f64;
        for p in m.sample_points(100, 0x2d) {
            s2 = s2.max(rec.values(&p)?[1].abs());
        }
        Ok(vec![
            Check::at_most("terminal distance to exact flow", dist(&traj.last().x, &exact), 1e-9),
            Check::at_most("max |S2| at 100 random points", s2, 1e-12),
        ])
    }
}

/// Order window and error magnitude expected from one method in a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodExpectation {
    pub method: &'static str,
    pub order_window: (f64, f64),
    /// Step count of the row whose error is compared.
    pub steps: usize,
    pub expected_error: f64,
    pub factor: f64,
}

/// A convergence table: grids, reference resolution and expectations per method.
#[derive(Clone, Debug, PartialEq)]
pub struct TableCriterion {
    pub id: u8,
    pub title: &'static str,
    pub model: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub span: (f64, f64),
    pub grids: Vec<usize>,
    pub reference_steps: usize,
    pub expectations: Vec<MethodExpectation>,
}

const FINEST_ROWS: usize = 3;

impl TableCriterion {
    pub fn standard_tables() -> Vec<TableCriterion> {
        let halving = |first: usize, rows: u32| (0..rows).map(|k| first << k).collect::<Vec<usize>>();
        let second = (1.85, 2.15);
        let fourth = (3.85, 4.15);
        let expect = |method, order_window, steps, expected_error, factor| MethodExpectation {
            method,
            order_window,
            steps,
            expected_error,
            factor,
        };
        vec![
            TableCriterion {
                id: 2,
                title: "convergence table for jacobi2d with H = cos(x) sin(y)",
                model: "jacobi2d:trig",
                params: vec![],
                span: (0.0, 1.0),
                grids: halving(4, 8),
                reference_steps: 2048,
                expectations: vec![expect("jhi1", second, 512, 1.30e-6, 2.0)],
            },
            TableCriterion {
                id: 3,
                title: "convergence table for jacobi3d",
                model: "jacobi3d",
                params: vec![],
                span: (0.0, 0.9),
                grids: halving(4, 8),
                reference_steps: 2048,
                expectations: vec![
                    expect("jhi1", second, 512, 1.60e-5, 2.0),
                    expect("jhi3", fourth, 512, 6.60e-10, 3.0),
                ],
            },
            TableCriterion {
                id: 4,
                title: "convergence table for jacobi4d (first-order realization)",
                model: "jacobi4d",
                params: vec![],
                span: (0.0, std::f64::consts::PI),
                grids: halving(16, 8),
                reference_steps: 4096,
                expectations: vec![expect("jhi1", second, 2048, 9.30e-7, 2.0)],
            },
            TableCriterion {
                id: 5,
                title: "convergence table for the damped oscillator",
                model: "damped",
                params: vec![("gamma", 0.01)],
                span: (0.0, 2.0),
                grids: halving(4, 7),
                reference_steps: 2048,
                expectations: vec![
                    expect("jhi1", second, 256, 1.00e-5, 2.0),
                    expect("jhi3", fourth, 256, 7.00e-11, 3.0),
                ],
            },
            TableCriterion {
                id: 6,
                title: "convergence table for Lotka-Volterra",
                model: "lotka_volterra",
                params: vec![
                    ("lambda1", 3.0),
                    ("lambda2", 4.0),
                    ("a", 1.0),
                    ("c", 0.0),
                    ("d", 1.0),
                    ("f", 1.0),
                ],
                span: (0.0, 1.0),
                grids: halving(4, 8),
                reference_steps: 2048,
                expectations: vec![expect("jhi1", second, 512, 3.70e-5, 2.0)],
            },
        ]
    }

    /// The same table with every expected error multiplied by `k`.
    pub fn with_expected_scaled(mut self, k: f64) -> Self {
        for e in &mut self.expectations {
            e.expected_error *= k;
        }
        self
    }

    pub fn study(&self, method: &str) -> Result<Vec<OrderStudyRow>> {
        let m = model(self.model, &self.params)?;
        let s0 = m.initial_state();
        let reference = reference_solution(&m, self.span, self.reference_steps + 1, s0.clone())?;
        let integrator = build_method(method, &m)?;
        estimate_order(integrator.as_ref(), self.span, &self.grids, &reference, &s0)
    }
}

impl Criterion for TableCriterion {
    fn id(&self) -> u8 {
        self.id
    }

    fn title(&self) -> String {
        self.title.into()
    }

    fn evaluate(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for e in &self.expectations {
            let rows = self.study(e.method)?;
            for row in &rows[rows.len().saturating_sub(FINEST_ROWS)..] {
                let order = row.observed_order.unwrap_or(f64::NAN);
                checks.push(Check::within(
                    format!("{} order at ds = {:.4e}", e.method, row.ds),
                    order,
                    e.order_window.0,
                    e.order_window.1,
                ));
            }
            let idx = self
                .grids
                .iter()
                .position(|&n| n == e.steps)
                .ok_or_else(|| JhiError::Configuration(format!("grid {} not in table", e.steps)))?;
            checks.push(Check::factor_of(
                format!("{} error at ds = {:.4e}", e.method, rows[idx].ds),
                rows[idx].error_l2,
                e.expected_error,
                e.factor,
            ));
        }
        Ok(checks)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftQuantity {
    Hamiltonian,
    Casimir(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

/// One run whose drift series maximum is held to a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftExpectation {
    pub model: &'static str,
    pub method: &'static str,
    pub span: (f64, f64),
    pub ds: f64,
    pub quantity: DriftQuantity,
    pub bound: Bound,
}

pub struct DriftCriterion {
    pub runs: Vec<DriftExpectation>,
}

impl DriftCriterion {
    pub fn standard() -> Self {
        use Bound::*;
        use DriftQuantity::*;
        let pi = std::f64::consts::PI;
        let run = |model, method, span, ds, quantity, bound| DriftExpectation {
            model,
            method,
            span,
            ds,
            quantity,
            bound,
        };
        DriftCriterion {
            runs: vec![
                run("jacobi2d:trig", "jhi1", (0.0, pi), 0.1, Hamiltonian, AtMost(5e-5)),
                run("jacobi2d:trig", "rk2", (0.0, pi), 0.1, Hamiltonian, AtLeast(1e-4)),
                run("jacobi3d", "jhi1", (0.0, 10.0), 0.01, Casimir("C2"), AtMost(1e-12)),
                run("jacobi3d", "jhi1", (0.0, 10.0), 0.01, Casimir("C3"), AtMost(1e-12)),
                run("jacobi3d", "jhi3", (0.0, 10.0), 0.01, Casimir("C2"), AtMost(1e-12)),
                run("jacobi3d", "jhi3", (0.0, 10.0), 0.01, Casimir("C3"), AtMost(1e-12)),
                run("jacobi4d", "jhi1", (0.0, 3.0 * pi), 0.001, Hamiltonian, AtMost(1e-7)),
                run("jacobi4d", "jhi1", (0.0, 3.0 * pi), 0.001, Casimir("C"), AtMost(1e-5)),
                run("damped", "jhi1", (0.0, 10.0), 0.5, Hamiltonian, AtMost(1e-3)),
                run("damped", "jhi3", (0.0, 10.0), 0.5, Hamiltonian, AtMost(1e-4)),
            ],
        }
    }
}

impl Criterion for DriftCriterion {
    fn id(&self) -> u8 {
        7
    }

    fn title(&self) -> String {
        "invariant drift magnitudes".into()
    }

    fn evaluate(&self) -> Result<Vec<Check>> {
        self.runs
            .par_iter()
            .map(|r| {
                let m = model(r.model, &[])?;
                let method = build_method(r.method, &m)?;
                let traj = integrate(method.as_ref(), r.span, r.ds, m.initial_state())?;
                let (series, what) = match r.quantity {
                    DriftQuantity::Hamiltonian => (hamiltonian_drift(&traj, &m)?, "Hamiltonian".to_string()),
                    DriftQuantity::Casimir(name) => {
                        let c = m
                            .casimir(name)
                            .ok_or_else(|| JhiError::Configuration(format!("{} has no Casimir {name}", m.label())))?;
                        (casimir_drift(&traj, c)?, format!("Casimir {name}"))
                    }
                };
                let label = format!("{} {} max {what} drift", r.model, r.method);
                Ok(match r.bound {
                    Bound::AtMost(v) => Check::at_most(label, series.max_abs(), v),
                    Bound::AtLeast(v) => Check::at_least(label, series.max_abs(), v),
                })
            })
            .collect()
    }
}

/// Jet-recursion `S_3` against the closed forms installed as model overrides.
pub struct ClosedFormCriterion;

impl Criterion for ClosedFormCriterion {
    fn id(&self) -> u8 {
        8
    }

    fn title(&self) -> String {
        "recursion S3 against closed forms".into()
    }

    fn evaluate(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for spec in ["jacobi3d", "damped"] {
            let m = model(spec, &[])?;
            let closed = m.coefficients(3)?;
            let rec = m.recursion_coefficients(3)?;
            let mut worst = 0.0f64;
            for p in m.sample_points(100, 0x53) {
                let want = closed.values(&p)?[2];
                let got = rec.values(&p)?[2];
                worst = worst.max((got - want).abs() / want.abs().max(1e-12));
            }
            checks.push(Check::at_most(format!("{spec} max relative S3 difference"), worst, 1e-8));
        }
        Ok(checks)
    }
}

/// Randomized invariants over the catalog plus the qualitative comparisons.
pub struct PropertyCriterion {
    /// Cases per property, spread round-robin over the catalog.
    pub cases: usize,
}

fn catalog() -> Result<Vec<ModelDefinition>> {
    let registry = ModelRegistry::standard();
    let mut out = Vec::new();
    for b in registry.builders() {
        let variants: Vec<Option<&str>> = if b.variants().is_empty() {
            vec![None]
        } else {
            b.variants().iter().map(|v| Some(*v)).collect()
        };
        for v in variants {
            let spec = match v {
                Some(v) => format!("{}:{v}", b.name()),
                None => b.name().to_string(),
            };
            out.push(registry.build(&spec, &BTreeMap::new())?);
        }
    }
    Ok(out)
}

struct Case<'a> {
    model: &'a ModelDefinition,
    point: Vec<f64>,
    xi: Vec<f64>,
    z: f64,
}

impl PropertyCriterion {
    fn cases<'a>(&self, models: &'a [ModelDefinition], seed: u64) -> Vec<Case<'a>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.cases)
            .map(|i| {
                let model = &models[i % models.len()];
                let point = model.sample_with(&mut rng);
                let xi = (0..point.len()).map(|_| rng.gen_range(-0.05..0.05)).collect();
                let z = rng.gen_range(0.5..2.0);
                Case { model, point, xi, z }
            })
            .collect()
    }

    fn invariants(&self) -> Result<Vec<Check>> {
        let models = catalog()?;
        let cases = self.cases(&models, 0x9e37);
        let rel = |a: &[f64], b: &[f64]| dist(a, b) / (1.0 + norm(b));
        let mut unit = 0.0f64;
        let mut reflection = 0.0f64;
        let mut equivariance = 0.0f64;
        let mut homogeneity = 0.0f64;
        let mut conservation = 0.0f64;
        for c in &cases {
            let r = &c.model.realization;
            let zero = vec![0.0; c.point.len()];
            unit = unit.max(rel(&r.alpha_values(&c.point, &zero)?, &c.point));
            let neg: Vec<f64> = c.xi.iter().map(|v| -v).collect();
            reflection = reflection.max(rel(&r.beta_values(&c.point, &c.xi)?, &r.alpha_values(&c.point, &neg)?));
            let cot = CotangentData::from_covector(ExtendedState::from_slice(&c.point)?, &c.xi)?;
            let moved = r.alpha(&cotangent_homogeneity(&cot, c.z)?)?;
            let expected = homogeneity_action(&r.alpha(&cot)?, c.z)?;
            equivariance = equivariance.max(rel(&moved.to_vec(), &expected.to_vec()));
            let coeffs = c.model.recursion_coefficients(3)?;
            homogeneity = homogeneity.max(homogeneity_defect(&coeffs, &ExtendedState::from_slice(&c.point)?, c.z)?);
            let s = ExtendedState::from_slice(&c.point)?;
            let x = lifted_vector_field(&c.model.structure, &c.model.hamiltonian, &s)?;
            let (_, mut grad) = c.model.hamiltonian.gradient(&s.x)?;
            grad.iter_mut().for_each(|g| *g *= s.t);
            grad.push(c.model.hamiltonian.value(&s.x)?);
            let dot: f64 = grad.iter().zip(&x).map(|(a, b)| a * b).sum();
            conservation = conservation.max(dot.abs() / (1.0 + norm(&grad) * norm(&x)));
        }
        let mut jacobi = 0.0f64;
        for m in &models {
            let points: Vec<Vec<f64>> = m.sample_points(self.cases, 0x1ac0).into_iter().map(|mut p| {
                p.pop();
                p
            }).collect();
            jacobi = jacobi.max(verify_jacobi_conditions(&m.structure, &points, 1e-9).max_residual());
        }
        Ok(vec![
            Check::at_most("bi-realization unit alpha(s, 0) = s", unit, 1e-12),
            Check::at_most("bi-realization reflection beta(xi) = alpha(-xi)", reflection, 1e-14),
            Check::at_most("bi-realization homogeneity", equivariance, 1e-10),
            Check::at_most("S_i 1-homogeneity", homogeneity, 1e-9),
            Check::at_most("X_Hhat(Hhat) = 0", conservation, 1e-12),
            Check::at_most("Jacobi conditions over the catalog", jacobi, 1e-9),
        ])
    }

    fn step_properties(&self) -> Result<Vec<Check>> {
        let models = catalog()?;
        let methods: Vec<(Box<dyn Integrator>, Box<dyn Integrator>)> = models
            .iter()
            .map(|m| Ok((build_method("jhi1", m)?, build_method("jhi3", m)?)))
            .collect::<Result<_>>()?;
        let cases = self.cases(&models, 0x5eb);
        let ds = 0.02;
        let outcomes: Vec<(f64, f64)> = cases
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let (a, b) = &methods[i % models.len()];
                let method = if (i / models.len()) % 2 == 0 { a } else { b };
                let s = ExtendedState::from_slice(&c.point)?;
                let (fwd, _) = method.step(&s, ds)?;
                let (back, _) = method.step(&fwd, -ds)?;
                let reversal = dist(&back.to_vec(), &s.to_vec()) / (1.0 + norm(&s.to_vec()));
                let (scaled, _) = method.step(&homogeneity_action(&s, c.z)?, ds)?;
                let expected = homogeneity_action(&fwd, c.z)?;
                let commute = dist(&scaled.to_vec(), &expected.to_vec()) / (1.0 + norm(&expected.to_vec()));
                Ok((reversal, commute))
            })
            .collect::<Result<_>>()?;
        let reversal = outcomes.iter().map(|o| o.0).fold(0.0, f64::max);
        let commute = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
        Ok(vec![
            Check::at_most("JHI step reversal", reversal, 1e-10),
            Check::at_most("discrete-map homogeneity commutation", commute, 1e-10),
        ])
    }

    fn qualitative(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();

        // contact blow-up: first time the run leaves a 1% band around the reference
        let m = model("contact", &[])?;
        let span = (0.0, 20.0);
        let reference = reference_solution(&m, span, 20_001, m.initial_state())?;
        let divergence = |name: &str| -> Result<f64> {
            let method = build_method(name, &m)?;
            let traj = match integrate(method.as_ref(), span, 0.1, m.initial_state()) {
                Ok(t) => t,
                Err(f) => f.partial,
            };
            Ok(divergence_time(&traj, &reference, 100, 1e-2)?.unwrap_or(f64::INFINITY))
        };
        let (jhi, rk2) = (divergence("jhi1")?, divergence("rk2")?);
        checks.push(Check {
            label: "contact divergence time JHI-1 minus RK-2".into(),
            observed: jhi - rk2,
            bound: "> 0".into(),
            passed: jhi > rk2,
        });

        // Lotka-Volterra: closest approach to x0 near the first return
        let m = model("lotka_volterra", &[])?;
        let closest = |name: &str| -> Result<f64> {
            let method = build_method(name, &m)?;
            let traj = integrate(method.as_ref(), (0.0, 5.0), 0.05, m.initial_state())?;
            Ok(traj
                .times
                .iter()
                .zip(&traj.states)
                .filter(|(t, _)| (1.0..=2.2).contains(*t))
                .map(|(_, s)| dist(&s.x, &m.default_x0))
                .fold(f64::INFINITY, f64::min))
        };
        checks.push(Check::at_most("LV JHI-1 return distance over one period", closest("jhi1")?, 0.05));
        let rk2 = closest("rk2")?;
        checks.push(Check {
            label: "LV RK-2 return distance over one period".into(),
            observed: rk2,
            bound: "> 0.05".into(),
            passed: rk2 > 0.05,
        });

        let m = model("rigid_body", &[])?;
        let method = build_method("jhi1", &m)?;
        let traj = integrate(method.as_ref(), (0.0, 2.0), 0.005, m.initial_state())?;
        checks.push(Check::at_most("rigid body JHI-1 Hamiltonian drift", hamiltonian_drift(&traj, &m)?.max_abs(), 1e-2));
        Ok(checks)
    }
}

impl Criterion for PropertyCriterion {
    fn id(&self) -> u8 {
        9
    }

    fn title(&self) -> String {
        format!("property suites over {} randomized cases each", self.cases)
    }

    fn evaluate(&self) -> Result<Vec<Check>> {
        let mut checks = self.invariants()?;
        checks.extend(self.step_properties()?);
        checks.extend(self.qualitative()?);
        Ok(checks)
    }
}

/// Runs every registered criterion.
pub fn reproduce_all() -> ReproductionReport {
    CriterionRegistry::standard().run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_as_documented() {
        assert!(Check::factor_of("e", 1.9e-5, 1e-5, 2.0).passed);
        assert!(!Check::factor_of("e", 2.1e-5, 1e-5, 2.0).passed);
        assert!(!Check::within("o", f64::NAN, 1.85, 2.15).passed);
        assert!(Check::at_least("d", 1e-3, 1e-4).passed);
    }

    #[test]
    fn registry_holds_nine_criteria_in_order() {
        let r = CriterionRegistry::standard();
        assert_eq!(r.ids(), (1..=9).collect::<Vec<u8>>());
    }

    struct Broken;

    impl Criterion for Broken {
        fn id(&self) -> u8 {
            42
        }
        fn title(&self) -> String {
            "broken".into()
        }
        fn evaluate(&self) -> Result<Vec<Check>> {
            Err(JhiError::Configuration("nope".into()))
        }
    }

    #[test]
    fn an_error_is_a_failure() {
        let row = Broken.run();
        assert!(!row.passed);
        assert!(row.to_string().contains("FAIL"));
    }

    #[test]
    fn scaling_expectations_touches_every_method() {
        let t = TableCriterion::standard_tables().remove(1).with_expected_scaled(10.0);
        assert!((t.expectations[0].expected_error - 1.6e-4).abs() < 1e-18);
        assert!((t.expectations[1].expected_error - 6.6e-9).abs() < 1e-20);
    }
}
