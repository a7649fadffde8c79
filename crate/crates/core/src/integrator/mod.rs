//! Time stepping: the JHI scheme, explicit Runge-Kutta baselines and symplectic Euler.

mod classic;
mod jhi;

use std::fmt;

use serde::Serialize;

use crate::error::{JhiError, Result};
use crate::jacobi::ExtendedState;
use crate::models::ModelDefinition;

pub use classic::{RungeKutta, RungeKuttaKind, SymplecticEuler};
pub use jhi::{jhi_step, solve_implicit, JhiIntegrator, NewtonOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    Dual,
    FiniteDifference,
}

/// Step size, generating order and Newton controls.
#[derive(Clone, Debug, PartialEq)]
pub struct StepConfig {
    pub ds: f64,
    pub order: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub jacobian_mode: JacobianMode,
}

impl StepConfig {
    pub fn new(ds: f64, order: usize) -> Result<Self> {
        let cfg = StepConfig {
            ds,
            order,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            jacobian_mode: JacobianMode::Dual,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            return Err(JhiError::Configuration(format!("step size must be positive, got {}", self.ds)));
        }
        if !(1..=crate::generating::MAX_ORDER).contains(&self.order) {
            return Err(JhiError::Configuration(format!("order {} outside 1..=4", self.order)));
        }
        Ok(())
    }
}

/// Per-step record: Newton iterations, final residual and the step actually taken.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub ds: f64,
    pub partial: bool,
}

impl StepDiagnostics {
    pub fn explicit(ds: f64) -> Self {
        StepDiagnostics {
            iterations: 0,
            residual: 0.0,
            ds,
            partial: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ExtendedState>,
    pub method_label: String,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn start(t0: f64, s0: ExtendedState, label: &str) -> Self {
        Trajectory {
            times: vec![t0],
            states: vec![s0],
            method_label: label.to_string(),
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &ExtendedState {
        self.states.last().expect("trajectory has an initial state")
    }

    fn push(&mut self, time: f64, state: ExtendedState, diag: StepDiagnostics) {
        self.times.push(time);
        self.states.push(state);
        self.diagnostics.push(diag);
    }
}

/// A one-step method on extended states.
pub trait Integrator: Send + Sync {
    fn label(&self) -> String;
    fn step(&self, state: &ExtendedState, ds: f64) -> Result<(ExtendedState, StepDiagnostics)>;
}

/// Options shared by the method factories.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOptions {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub jacobian_mode: JacobianMode,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            newton_tol: 1e-12,
            newton_max_iter: 50,
            jacobian_mode: JacobianMode::Dual,
        }
    }
}

/// A named integration method that can be instantiated for a model.
pub trait MethodFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, model: &ModelDefinition, options: &MethodOptions) -> Result<Box<dyn Integrator>>;
}

struct JhiFactory(usize);
struct RkFactory(RungeKuttaKind);
struct SymplecticEulerFactory;

impl MethodFactory for JhiFactory {
    fn name(&self) -> &'static str {
        ["jhi1", "jhi2", "jhi3", "jhi4"][self.0 - 1]
    }

    fn summary(&self) -> &'static str {
        "Jacobi Hamiltonian integrator with generating order k"
    }

    fn build(&self, model: &ModelDefinition, options: &MethodOptions) -> Result<Box<dyn Integrator>> {
        Ok(Box::new(JhiIntegrator::new(model, self.0, options)?))
    }
}

impl MethodFactory for RkFactory {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn summary(&self) -> &'static str {
        match self.0 {
            RungeKuttaKind::Midpoint => "explicit midpoint rule on the lifted field",
            RungeKuttaKind::Heun => "Heun's method on the lifted field",
            RungeKuttaKind::Classic4 => "classical fourth-order Runge-Kutta on the lifted field",
        }
    }

    fn build(&self, model: &ModelDefinition, _options: &MethodOptions) -> Result<Box<dyn Integrator>> {
        Ok(Box::new(RungeKutta::new(model, self.0)))
    }
}

impl MethodFactory for SymplecticEulerFactory {
    fn name(&self) -> &'static str {
        "symplectic_euler"
    }

    fn summary(&self) -> &'static str {
        "semi-implicit symplectic Euler on contact models"
    }

    fn build(&self, model: &ModelDefinition, options: &MethodOptions) -> Result<Box<dyn Integrator>> {
        Ok(Box::new(SymplecticEuler::new(model, options)?))
    }
}

/// Integration methods registered by name.
pub struct MethodRegistry {
    factories: Vec<Box<dyn MethodFactory>>,
}

impl Default for MethodRegistry {
    fn default() -> Self {
        MethodRegistry::standard()
    }
}

impl MethodRegistry {
    pub fn standard() -> Self {
        let mut r = MethodRegistry { factories: Vec::new() };
        for k in 1..=4 {
            r.register(Box::new(JhiFactory(k)));
        }
        r.register(Box::new(RkFactory(RungeKuttaKind::Midpoint)));
        r.register(Box::new(RkFactory(RungeKuttaKind::Heun)));
        r.register(Box::new(RkFactory(RungeKuttaKind::Classic4)));
        r.register(Box::new(SymplecticEulerFactory));
        r
    }

    pub fn register(&mut self, factory: Box<dyn MethodFactory>) {
        self.factories.retain(|f| f.name() != factory.name());
        self.factories.push(factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.iter().map(|f| f.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn MethodFactory> {
        self.factories.iter().find(|f| f.name() == name).map(|f| f.as_ref())
    }

    pub fn build(&self, name: &str, model: &ModelDefinition, options: &MethodOptions) -> Result<Box<dyn Integrator>> {
        let f = self
            .get(name)
            .ok_or_else(|| JhiError::Configuration(format!("unknown method '{name}' (known: {})", self.names().join(", "))))?;
        f.build(model, options)
    }
}

/// Builds a registered method for `model` with default options.
pub fn build_method(name: &str, model: &ModelDefinition) -> Result<Box<dyn Integrator>> {
    MethodRegistry::standard().build(name, model, &MethodOptions::default())
}

/// A run that stopped early, with the states computed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationFailure {
    pub partial: Trajectory,
    pub error: JhiError,
}

impl fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} states)", self.error, self.partial.len())
    }
}

impl std::error::Error for IntegrationFailure {}

impl From<IntegrationFailure> for JhiError {
    fn from(f: IntegrationFailure) -> JhiError {
        f.error
    }
}

fn run_steps(
    method: &dyn Integrator,
    s0: ExtendedState,
    t_a: f64,
    steps: impl Iterator<Item = (f64, f64, bool)>,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let mut traj = Trajectory::start(t_a, s0, &method.label());
    for (index, (time, h, partial)) in steps.enumerate() {
        match method.step(traj.last(), h) {
            Ok((next, mut diag)) => {
                diag.partial = partial;
                traj.push(time, next, diag);
            }
            Err(e) => {
                let error = if e.is_configuration() {
                    e
                } else {
                    JhiError::StepFailure {
                        index,
                        source: Box::new(e),
                    }
                };
                return Err(IntegrationFailure { partial: traj, error });
            }
        }
    }
    Ok(traj)
}

/// Integrates over `[t_a, t_b]` with step `ds`, shrinking the last step to land on `t_b`.
pub fn integrate(
    method: &dyn Integrator,
    span: (f64, f64),
    ds: f64,
    s0: ExtendedState,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let (t_a, t_b) = span;
    let fail = |msg: String, s0: ExtendedState| IntegrationFailure {
        partial: Trajectory::start(t_a, s0, &method.label()),
        error: JhiError::Configuration(msg),
    };
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(fail(format!("step size must be positive, got {ds}"), s0));
    }
    if !(t_b >= t_a) {
        return Err(fail(format!("span end {t_b} precedes start {t_a}"), s0));
    }
    let len = t_b - t_a;
    let ratio = len / ds;
    let mut full = ratio.floor() as usize;
    if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        full = ratio.round() as usize;
    }
    let remainder = len - full as f64 * ds;
    let partial = remainder > 1e-12 * len.max(1.0);
    let steps = (1..=full)
        .map(move |i| {
            let time = if i == full && !partial { t_b } else { t_a + i as f64 * ds };
            (time, ds, false)
        })
        .chain(partial.then_some((t_b, remainder, true)));
    run_steps(method, s0, t_a, steps)
}

/// Integrates with exactly `n_steps` uniform steps over the span.
pub fn integrate_steps(
    method: &dyn Integrator,
    span: (f64, f64),
    n_steps: usize,
    s0: ExtendedState,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let (t_a, t_b) = span;
    if n_steps == 0 {
        return Ok(Trajectory::start(t_a, s0, &method.label()));
    }
    let h = (t_b - t_a) / n_steps as f64;
    let steps = (1..=n_steps).map(move |i| (t_a + (t_b - t_a) * i as f64 / n_steps as f64, h, false));
    run_steps(method, s0, t_a, steps)
}

/// RK4 on the lifted field with `n_points` grid points (so `n_points - 1` steps).
pub fn reference_solution(model: &ModelDefinition, span: (f64, f64), n_points: usize, s0: ExtendedState) -> Result<Trajectory> {
    if n_points < 2 {
        return Err(JhiError::Configuration("reference needs at least two grid points".into()));
    }
    let rk4 = RungeKutta::new(model, RungeKuttaKind::Classic4);
    Ok(integrate_steps(&rk4, span, n_points - 1, s0)?)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::models::{build_model, exact_flow};

    fn model(spec: &str) -> ModelDefinition {
        build_model(spec, &BTreeMap::new()).unwrap()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn zero_step_is_identity() {
        let m = model("jacobi3d");
        let jhi = build_method("jhi3", &m).unwrap();
        let s0 = m.initial_state();
        let (s1, d) = jhi.step(&s0, 0.0).unwrap();
        assert_eq!(s1, s0);
        assert_eq!(d.iterations, 0);
    }

    #[test]
    fn quadratic_2d_is_exact() {
        let m = model("jacobi2d:quadratic");
        let jhi = build_method("jhi1", &m).unwrap();
        let traj = integrate(jhi.as_ref(), (0.0, std::f64::consts::PI), 0.03, m.initial_state()).unwrap();
        let exact = exact_flow(&m, &m.default_x0, std::f64::consts::PI).unwrap();
        assert!(dist(&traj.last().x, &exact) < 1e-9);
    }

    #[test]
    fn contact_step_is_close_to_fine_rk4() {
        let m = model("contact");
        let s0 = m.initial_state();
        let jhi = build_method("jhi1", &m).unwrap();
        let (s1, diag) = jhi.step(&s0, 0.1).unwrap();
        assert!(diag.iterations <= 6);
        let fine = reference_solution(&m, (0.0, 0.1), 1001, s0).unwrap();
        // local error of a second-order scheme
        assert!(dist(&s1.to_vec(), &fine.last().to_vec()) < 1e-3);
    }

    #[test]
    fn backward_step_undoes_forward_step() {
        for spec in ["jacobi3d", "damped", "lotka_volterra"] {
            let m = model(spec);
            let jhi = build_method("jhi3", &m).unwrap();
            let s0 = m.initial_state();
            let (s1, _) = jhi.step(&s0, 0.05).unwrap();
            let (back, _) = jhi.step(&s1, -0.05).unwrap();
            assert!(dist(&back.to_vec(), &s0.to_vec()) < 1e-10, "{spec}");
        }
    }

    #[test]
    fn finite_difference_jacobian_agrees_with_jets() {
        let m = model("rigid_body");
        let fd = MethodOptions {
            jacobian_mode: JacobianMode::FiniteDifference,
            ..MethodOptions::default()
        };
        let a = JhiIntegrator::new(&m, 1, &MethodOptions::default()).unwrap();
        let b = JhiIntegrator::new(&m, 1, &fd).unwrap();
        let s0 = m.initial_state();
        let (x, _) = a.step(&s0, 0.05).unwrap();
        let (y, _) = b.step(&s0, 0.05).unwrap();
        assert!(dist(&x.to_vec(), &y.to_vec()) < 1e-10);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let m = model("jacobi3d");
        let rk4 = build_method("rk4", &m).unwrap();
        let fine = reference_solution(&m, (0.0, 0.9), 4097, m.initial_state()).unwrap();
        let err = |n: usize| dist(&integrate_steps(rk4.as_ref(), (0.0, 0.9), n, m.initial_state()).unwrap().last().x, &fine.last().x);
        let ratio = err(64) / err(128);
        assert!((ratio.log2() - 4.0).abs() < 0.3, "observed {}", ratio.log2());
    }

    #[test]
    fn last_step_lands_on_span_end() {
        let m = model("damped");
        let rk2 = build_method("rk2", &m).unwrap();
        let traj = integrate(rk2.as_ref(), (0.0, 1.0), 0.3, m.initial_state()).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!(traj.diagnostics[3].partial);
        assert!((traj.diagnostics[3].ds - 0.1).abs() < 1e-12);
        let exact = integrate(rk2.as_ref(), (0.0, 1.0), 0.25, m.initial_state()).unwrap();
        assert_eq!(exact.len(), 5);
        assert!(exact.diagnostics.iter().all(|d| !d.partial));
    }

    #[test]
    fn invalid_step_is_a_configuration_error() {
        let m = model("damped");
        let rk2 = build_method("rk2", &m).unwrap();
        let f = integrate(rk2.as_ref(), (0.0, 1.0), 0.0, m.initial_state()).unwrap_err();
        assert!(f.error.is_configuration());
        assert!(StepConfig::new(-0.1, 1).is_err());
        assert!(StepConfig::new(0.1, 5).is_err());
    }

    #[test]
    fn registry_lookup() {
        let r = MethodRegistry::standard();
        for name in ["jhi1", "jhi3", "rk2", "rk4", "symplectic_euler"] {
            assert!(r.names().contains(&name));
        }
        let m = model("jacobi3d");
        assert!(matches!(r.build("euler", &m, &MethodOptions::default()), Err(JhiError::Configuration(_))));
        assert!(matches!(r.build("symplectic_euler", &m, &MethodOptions::default()), Err(JhiError::Capability(_))));
        assert!(r.build("symplectic_euler", &model("damped"), &MethodOptions::default()).is_ok());
    }

    #[test]
    fn domain_exit_reports_step_index_and_partial_run() {
        let m = model("lotka_volterra");
        let jhi = build_method("jhi1", &m).unwrap();
        let f = integrate_steps(jhi.as_ref(), (0.0, 1.0), 4, m.initial_state()).unwrap_err();
        assert!(matches!(f.error, JhiError::StepFailure { index: 1, .. }));
        assert_eq!(f.partial.len(), 2);
    }
}
