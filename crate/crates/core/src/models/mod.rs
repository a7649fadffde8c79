//! The model catalog and its name-based registry.

mod catalog;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::birealization::BiRealization;
use crate::error::{JhiError, Result};
use crate::generating::{compute_coefficients, GeneratingCoefficients};
use crate::jacobi::{ExtendedState, HamiltonianField, JacobiStructure, ScalarField};
use crate::jets::{evaluate, Jet};

pub use catalog::{
    ContactModel, DampedOscillator, Jacobi2d, Jacobi3d, Jacobi4d, LotkaVolterra, RigidBody,
};

/// A named Casimir function of the Poissonized structure.
#[derive(Clone)]
pub struct Casimir {
    pub name: String,
    pub field: ScalarField,
}

impl Casimir {
    pub fn new<F>(name: &str, f: F) -> Self
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        Casimir {
            name: name.to_string(),
            field: std::sync::Arc::new(f),
        }
    }

    pub fn value(&self, s: &ExtendedState) -> Result<f64> {
        evaluate(self.field.as_ref(), &s.to_vec())
    }
}

/// A fully wired system: structure, Hamiltonian, realization and metadata.
#[derive(Clone)]
pub struct ModelDefinition {
    pub name: String,
    pub variant: Option<String>,
    pub coordinates: Vec<String>,
    pub structure: JacobiStructure,
    pub hamiltonian: HamiltonianField,
    pub realization: BiRealization,
    pub casimirs: Vec<Casimir>,
    pub e_of_h: ScalarField,
    pub s_overrides: Vec<(usize, ScalarField)>,
    pub params: BTreeMap<String, f64>,
    pub default_x0: Vec<f64>,
    pub default_t0: f64,
    pub domain_note: String,
    /// Whether the structure is the contact one, so the symplectic Euler baseline applies.
    pub contact_form: bool,
    /// Half-width of the box around `default_x0` used for random admissible samples.
    pub sample_radius: f64,
}

impl fmt::Debug for ModelDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelDefinition({})", self.label())
    }
}

impl ModelDefinition {
    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn label(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}:{}", self.name, v),
            None => self.name.clone(),
        }
    }

    pub fn initial_state(&self) -> ExtendedState {
        ExtendedState::new(self.default_x0.clone(), self.default_t0).expect("catalog initial state")
    }

    pub fn lifted_hamiltonian(&self) -> ScalarField {
        self.hamiltonian.lifted()
    }

    pub fn lifted_value(&self, s: &ExtendedState) -> Result<f64> {
        Ok(s.t * self.hamiltonian.value(&s.x)?)
    }

    /// Generating coefficients up to order `k` with closed-form overrides and zero detection.
    pub fn coefficients(&self, k: usize) -> Result<GeneratingCoefficients> {
        let mut c = compute_coefficients(self.lifted_hamiltonian(), &self.realization, k)?;
        for (i, f) in &self.s_overrides {
            c = c.with_override(*i, f.clone());
        }
        if k >= 2 {
            c = c.with_zero_detection(&self.sample_points(100, 0x5eed))?;
        }
        Ok(c)
    }

    /// Generating coefficients from the recursion alone.
    pub fn recursion_coefficients(&self, k: usize) -> Result<GeneratingCoefficients> {
        compute_coefficients(self.lifted_hamiltonian(), &self.realization, k)
    }

    /// Random extended points near the default initial condition with `t` in `[0.5, 2]`.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_with(&mut rng)).collect()
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let r = self.sample_radius;
        let mut p: Vec<f64> = self.default_x0.iter().map(|&v| v + rng.gen_range(-r..=r)).collect();
        p.push(rng.gen_range(0.5..=2.0));
        p
    }

    pub fn e_of_h_value(&self, x: &[f64]) -> Result<f64> {
        evaluate(self.e_of_h.as_ref(), x)
    }

    pub fn casimir(&self, name: &str) -> Option<&Casimir> {
        self.casimirs.iter().find(|c| c.name == name)
    }
}

/// A catalog entry that can build its model from parameter overrides.
pub trait ModelBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Named Hamiltonian variants; the first one is the default.
    fn variants(&self) -> &'static [&'static str] {
        &[]
    }
    fn default_params(&self) -> Vec<(&'static str, f64)>;
    /// Parameter values implied by a variant, applied before user overrides.
    fn variant_params(&self, _variant: &str) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn build(&self, variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition>;
}

/// Models registered by name.
pub struct ModelRegistry {
    builders: Vec<Box<dyn ModelBuilder>>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        ModelRegistry::standard()
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry { builders: Vec::new() }
    }

    /// The seven catalog systems.
    pub fn standard() -> Self {
        let mut r = ModelRegistry::empty();
        r.register(Box::new(ContactModel));
        r.register(Box::new(Jacobi2d));
        r.register(Box::new(Jacobi3d));
        r.register(Box::new(Jacobi4d));
        r.register(Box::new(DampedOscillator));
        r.register(Box::new(LotkaVolterra));
        r.register(Box::new(RigidBody));
        r
    }

    pub fn register(&mut self, builder: Box<dyn ModelBuilder>) {
        self.builders.retain(|b| b.name() != builder.name());
        self.builders.push(builder);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ModelBuilder> {
        self.builders.iter().find(|b| b.name() == name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.iter().map(|b| b.name()).collect()
    }

    pub fn builders(&self) -> impl Iterator<Item = &dyn ModelBuilder> {
        self.builders.iter().map(|b| b.as_ref())
    }

    /// Builds `name` or `name:variant` with parameter overrides.
    pub fn build(&self, spec: &str, overrides: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        let (name, variant) = match spec.split_once(':') {
            Some((n, v)) => (n, Some(v)),
            None => (spec, None),
        };
        let builder = self
            .get(name)
            .ok_or_else(|| JhiError::Configuration(format!("unknown model '{name}' (known: {})", self.names().join(", "))))?;
        if let Some(v) = variant {
            if !builder.variants().contains(&v) {
                return Err(JhiError::Configuration(format!(
                    "model '{name}' has no variant '{v}' (known: {})",
                    builder.variants().join(", ")
                )));
            }
        }
        let mut params: BTreeMap<String, f64> =
            builder.default_params().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let variant = variant.or_else(|| builder.variants().first().copied());
        if let Some(v) = variant {
            for (k, x) in builder.variant_params(v) {
                params.insert(k.to_string(), x);
            }
        }
        for (k, v) in overrides {
            if !params.contains_key(k) {
                return Err(JhiError::Configuration(format!("model '{name}' has no parameter '{k}'")));
            }
            params.insert(k.clone(), *v);
        }
        builder.build(variant, &params)
    }
}

/// Builds a catalog model by `name` or `name:variant`.
pub fn build_model(spec: &str, overrides: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
    ModelRegistry::standard().build(spec, overrides)
}

/// Closed-form flow, available for the quadratic 2D Hamiltonian only.
///
/// Radius and scale are constant; the angle turns at rate `-4 r^2`.
pub fn exact_flow(model: &ModelDefinition, x0: &[f64], t_final: f64) -> Result<Vec<f64>> {
    if model.name != "jacobi2d" || model.variant.as_deref() != Some("quadratic") {
        return Err(JhiError::Capability(format!("no closed-form flow for {}", model.label())));
    }
    let (x, y) = (x0[0], x0[1]);
    let r2 = x * x + y * y;
    let theta = y.atan2(x) - 4.0 * r2 * t_final;
    let r = r2.sqrt();
    Ok(vec![r * theta.cos(), r * theta.sin()])
}

pub(crate) fn param(params: &BTreeMap<String, f64>, key: &str) -> f64 {
    params[key]
}
