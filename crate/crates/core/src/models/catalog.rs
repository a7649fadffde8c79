use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use super::{param, Casimir, ModelBuilder, ModelDefinition};
use crate::birealization::{
    canonical_pair_birealization, first_order_birealization, lotka_volterra_birealization, scale_domain,
    transported_birealization, BiRealization, CoordinateChange,
};
use crate::error::{JhiError, Result};
use crate::jacobi::{HamiltonianField, JacobiStructure, ScalarField};
use crate::jets::Jet;

fn c(v: f64) -> Jet {
    Jet::constant(v)
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn field<F>(f: F) -> ScalarField
where
    F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
{
    Arc::new(f)
}

// Contact structure on (q, p, z): Lambda = d_p ^ d_q + p d_p ^ d_z, E = -d_z.
fn contact_structure() -> JacobiStructure {
    JacobiStructure::from_entries(
        3,
        |x: &[Jet]| vec![(1, 0, c(1.0)), (1, 2, x[1].clone())],
        |_: &[Jet]| vec![c(0.0), c(0.0), c(-1.0)],
    )
}

// F(q, p, z, t) = (Q, P, Z, T) = (q, p t, -z, t) with canonical pairs (P, Q) and (T, Z).
fn contact_realization() -> BiRealization {
    let change = CoordinateChange::new(
        Arc::new(|s: &[Jet]| vec![s[0].clone(), &s[1] * &s[3], -&s[2], s[3].clone()]),
        Arc::new(|w: &[Jet]| vec![w[0].clone(), &w[1] / &w[3], -&w[2], w[3].clone()]),
        Arc::new(|s: &[Jet]| {
            vec![
                vec![c(1.0), c(0.0), c(0.0), c(0.0)],
                vec![c(0.0), s[3].clone(), c(0.0), s[1].clone()],
                vec![c(0.0), c(0.0), c(-1.0), c(0.0)],
                vec![c(0.0), c(0.0), c(0.0), c(1.0)],
            ]
        }),
    );
    let canonical = canonical_pair_birealization(4, &[(1, 0), (3, 2)]).expect("static pairing");
    transported_birealization(&change, &canonical, scale_domain())
}

pub struct ContactModel;

impl ModelBuilder for ContactModel {
    fn name(&self) -> &'static str {
        "contact"
    }

    fn summary(&self) -> &'static str {
        "contact structure on (q, p, z), H = q + z"
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn build(&self, _variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: None,
            coordinates: names(&["q", "p", "z"]),
            structure: contact_structure(),
            hamiltonian: HamiltonianField::new(|x: &[Jet]| &x[0] + &x[2]),
            realization: contact_realization(),
            casimirs: Vec::new(),
            e_of_h: field(|_: &[Jet]| c(-1.0)),
            s_overrides: Vec::new(),
            params: params.clone(),
            default_x0: vec![0.1, -1.1, 0.09],
            default_t0: 1.0,
            domain_note: "realization needs t - xi_z/2 away from 0".into(),
            contact_form: true,
            sample_radius: 0.5,
        })
    }
}

pub struct DampedOscillator;

impl ModelBuilder for DampedOscillator {
    fn name(&self) -> &'static str {
        "damped"
    }

    fn summary(&self) -> &'static str {
        "damped oscillator on the contact structure, H = p^2/2 + q^2/2 + gamma z"
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", 0.01)]
    }

    fn build(&self, _variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        let g = param(params, "gamma");
        let s3 = field(move |s: &[Jet]| {
            let (q, p, z, t) = (&s[0], &s[1], &s[2], &s[3]);
            let q2t = q * q * t;
            let p2t = p * p * t;
            let terms = q2t.scale((1.0 - g * g) / 4.0) - (t * z).scale(g.powi(3) / 2.0)
                + p2t.scale(g * g / 2.0 + 0.25)
                + (q * p * t).scale(g);
            terms.scale(1.0 / 6.0)
        });
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: None,
            coordinates: names(&["q", "p", "z"]),
            structure: contact_structure(),
            hamiltonian: HamiltonianField::new(move |x: &[Jet]| (&x[1] * &x[1] + &x[0] * &x[0]).scale(0.5) + x[2].scale(g)),
            realization: contact_realization(),
            casimirs: Vec::new(),
            e_of_h: field(move |_: &[Jet]| c(-g)),
            s_overrides: vec![(3, s3)],
            params: params.clone(),
            default_x0: vec![1.0, 0.0, 0.0],
            default_t0: 1.0,
            domain_note: "realization needs t - xi_z/2 away from 0".into(),
            contact_form: true,
            sample_radius: 0.5,
        })
    }
}

pub struct Jacobi2d;

impl ModelBuilder for Jacobi2d {
    fn name(&self) -> &'static str {
        "jacobi2d"
    }

    fn summary(&self) -> &'static str {
        "Lambda = (x^2 + y^2) d_x ^ d_y, E = 2x d_y - 2y d_x"
    }

    fn variants(&self) -> &'static [&'static str] {
        &["quadratic", "trig"]
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn build(&self, variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        let structure = JacobiStructure::from_entries(
            2,
            |x: &[Jet]| vec![(0, 1, &x[0] * &x[0] + &x[1] * &x[1])],
            |x: &[Jet]| vec![x[1].scale(-2.0), x[0].scale(2.0)],
        );
        let variant = variant.unwrap_or("quadratic");
        let (hamiltonian, e_of_h) = match variant {
            "quadratic" => (
                HamiltonianField::new(|x: &[Jet]| &x[0] * &x[0] + &x[1] * &x[1]),
                field(|_: &[Jet]| c(0.0)),
            ),
            _ => (
                HamiltonianField::new(|x: &[Jet]| x[0].cos() * x[1].sin()),
                field(|x: &[Jet]| {
                    (&x[0] * &x[0].cos() * x[1].cos()).scale(2.0) + (&x[1] * &x[0].sin() * x[1].sin()).scale(2.0)
                }),
            ),
        };
        // F(x, y, t) = (theta, -t/2, r^2/t): (theta, -t/2) canonical, r^2/t a Casimir.
        let change = CoordinateChange::new(
            Arc::new(|s: &[Jet]| {
                let (x, y, t) = (&s[0], &s[1], &s[2]);
                vec![Jet::atan2(y, x), t.scale(-0.5), (x * x + y * y) / t]
            }),
            Arc::new(|w: &[Jet]| {
                let (th, p, cas) = (&w[0], &w[1], &w[2]);
                let t = p.scale(-2.0);
                let r = (cas * &t).sqrt();
                vec![&r * &th.cos(), &r * &th.sin(), t]
            }),
            Arc::new(|s: &[Jet]| {
                let (x, y, t) = (&s[0], &s[1], &s[2]);
                let r2 = x * x + y * y;
                let inv_t = t.recip();
                vec![
                    vec![-y / &r2, x / &r2, c(0.0)],
                    vec![c(0.0), c(0.0), c(-0.5)],
                    vec![x.scale(2.0) * &inv_t, y.scale(2.0) * &inv_t, -(&r2 * &inv_t * &inv_t)],
                ]
            }),
        );
        let canonical = canonical_pair_birealization(3, &[(0, 1)])?;
        let domain = Arc::new(|base: &[f64], image: &[f64]| {
            base[0].hypot(base[1]) > 1e-8 && image[0].hypot(image[1]) > 1e-8 && image[2].abs() > 1e-8 * base[2].abs()
        });
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: Some(variant.into()),
            coordinates: names(&["x", "y"]),
            structure,
            hamiltonian,
            realization: transported_birealization(&change, &canonical, domain),
            casimirs: vec![Casimir::new("c", |s: &[Jet]| (&s[0] * &s[0] + &s[1] * &s[1]) / &s[2])],
            e_of_h,
            s_overrides: Vec::new(),
            params: params.clone(),
            default_x0: vec![1.0, 1.0],
            default_t0: 1.0,
            domain_note: "polar chart: excludes the origin and needs r^2/t to keep its sign".into(),
            contact_form: false,
            sample_radius: 0.5,
        })
    }
}

pub struct Jacobi3d;

impl ModelBuilder for Jacobi3d {
    fn name(&self) -> &'static str {
        "jacobi3d"
    }

    fn summary(&self) -> &'static str {
        "Lambda = 2 x2 d1 ^ d2 + 2 x3 d1 ^ d3, E = d1, H = |x|^2"
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn build(&self, _variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        let structure = JacobiStructure::from_entries(
            3,
            |x: &[Jet]| vec![(0, 1, x[1].scale(2.0)), (0, 2, x[2].scale(2.0))],
            |_: &[Jet]| vec![c(1.0), c(0.0), c(0.0)],
        );
        // F(x, t) = (x1, t^2 x2, t^2 x3, t) with (t, x1) canonical.
        let change = CoordinateChange::new(
            Arc::new(|s: &[Jet]| {
                let t2 = &s[3] * &s[3];
                vec![s[0].clone(), &t2 * &s[1], &t2 * &s[2], s[3].clone()]
            }),
            Arc::new(|w: &[Jet]| {
                let t2 = &w[3] * &w[3];
                vec![w[0].clone(), &w[1] / &t2, &w[2] / &t2, w[3].clone()]
            }),
            Arc::new(|s: &[Jet]| {
                let t = &s[3];
                let t2 = t * t;
                vec![
                    vec![c(1.0), c(0.0), c(0.0), c(0.0)],
                    vec![c(0.0), t2.clone(), c(0.0), (t * &s[1]).scale(2.0)],
                    vec![c(0.0), c(0.0), t2, (t * &s[2]).scale(2.0)],
                    vec![c(0.0), c(0.0), c(0.0), c(1.0)],
                ]
            }),
        );
        let canonical = canonical_pair_birealization(4, &[(3, 0)])?;
        let s3 = field(|s: &[Jet]| {
            let (x1, x2, x3, t) = (&s[0], &s[1], &s[2], &s[3]);
            let (a, b, d) = (x1 * x1, x2 * x2, x3 * x3);
            let poly = (&d * &d).scale(3.0) - &a * &a + (&a * &b).scale(10.0) + (&a * &d).scale(10.0)
                + (&b * &b).scale(3.0)
                + (&b * &d).scale(6.0);
            (t * &poly).scale(0.25)
        });
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: None,
            coordinates: names(&["x1", "x2", "x3"]),
            structure,
            hamiltonian: HamiltonianField::new(|x: &[Jet]| &x[0] * &x[0] + &x[1] * &x[1] + &x[2] * &x[2]),
            realization: transported_birealization(&change, &canonical, scale_domain()),
            casimirs: vec![
                Casimir::new("C2", |s: &[Jet]| &s[3] * &s[3] * &s[1]),
                Casimir::new("C3", |s: &[Jet]| &s[3] * &s[3] * &s[2]),
            ],
            e_of_h: field(|x: &[Jet]| x[0].scale(2.0)),
            s_overrides: vec![(3, s3)],
            params: params.clone(),
            default_x0: vec![-1.0, 1.0, 1.0],
            default_t0: 1.0,
            domain_note: "realization needs t - xi_1/2 away from 0".into(),
            contact_form: false,
            sample_radius: 0.5,
        })
    }
}

pub struct Jacobi4d;

impl ModelBuilder for Jacobi4d {
    fn name(&self) -> &'static str {
        "jacobi4d"
    }

    fn summary(&self) -> &'static str {
        "Lambda = cos(x2) dx1 ^ dy1, E = e^y2 (y1 dx1 + x1 dy1), first-order realization"
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn build(&self, _variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        // coordinates (x1, y1, x2, y2)
        let structure = JacobiStructure::from_entries(
            4,
            |x: &[Jet]| vec![(0, 1, x[2].cos())],
            |x: &[Jet]| {
                let e = x[3].exp();
                vec![&e * &x[1], &e * &x[0], c(0.0), c(0.0)]
            },
        );
        let realization = first_order_birealization(&structure);
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: None,
            coordinates: names(&["x1", "y1", "x2", "y2"]),
            structure,
            hamiltonian: HamiltonianField::new(|x: &[Jet]| x[0].cos() + x[1].sin() + &x[2] + &x[3]),
            realization,
            casimirs: vec![Casimir::new("C", |s: &[Jet]| {
                x2_casimir(&s[0], &s[1], &s[2], &s[3], &s[4])
            })],
            e_of_h: field(|x: &[Jet]| {
                let e = x[3].exp();
                &e * &(&x[0] * &x[1].cos() - &x[1] * &x[0].sin())
            }),
            s_overrides: Vec::new(),
            params: params.clone(),
            default_x0: vec![1.0, 1.0, FRAC_PI_4, -0.2],
            default_t0: 1.0,
            domain_note: "first-order realization; Casimir needs t > 0".into(),
            contact_form: false,
            sample_radius: 0.3,
        })
    }
}

fn x2_casimir(x1: &Jet, y1: &Jet, x2: &Jet, y2: &Jet, t: &Jet) -> Jet {
    x2.cos() * t.ln() - (y2.exp() * (x1 * x1 - y1 * y1)).scale(0.5)
}

pub struct LotkaVolterra;

impl ModelBuilder for LotkaVolterra {
    fn name(&self) -> &'static str {
        "lotka_volterra"
    }

    fn summary(&self) -> &'static str {
        "Lambda = -a x y d_x ^ d_y, H = x - l1 log x + y - l2 log y"
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        vec![("lambda1", 3.0), ("lambda2", 4.0), ("a", 1.0), ("c", 0.0), ("d", 1.0), ("f", 1.0)]
    }

    fn build(&self, _variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        let (l1, l2) = (param(params, "lambda1"), param(params, "lambda2"));
        let (a, cc, d, f) = (param(params, "a"), param(params, "c"), param(params, "d"), param(params, "f"));
        if cc != 0.0 || d != f {
            return Err(JhiError::Configuration(
                "lotka_volterra realization is implemented for c = 0 and d = f only".into(),
            ));
        }
        if a == 0.0 {
            return Err(JhiError::Configuration("lotka_volterra needs a != 0".into()));
        }
        let beta = (d - f) / a;
        let gamma = (d + f) / a;
        let structure = JacobiStructure::from_entries(
            2,
            move |x: &[Jet]| vec![(0, 1, (&x[0] * &x[1]).scale(-a))],
            move |x: &[Jet]| {
                let xy = (&x[0] * &x[1]).scale(cc);
                vec![&xy + &x[0].scale(d + f), &xy + &x[1].scale(d - f)]
            },
        );
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: None,
            coordinates: names(&["x", "y"]),
            structure,
            hamiltonian: HamiltonianField::new(move |x: &[Jet]| &x[0] - &x[0].ln().scale(l1) + &x[1] - x[1].ln().scale(l2)),
            realization: lotka_volterra_birealization(a, gamma),
            casimirs: vec![Casimir::new("Z", move |s: &[Jet]| {
                s[2].ln() + (&s[0] - &s[1]).scale(cc / a) + s[0].ln().scale(beta) - s[1].ln().scale(gamma)
            })],
            e_of_h: field(move |x: &[Jet]| {
                let xy = (&x[0] * &x[1]).scale(cc);
                let e1 = &xy + &x[0].scale(d + f);
                let e2 = &xy + &x[1].scale(d - f);
                e1 * (1.0 - &x[0].recip().scale(l1)) + e2 * (1.0 - &x[1].recip().scale(l2))
            }),
            s_overrides: Vec::new(),
            params: params.clone(),
            default_x0: vec![4.0, 2.0],
            default_t0: 1.0,
            domain_note: "positive orthant; realization needs C = a gamma V e^-Z below 1".into(),
            contact_form: false,
            sample_radius: 0.5,
        })
    }
}

pub struct RigidBody;

impl ModelBuilder for RigidBody {
    fn name(&self) -> &'static str {
        "rigid_body"
    }

    fn summary(&self) -> &'static str {
        "linear so(3) bivector with quadratic E, first-order realization"
    }

    fn variants(&self) -> &'static [&'static str] {
        &["symmetric", "asymmetric"]
    }

    fn default_params(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("I1", 5.0),
            ("I2", 10.0),
            ("I3", 10.0),
            ("a1", 0.2),
            ("a2", 0.2),
            ("a3", -0.4),
            ("d1", 0.1),
            ("d2", 0.1),
            ("d3", 0.1),
        ]
    }

    fn variant_params(&self, variant: &str) -> Vec<(&'static str, f64)> {
        match variant {
            "asymmetric" => vec![("I1", 1.0), ("I2", PI), ("I3", 10.0)],
            _ => Vec::new(),
        }
    }

    fn build(&self, variant: Option<&str>, params: &BTreeMap<String, f64>) -> Result<ModelDefinition> {
        let p = |k: &str| param(params, k);
        let (i1, i2, i3) = (p("I1"), p("I2"), p("I3"));
        let (a1, a2, a3) = (p("a1"), p("a2"), p("a3"));
        let (d1, d2, d3) = (p("d1"), p("d2"), p("d3"));
        if (a1 + a2 + a3).abs() > 1e-12 {
            return Err(JhiError::Configuration("rigid_body needs a1 + a2 + a3 = 0".into()));
        }
        let e = move |x: &[Jet]| {
            let (x1, x2, x3) = (&x[0], &x[1], &x[2]);
            vec![
                (x2 * x3).scale(a1) + x2.scale(d3) + x3.scale(d1),
                (x1 * x3).scale(a2) - x1.scale(d3) + x3.scale(d2),
                (x1 * x2).scale(a3) - x1.scale(d1) - x2.scale(d2),
            ]
        };
        let structure = JacobiStructure::from_entries(
            3,
            |x: &[Jet]| vec![(0, 1, -&x[2]), (0, 2, x[1].clone()), (1, 2, -&x[0])],
            e,
        );
        let realization = first_order_birealization(&structure);
        let hamiltonian = HamiltonianField::new(move |x: &[Jet]| {
            (&x[0] * &x[0]).scale((i2 + i3) / 2.0) + (&x[1] * &x[1]).scale((i1 + i3) / 2.0) + (&x[2] * &x[2]).scale((i1 + i2) / 2.0)
        });
        Ok(ModelDefinition {
            name: self.name().into(),
            variant: variant.map(String::from),
            coordinates: names(&["x1", "x2", "x3"]),
            structure,
            hamiltonian,
            realization,
            casimirs: vec![Casimir::new("C1", |s: &[Jet]| &s[0] * &s[0] + &s[1] * &s[1] + &s[2] * &s[2])],
            e_of_h: field(move |x: &[Jet]| {
                let (x1, x2, x3) = (&x[0], &x[1], &x[2]);
                (x1 * x2 * x3).scale(a1 * (i2 + i3) + a2 * (i1 + i3) + a3 * (i1 + i2))
                    + (x1 * x2).scale(d3 * (i2 - i1))
                    + (x1 * x3).scale(d1 * (i3 - i1))
                    + (x2 * x3).scale(d2 * (i3 - i2))
            }),
            s_overrides: Vec::new(),
            params: params.clone(),
            default_x0: vec![1.0, 1.0, 1.0],
            default_t0: 1.0,
            domain_note: "first-order realization; a1 + a2 + a3 = 0".into(),
            contact_form: false,
            sample_radius: 0.5,
        })
    }
}
