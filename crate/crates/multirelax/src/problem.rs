//! Problem instances: JSON schema, validation, the bundled reference
//! instance, bound randomization, and corner-enumeration optima for
//! box-constrained instances.
//!
//! An instance is a JSON document:
//!
//! ```json
//! {
//!   "name": "example",
//!   "variables": [{"name": "x1", "lb": 0.0, "ub": 1.0}],
//!   "terms": [{"vars": ["x1", "x2"], "output": "t1"}],
//!   "linear_constraints": [
//!     {"name": "budget", "coeffs": {"x1": 1.0}, "sense": "<=", "rhs": 0.5}
//!   ],
//!   "objective": {"sense": "max", "coeffs": {"t1": 1.0}},
//!   "opt": 0.5
//! }
//! ```
//!
//! Variables keep file order; coefficient maps are keyed by name. `opt` is
//! the known global optimum when available.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Interval;

#[derive(Error, Debug)]
pub enum ProblemError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Schema(String),
}

fn schema(field: impl std::fmt::Display, msg: impl std::fmt::Display) -> ProblemError {
    ProblemError::Schema(format!("{}: {}", field, msg))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermSpec {
    pub vars: Vec<String>,
    pub output: String,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum ConstraintSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConstraintSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub coeffs: BTreeMap<String, f64>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum ObjectiveSense {
    #[serde(rename = "min")]
    Min,
    #[serde(rename = "max")]
    Max,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObjectiveSpec {
    pub sense: ObjectiveSense,
    pub coeffs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemSpec {
    #[serde(default)]
    pub name: String,
    pub variables: Vec<VariableSpec>,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub linear_constraints: Vec<ConstraintSpec>,
    pub objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt: Option<f64>,
}

impl ProblemSpec {
    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn bounds_of(&self, name: &str) -> Option<Interval> {
        self.variable(name).map(|v| Interval { lo: v.lb, hi: v.ub })
    }

    /// Names usable in constraints and the objective: variables plus term
    /// outputs.
    fn known_names(&self) -> BTreeMap<&str, ()> {
        let mut names = BTreeMap::new();
        for v in &self.variables {
            names.insert(v.name.as_str(), ());
        }
        for t in &self.terms {
            names.insert(t.output.as_str(), ());
        }
        names
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let name_ok = |n: &str| {
            !n.is_empty()
                && n.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        };
        let mut seen = BTreeMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            let field = format!("variables[{}]", i);
            if !name_ok(&v.name) {
                return Err(schema(&field, format!("invalid name `{}`", v.name)));
            }
            if seen.insert(v.name.clone(), ()).is_some() {
                return Err(schema(&field, format!("duplicate name `{}`", v.name)));
            }
            if !v.lb.is_finite() || !v.ub.is_finite() || v.lb >= v.ub {
                return Err(schema(&field, format!("bounds [{}, {}] must be finite with lb < ub", v.lb, v.ub)));
            }
        }
        for (i, t) in self.terms.iter().enumerate() {
            let field = format!("terms[{}]", i);
            if !name_ok(&t.output) {
                return Err(schema(&field, format!("invalid output name `{}`", t.output)));
            }
            if seen.insert(t.output.clone(), ()).is_some() {
                return Err(schema(&field, format!("duplicate name `{}`", t.output)));
            }
            if t.vars.len() < 2 {
                return Err(schema(&field, "a term needs at least 2 variables"));
            }
            let mut term_seen = BTreeMap::new();
            for name in &t.vars {
                if self.variable(name).is_none() {
                    return Err(schema(format!("{}.vars", field), format!("unknown variable `{}`", name)));
                }
                if term_seen.insert(name, ()).is_some() {
                    return Err(schema(format!("{}.vars", field), format!("repeated variable `{}`", name)));
                }
            }
        }
        let known = self.known_names();
        for (i, c) in self.linear_constraints.iter().enumerate() {
            let field = format!("linear_constraints[{}]", i);
            if c.coeffs.is_empty() {
                return Err(schema(&field, "empty coefficient map"));
            }
            for name in c.coeffs.keys() {
                if !known.contains_key(name.as_str()) {
                    return Err(schema(format!("{}.coeffs", field), format!("unknown name `{}`", name)));
                }
            }
            if !c.rhs.is_finite() {
                return Err(schema(&field, "rhs must be finite"));
            }
        }
        if self.objective.coeffs.is_empty() {
            return Err(schema("objective.coeffs", "empty coefficient map"));
        }
        for name in self.objective.coeffs.keys() {
            if !known.contains_key(name.as_str()) {
                return Err(schema("objective.coeffs", format!("unknown name `{}`", name)));
            }
        }
        if let Some(opt) = self.opt {
            if !opt.is_finite() {
                return Err(schema("opt", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Load and validate an instance file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ProblemError::Io { path: path.display().to_string(), source })?;
    let spec: ProblemSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}

/// The 8-variable, 3-term reference instance with its budget row and known
/// optimum 3.2642e10.
pub fn build_instance_eq12() -> ProblemSpec {
    let var = |name: &str, lb: f64, ub: f64| VariableSpec { name: name.into(), lb, ub };
    let term = |vars: [&str; 4], output: &str| TermSpec {
        vars: vars.iter().map(|s| s.to_string()).collect(),
        output: output.into(),
    };
    let spec = ProblemSpec {
        name: "eq12".into(),
        variables: vec![
            var("x1", 100.0, 500.0),
            var("x2", 1000.0, 2000.0),
            var("x3", 1000.0, 2000.0),
            var("x4", 10.0, 100.0),
            var("x5", 10.0, 100.0),
            var("x6", 10.0, 100.0),
            var("x7", 10.0, 100.0),
            var("x8", 10.0, 100.0),
        ],
        terms: vec![
            term(["x1", "x2", "x3", "x4"], "t1"),
            term(["x3", "x4", "x5", "x6"], "t2"),
            term(["x5", "x6", "x7", "x8"], "t3"),
        ],
        linear_constraints: vec![ConstraintSpec {
            name: Some("budget".into()),
            coeffs: [
                ("x1", 100.0),
                ("x2", -1.0),
                ("x3", -1.0),
                ("x4", 833.0),
                ("x5", 95.0),
                ("x6", 1.0),
                ("x7", -1.0),
                ("x8", 100.0),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            sense: ConstraintSense::Le,
            rhs: 50000.0,
        }],
        objective: ObjectiveSpec {
            sense: ObjectiveSense::Max,
            coeffs: [("t1", 1.0), ("t2", 1.0), ("t3", 1.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        },
        opt: Some(3.2642e10),
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// Redraw variable bounds: lower uniform in [0.1, 0.2], upper uniform in
/// [0.9, 1.0], deterministic under the seed. Requires every variable to
/// start at [0, 1].
pub fn randomize_bounds(spec: &ProblemSpec, seed: u64) -> Result<ProblemSpec, ProblemError> {
    for (i, v) in spec.variables.iter().enumerate() {
        if v.lb != 0.0 || v.ub != 1.0 {
            return Err(schema(
                format!("variables[{}]", i),
                format!("bound randomization expects [0, 1] bounds, got [{}, {}]", v.lb, v.ub),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = spec.clone();
    for v in &mut out.variables {
        v.lb = rng.random_range(0.1..=0.2);
        v.ub = rng.random_range(0.9..=1.0);
    }
    Ok(out)
}

/// Exact optimum by corner enumeration, available for instances without
/// linear constraints (a multilinear objective over a box attains its
/// optimum at a box corner). Returns `None` when constraints are present
/// or the instance is too large to enumerate.
pub fn corner_opt(spec: &ProblemSpec) -> Option<f64> {
    if !spec.linear_constraints.is_empty() || spec.variables.len() > 20 {
        return None;
    }
    let n = spec.variables.len();
    let index: BTreeMap<&str, usize> =
        spec.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << n) {
        let point: Vec<f64> = spec
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| if mask >> i & 1 == 1 { v.ub } else { v.lb })
            .collect();
        let mut value = 0.0;
        for (name, c) in &spec.objective.coeffs {
            if let Some(&i) = index.get(name.as_str()) {
                value += c * point[i];
            } else {
                let term = spec.terms.iter().find(|t| t.output == *name)?;
                let prod: f64 = term.vars.iter().map(|v| point[index[v.as_str()]]).product();
                value += c * prod;
            }
        }
        best = Some(match best {
            None => value,
            Some(b) => match spec.objective.sense {
                ObjectiveSense::Max => b.max(value),
                ObjectiveSense::Min => b.min(value),
            },
        });
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_bilinear() -> ProblemSpec {
        serde_json::from_str(
            r#"{
                "name": "toy",
                "variables": [
                    {"name": "x1", "lb": 0.0, "ub": 1.0},
                    {"name": "x2", "lb": 0.0, "ub": 1.0}
                ],
                "terms": [{"vars": ["x1", "x2"], "output": "w"}],
                "objective": {"sense": "max", "coeffs": {"w": 1.0}},
                "opt": 1.0
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_instance_parses() {
        let spec = minimal_bilinear();
        spec.validate().unwrap();
        assert_eq!(spec.variables.len(), 2);
        assert_eq!(spec.terms.len(), 1);
        assert!(spec.linear_constraints.is_empty());
    }

    #[test]
    fn undeclared_term_variable_is_rejected() {
        let mut spec = minimal_bilinear();
        spec.terms[0].vars[1] = "zz".into();
        let err = spec.validate().unwrap_err();
        assert!(err.to_string().contains("terms[0].vars"), "{}", err);
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn eq12_instance_shape() {
        let spec = build_instance_eq12();
        assert_eq!(spec.variables.len(), 8);
        assert_eq!(spec.terms.len(), 3);
        assert_eq!(spec.linear_constraints.len(), 1);
        assert_eq!(spec.opt, Some(3.2642e10));
        assert_eq!(spec.bounds_of("x1").unwrap(), Interval { lo: 100.0, hi: 500.0 });
        for name in ["x4", "x5", "x6", "x7", "x8"] {
            assert_eq!(spec.bounds_of(name).unwrap(), Interval { lo: 10.0, hi: 100.0 });
        }
        assert_eq!(spec.linear_constraints[0].rhs, 50000.0);
        assert_eq!(spec.linear_constraints[0].coeffs["x4"], 833.0);
    }

    #[test]
    fn randomize_bounds_is_seed_deterministic() {
        let mut spec = minimal_bilinear();
        spec.variables.push(VariableSpec { name: "x3".into(), lb: 0.0, ub: 1.0 });
        let a = randomize_bounds(&spec, 42).unwrap();
        let b = randomize_bounds(&spec, 42).unwrap();
        assert_eq!(a, b);
        let c = randomize_bounds(&spec, 43).unwrap();
        assert_ne!(a, c);
        for v in &a.variables {
            assert!((0.1..=0.2).contains(&v.lb), "lb {}", v.lb);
            assert!((0.9..=1.0).contains(&v.ub), "ub {}", v.ub);
        }
    }

    #[test]
    fn randomize_bounds_rejects_non_unit_box() {
        let spec = build_instance_eq12();
        assert!(randomize_bounds(&spec, 1).is_err());
    }

    #[test]
    fn randomized_lower_bounds_average_near_midpoint() {
        let mut spec = minimal_bilinear();
        spec.variables = (0..100)
            .map(|i| VariableSpec { name: format!("v{}", i), lb: 0.0, ub: 1.0 })
            .collect();
        spec.terms[0].vars = vec!["v0".into(), "v1".into()];
        let r = randomize_bounds(&spec, 7).unwrap();
        let mean: f64 = r.variables.iter().map(|v| v.lb).sum::<f64>() / 100.0;
        assert!((mean - 0.15).abs() < 0.02, "mean lb {}", mean);
    }

    #[test]
    fn corner_opt_enumerates_box_instances() {
        let spec = minimal_bilinear();
        assert_eq!(corner_opt(&spec), Some(1.0));
        // Not available once constraints exist.
        let eq12 = build_instance_eq12();
        assert_eq!(corner_opt(&eq12), None);
    }
}
