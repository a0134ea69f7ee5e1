//! Problem-level relaxation assembly: original columns, lifted outputs,
//! side constraints, and one PPR or R-PPR block per multilinear term.
//!
//! Partitions belong to variables, not terms: every partitioned variable
//! gets a single indicator set that all terms referencing it share, so the
//! relaxation cannot pick inconsistent active partitions for a shared
//! variable.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{
    parse_grouping, position_names, uniform_breakpoints, Breakpoints, Discretization, DomainError,
    GroupingTree, MultilinearTerm,
};
use crate::milp::{MilpModel, ModelError, ObjSense, RowSense, VarRef, INF};
use crate::problem::{ConstraintSense, ObjectiveSense, ProblemSpec};
use crate::relax::{
    add_interval_indicators, build_ppr_shared, build_rppr_shared, BuildError, IndicatorSet,
    PprArtifacts, RpprArtifacts,
};

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("instance error: {0}")]
    Problem(#[from] crate::problem::ProblemError),
    #[error("unknown name `{0}` in instance")]
    UnknownName(String),
}

/// Relaxation method: direct PPR per term, or recursive bilinear grouping
/// given as a pattern over position letters `a, b, c, ...`. Without a
/// pattern the grouping is left-deep lexicographic.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Ppr,
    Rppr { grouping: Option<String> },
}

impl Method {
    pub fn rppr(pattern: &str) -> Self {
        Method::Rppr { grouping: Some(pattern.to_string()) }
    }

    pub fn id(&self) -> String {
        match self {
            Method::Ppr => "ppr".into(),
            Method::Rppr { grouping: Some(g) } => format!("rppr:{}", g),
            Method::Rppr { grouping: None } => "rppr:lex".into(),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// One term's relaxation block.
#[derive(Clone, Debug)]
pub enum TermRelaxation {
    Ppr(PprArtifacts),
    Rppr(RpprArtifacts),
}

/// A fully assembled relaxation MILP plus the artifacts needed to extract
/// active partitions and drive recovery.
#[derive(Clone, Debug)]
pub struct RelaxationBuild {
    pub model: MilpModel,
    pub method: Method,
    pub partitions: usize,
    /// Name -> column for original variables and term outputs.
    pub refs: BTreeMap<String, VarRef>,
    /// Breakpoints per partitioned original variable.
    pub breakpoints: BTreeMap<String, Breakpoints>,
    pub terms: Vec<TermRelaxation>,
}

/// Original columns, lifted outputs, side constraints, and the objective;
/// shared by the relaxation and recovery assemblies.
pub fn base_model(spec: &ProblemSpec) -> Result<(MilpModel, BTreeMap<String, VarRef>), PipelineError> {
    spec.validate()?;
    let mut model = MilpModel::new();
    let mut refs = BTreeMap::new();
    for v in &spec.variables {
        let r = model.add_variable(&v.name, v.lb, v.ub, crate::milp::VarKind::Continuous)?;
        refs.insert(v.name.clone(), r);
    }
    for t in &spec.terms {
        let r = model.add_variable(&t.output, -INF, INF, crate::milp::VarKind::Continuous)?;
        refs.insert(t.output.clone(), r);
    }
    for (i, c) in spec.linear_constraints.iter().enumerate() {
        let coeffs = c
            .coeffs
            .iter()
            .map(|(name, coef)| {
                refs.get(name)
                    .map(|&r| (r, *coef))
                    .ok_or_else(|| PipelineError::UnknownName(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sense = match c.sense {
            ConstraintSense::Le => RowSense::Le,
            ConstraintSense::Eq => RowSense::Eq,
            ConstraintSense::Ge => RowSense::Ge,
        };
        let tag = c.name.clone().unwrap_or_else(|| format!("lin{}", i));
        model.add_row(coeffs, sense, c.rhs, &tag)?;
    }
    let obj = spec
        .objective
        .coeffs
        .iter()
        .map(|(name, coef)| {
            refs.get(name)
                .map(|&r| (r, *coef))
                .ok_or_else(|| PipelineError::UnknownName(name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sense = match spec.objective.sense {
        ObjectiveSense::Min => ObjSense::Minimize,
        ObjectiveSense::Max => ObjSense::Maximize,
    };
    model.set_objective(sense, obj)?;
    Ok((model, refs))
}

/// Build the relaxation MILP for an instance with `p` uniform partitions
/// per original variable.
pub fn build_relaxation(
    spec: &ProblemSpec,
    method: &Method,
    p: usize,
) -> Result<RelaxationBuild, PipelineError> {
    let (mut model, refs) = base_model(spec)?;

    // Variables appearing in at least one term, in declaration order.
    let mut partitioned: Vec<&str> = Vec::new();
    for v in &spec.variables {
        if spec.terms.iter().any(|t| t.vars.contains(&v.name)) {
            partitioned.push(&v.name);
        }
    }
    let mut breakpoints = BTreeMap::new();
    let mut indicators: BTreeMap<String, IndicatorSet> = BTreeMap::new();
    for name in partitioned {
        let iv = spec.bounds_of(name).expect("validated");
        let bp = uniform_breakpoints(iv, p)?;
        let ind = add_interval_indicators(&mut model, refs[name], &bp)?;
        breakpoints.insert(name.to_string(), bp);
        indicators.insert(name.to_string(), ind);
    }

    let mut terms = Vec::with_capacity(spec.terms.len());
    for t in &spec.terms {
        let vars: Vec<VarRef> = t.vars.iter().map(|n| refs[n]).collect();
        let term = MultilinearTerm::new(vars.clone(), refs[&t.output])?;
        let d = Discretization::new(
            t.vars.iter().map(|n| breakpoints[n].clone()).collect(),
        );
        match method {
            Method::Ppr => {
                let inds = t.vars.iter().map(|n| indicators[n].clone()).collect();
                terms.push(TermRelaxation::Ppr(build_ppr_shared(&mut model, &term, &d, inds)?));
            }
            Method::Rppr { grouping } => {
                let tree = match grouping {
                    Some(g) => parse_grouping(g, &position_names(term.arity())?)?,
                    None => GroupingTree::left_deep(term.arity())?,
                };
                let shared: BTreeMap<VarRef, IndicatorSet> = t
                    .vars
                    .iter()
                    .map(|n| (refs[n], indicators[n].clone()))
                    .collect();
                terms.push(TermRelaxation::Rppr(build_rppr_shared(
                    &mut model, &term, &tree, &d, &shared,
                )?));
            }
        }
    }
    Ok(RelaxationBuild {
        model,
        method: method.clone(),
        partitions: p,
        refs,
        breakpoints,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_instance_eq12;
    use crate::solver::{solve_lp, SolveConfig};

    #[test]
    fn eq12_ppr_p2_dimensions() {
        let spec = build_instance_eq12();
        let rb = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
        // columns: 8 x + 3 t + 16 y + 3 * 81 lambda
        assert_eq!(rb.model.num_vars(), 8 + 3 + 16 + 243);
        // rows: 8 choose-one + 1 budget + per term (4 x-links + w + simplex + 4*3 sos2)
        assert_eq!(rb.model.num_rows(), 8 + 1 + 3 * (4 + 1 + 1 + 12));
        assert_eq!(rb.model.binaries().count(), 16);
    }

    #[test]
    fn eq12_rppr_p2_dimensions() {
        let spec = build_instance_eq12();
        let rb =
            build_relaxation(&spec, &Method::rppr("((a*b)*c)*d"), 2).unwrap();
        // per term: 3 pair nodes, lambda grids 3x3, 2x3, 2x3
        let mut lam = 0;
        for t in &rb.terms {
            if let TermRelaxation::Rppr(art) = t {
                assert_eq!(art.nodes.len(), 3);
                lam += art.nodes.iter().map(|n| n.ppr.lambda.len()).sum::<usize>();
            } else {
                panic!("expected rppr");
            }
        }
        assert_eq!(lam, 3 * (9 + 6 + 6));
        // shared y: 8 vars * 2, aux y: 2 per term * 1 partition
        assert_eq!(rb.model.binaries().count(), 16 + 6);
    }

    #[test]
    fn shared_variables_share_indicators() {
        let spec = build_instance_eq12();
        let rb = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
        let (t1, t2) = match (&rb.terms[0], &rb.terms[1]) {
            (TermRelaxation::Ppr(a), TermRelaxation::Ppr(b)) => (a, b),
            _ => unreachable!(),
        };
        // x3 is axis 2 of t1 and axis 0 of t2; same indicator columns.
        assert_eq!(t1.indicators[2].y, t2.indicators[0].y);
        assert_eq!(t1.indicators[3].y, t2.indicators[1].y);
    }

    #[test]
    fn relaxation_lp_bounds_the_optimum() {
        let spec = build_instance_eq12();
        let rb = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
        let sol = solve_lp(&rb.model, &SolveConfig::default()).unwrap();
        assert_eq!(sol.status, crate::milp::SolveStatus::Optimal);
        assert!(sol.objective >= spec.opt.unwrap(), "LP bound {} below OPT", sol.objective);
    }

    #[test]
    fn build_is_deterministic() {
        let spec = build_instance_eq12();
        let a = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
        let b = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(
            crate::lp_format::write_lp_file(&a.model),
            crate::lp_format::write_lp_file(&b.model)
        );
    }
}
