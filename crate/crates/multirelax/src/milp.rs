//! Solver-agnostic MILP intermediate representation.
//!
//! A [`MilpModel`] is a plain column/row store: variables with bounds and a
//! kind (continuous or binary), linear rows with a sense and a provenance
//! tag, and a single linear objective. Construction is order-deterministic:
//! building the same formulation twice yields equal models, and the LP
//! export in [`crate::lp_format`] is byte-identical for equal models.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Sentinel magnitude treated as infinity in variable bounds.
///
/// Bounds at or beyond this magnitude are exported as free/one-sided in the
/// LP writer and treated as unbounded by the simplex.
pub const INF: f64 = 1e30;

/// Returns true if `v` is at or beyond the infinity sentinel.
pub fn is_unbounded(v: f64) -> bool {
    v.abs() >= INF
}

/// Index of a variable (column) in a [`MilpModel`].
///
/// Ids are dense and contiguous from 0 in creation order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarRef(pub usize);

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowSense::Le => write!(f, "<="),
            RowSense::Eq => write!(f, "="),
            RowSense::Ge => write!(f, ">="),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

/// A declared variable: name, bounds, kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
}

/// One linear row `coeffs . x  (<=|=|>=)  rhs`.
///
/// Coefficients are sparse, sorted by variable id, with duplicates merged
/// and exact zeros dropped. The tag is a provenance label that becomes the
/// row name in LP export.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(VarRef, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub coeffs: Vec<(VarRef, f64)>,
}

impl Default for Objective {
    fn default() -> Self {
        Objective { sense: ObjSense::Minimize, coeffs: Vec::new() }
    }
}

#[derive(Error, Debug)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("invalid variable name `{0}`: must match [A-Za-z_][A-Za-z0-9_]*")]
    InvalidName(String),
    #[error("variable `{name}` has lb {lb} > ub {ub}")]
    BadBounds { name: String, lb: f64, ub: f64 },
    #[error("binary variable `{name}` must have bounds within [0,1], got [{lb}, {ub}]")]
    BinaryBounds { name: String, lb: f64, ub: f64 },
    #[error("row `{tag}` references undeclared variable {var}")]
    UnknownVar { tag: String, var: VarRef },
    #[error("row `{0}` has no nonzero coefficients")]
    EmptyRow(String),
    #[error("row tag must be non-empty")]
    EmptyTag,
    #[error("solution has {got} values but model has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Solution status as reported by a solver.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Optimal => write!(f, "optimal"),
            SolveStatus::Infeasible => write!(f, "infeasible"),
            SolveStatus::Unbounded => write!(f, "unbounded"),
            SolveStatus::Limit => write!(f, "limit"),
        }
    }
}

/// A point in variable space plus the objective value and solve status.
#[derive(Clone, Debug)]
pub struct SolutionVector {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
}

impl SolutionVector {
    pub fn value(&self, var: VarRef) -> f64 {
        self.values[var.0]
    }
}

/// Mutable MILP builder. Once construction is finished the model is only
/// ever borrowed immutably, so completed models are safe to share across
/// threads for concurrent solving/export.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    names: BTreeMap<String, VarRef>,
    rows: Vec<LinearRow>,
    objective: Objective,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Merge duplicate refs, drop exact zeros, sort by id.
fn normalize_coeffs(mut coeffs: Vec<(VarRef, f64)>) -> Vec<(VarRef, f64)> {
    coeffs.sort_by_key(|(v, _)| *v);
    let mut out: Vec<(VarRef, f64)> = Vec::with_capacity(coeffs.len());
    for (v, c) in coeffs {
        match out.last_mut() {
            Some((lv, lc)) if *lv == v => *lc += c,
            _ => out.push((v, c)),
        }
    }
    out.retain(|(_, c)| *c != 0.0);
    out
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a variable. The returned id equals the previous variable count.
    pub fn add_variable(
        &mut self,
        name: &str,
        lb: f64,
        ub: f64,
        kind: VarKind,
    ) -> Result<VarRef, ModelError> {
        if !valid_name(name) {
            return Err(ModelError::InvalidName(name.to_string()));
        }
        if self.names.contains_key(name) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        if lb > ub {
            return Err(ModelError::BadBounds { name: name.to_string(), lb, ub });
        }
        if kind == VarKind::Binary && (lb < 0.0 || ub > 1.0) {
            return Err(ModelError::BinaryBounds { name: name.to_string(), lb, ub });
        }
        let var = VarRef(self.vars.len());
        self.vars.push(Variable { name: name.to_string(), lb, ub, kind });
        self.names.insert(name.to_string(), var);
        Ok(var)
    }

    /// Append a row. Coefficients are normalized (merged, sorted, zero-free).
    pub fn add_row(
        &mut self,
        coeffs: Vec<(VarRef, f64)>,
        sense: RowSense,
        rhs: f64,
        tag: &str,
    ) -> Result<usize, ModelError> {
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        let coeffs = normalize_coeffs(coeffs);
        if coeffs.is_empty() {
            return Err(ModelError::EmptyRow(tag.to_string()));
        }
        for (v, _) in &coeffs {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVar { tag: tag.to_string(), var: *v });
            }
        }
        self.rows.push(LinearRow { coeffs, sense, rhs, tag: tag.to_string() });
        Ok(self.rows.len() - 1)
    }

    pub fn set_objective(
        &mut self,
        sense: ObjSense,
        coeffs: Vec<(VarRef, f64)>,
    ) -> Result<(), ModelError> {
        let coeffs = normalize_coeffs(coeffs);
        for (v, _) in &coeffs {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVar { tag: "objective".to_string(), var: *v });
            }
        }
        self.objective = Objective { sense, coeffs };
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, r: VarRef) -> &Variable {
        &self.vars[r.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn row_by_tag(&self, tag: &str) -> Option<&LinearRow> {
        self.rows.iter().find(|r| r.tag == tag)
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarRef> {
        self.names.get(name).copied()
    }

    pub fn name_of(&self, r: VarRef) -> &str {
        &self.vars[r.0].name
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarRef> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarRef(i))
    }

    /// Objective value of a point under this model's objective.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.coeffs.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Check a point against all rows and bounds.
    ///
    /// Violations are scaled: a row violation is divided by
    /// `max(1, |rhs|, max_j |a_j x_j|)` and a bound violation by
    /// `max(1, |bound|)`, so the tolerance behaves like a relative
    /// feasibility tolerance on badly scaled rows. Returns one
    /// `(tag, scaled violation)` entry per violated row or bound; the
    /// report is empty iff the point is feasible within `tol`.
    pub fn check_feasible(
        &self,
        point: &SolutionVector,
        tol: f64,
    ) -> Result<Vec<(String, f64)>, ModelError> {
        if point.values.len() != self.vars.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.vars.len(),
                got: point.values.len(),
            });
        }
        let mut report = Vec::new();
        for (i, v) in self.vars.iter().enumerate() {
            let x = point.values[i];
            if !is_unbounded(v.lb) && x < v.lb {
                let viol = (v.lb - x) / 1f64.max(v.lb.abs());
                if viol > tol {
                    report.push((format!("bound_{}", v.name), viol));
                }
            }
            if !is_unbounded(v.ub) && x > v.ub {
                let viol = (x - v.ub) / 1f64.max(v.ub.abs());
                if viol > tol {
                    report.push((format!("bound_{}", v.name), viol));
                }
            }
        }
        for row in &self.rows {
            let mut activity = 0.0;
            let mut scale = 1f64.max(row.rhs.abs());
            for (v, c) in &row.coeffs {
                let term = c * point.values[v.0];
                activity += term;
                scale = scale.max(term.abs());
            }
            let raw = match row.sense {
                RowSense::Le => activity - row.rhs,
                RowSense::Ge => row.rhs - activity,
                RowSense::Eq => (activity - row.rhs).abs(),
            };
            let viol = raw / scale;
            if viol > tol {
                report.push((row.tag.clone(), viol));
            }
        }
        Ok(report)
    }
}
