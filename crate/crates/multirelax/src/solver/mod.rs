//! Desk-scale MILP solving: LP via the internal simplex, branch-and-bound
//! over binaries, and an external-solver adapter exchanging LP and solution
//! files.
//!
//! Determinism is part of the contract: branching is most-fractional with
//! ties to the lowest variable id, node selection is best-bound with ties
//! to the most recently created node, so repeated solves of the same model
//! visit the same tree.

mod simplex;

use std::collections::BinaryHeap;
use std::time::Instant;

use thiserror::Error;

use crate::milp::{MilpModel, ModelError, SolutionVector, SolveStatus, VarKind};
use simplex::{LpCore, SxError, SxStatus};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum BranchRule {
    /// Most fractional binary, ties broken by lowest variable id.
    #[default]
    MostFractional,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum NodeSelection {
    /// Best bound first, ties broken by most recently created node.
    #[default]
    BestBound,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub feas_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub opt_tol: f64,
    pub int_tol: f64,
    pub pivot_tol: f64,
    pub node_limit: usize,
    pub time_limit_s: f64,
    pub branching: BranchRule,
    pub node_selection: NodeSelection,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            feas_tol: 1e-6,
            opt_tol: 1e-6,
            int_tol: 1e-6,
            pivot_tol: 1e-9,
            node_limit: 5_000_000,
            time_limit_s: 3600.0,
            branching: BranchRule::MostFractional,
            node_selection: NodeSelection::BestBound,
        }
    }
}

#[derive(Error, Debug)]
pub enum SolveError {
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("external solver adapter: {0}")]
    Adapter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SxError> for SolveError {
    fn from(e: SxError) -> Self {
        match e {
            SxError::Numerical(msg) => SolveError::Numerical(msg),
        }
    }
}

/// Branch-and-bound statistics. `best_bound` and `bound_history` are in the
/// model's objective sense; the history records each improvement of the
/// global bound.
#[derive(Clone, Debug)]
pub struct BnbStats {
    pub nodes: usize,
    pub incumbent: Option<f64>,
    pub best_bound: f64,
    pub gap: f64,
    pub wall_s: f64,
    pub bound_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MilpResult {
    pub status: SolveStatus,
    pub incumbent: Option<SolutionVector>,
    pub stats: BnbStats,
}

impl MilpResult {
    /// The incumbent solution, for callers that require one.
    pub fn solution(&self) -> Result<&SolutionVector, SolveError> {
        self.incumbent
            .as_ref()
            .ok_or_else(|| SolveError::Adapter(format!("no incumbent, status {}", self.status)))
    }
}

/// Dual information from an optimal LP solve.
#[derive(Clone, Debug)]
pub struct LpDuals {
    pub duals: Vec<f64>,
    /// Dual objective computed from the final basis, model sense.
    pub dual_objective: f64,
}

/// Solve the LP relaxation (binaries relaxed to `[lb, ub]`).
pub fn solve_lp(model: &MilpModel, cfg: &SolveConfig) -> Result<SolutionVector, SolveError> {
    Ok(solve_lp_with_duals(model, cfg)?.0)
}

/// Solve the LP relaxation and report duals for verification.
pub fn solve_lp_with_duals(
    model: &MilpModel,
    cfg: &SolveConfig,
) -> Result<(SolutionVector, LpDuals), SolveError> {
    let core = LpCore::new(model);
    let out = core.solve(&core.base_lb, &core.base_ub, cfg)?;
    let status = match out.status {
        SxStatus::Optimal => SolveStatus::Optimal,
        SxStatus::Infeasible => SolveStatus::Infeasible,
        SxStatus::Unbounded => SolveStatus::Unbounded,
    };
    let objective =
        if status == SolveStatus::Optimal { model.objective_value(&out.x) } else { f64::NAN };
    Ok((
        SolutionVector { values: out.x, objective, status },
        LpDuals { duals: out.duals, dual_objective: out.dual_objective },
    ))
}

struct Node {
    parent: usize,
    /// Structural variable fixed by this node, with the value it takes.
    fix: Option<(usize, f64)>,
    /// Branching variable chosen from this node's LP solution.
    frac: Option<usize>,
}

#[derive(PartialEq)]
struct OpenNode {
    key: f64,
    id: usize,
}

impl Eq for OpenNode {}

impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap pops the maximum; "greater" = smaller key, ties to the
        // larger (most recent) id.
        other
            .key
            .partial_cmp(&self.key)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Branch-and-bound over the model's binary variables.
pub fn solve_milp(model: &MilpModel, cfg: &SolveConfig) -> Result<MilpResult, SolveError> {
    let start = Instant::now();
    let core = LpCore::new(model);
    let sign = core.sign;
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();

    let finish = |status: SolveStatus,
                  incumbent: Option<SolutionVector>,
                  bound_int: f64,
                  nodes: usize,
                  history: Vec<f64>| {
        let inc_obj = incumbent.as_ref().map(|s| s.objective);
        let gap = match inc_obj {
            Some(inc) => (inc - sign * bound_int).abs() / 1f64.max(inc.abs()),
            None => f64::INFINITY,
        };
        MilpResult {
            status,
            incumbent,
            stats: BnbStats {
                nodes,
                incumbent: inc_obj,
                best_bound: sign * bound_int,
                gap,
                wall_s: start.elapsed().as_secs_f64(),
                bound_history: history,
            },
        }
    };

    let fractional = |x: &[f64]| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &b in &binaries {
            let v = x[b];
            let dist = (v - v.round()).abs();
            if dist > cfg.int_tol {
                let frac = v - v.floor();
                let score = frac.min(1.0 - frac);
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, b));
                }
            }
        }
        best.map(|(_, b)| b)
    };

    // Root.
    let root_out = core.solve(&core.base_lb, &core.base_ub, cfg)?;
    match root_out.status {
        SxStatus::Infeasible => {
            return Ok(finish(SolveStatus::Infeasible, None, f64::INFINITY, 1, vec![]))
        }
        SxStatus::Unbounded => {
            return Ok(finish(SolveStatus::Unbounded, None, f64::NEG_INFINITY, 1, vec![]))
        }
        SxStatus::Optimal => {}
    }
    let root_obj = model.objective_value(&root_out.x);
    let root_key = sign * root_obj;
    let mut history = vec![root_obj];
    let mut nodes_solved = 1usize;

    let mut arena: Vec<Node> = Vec::new();
    let mut open: BinaryHeap<OpenNode> = BinaryHeap::new();
    let mut incumbent: Option<SolutionVector> = None;
    let mut inc_key = f64::INFINITY;

    match fractional(&root_out.x) {
        None => {
            let sol = SolutionVector {
                values: root_out.x,
                objective: root_obj,
                status: SolveStatus::Optimal,
            };
            return Ok(finish(SolveStatus::Optimal, Some(sol), root_key, 1, history));
        }
        Some(b) => {
            arena.push(Node { parent: usize::MAX, fix: None, frac: Some(b) });
            open.push(OpenNode { key: root_key, id: 0 });
        }
    }

    // Deterministic root dive for a first incumbent: repeatedly fix the
    // largest fractional binary to one (a decisive choice in the
    // choose-one rows these formulations are built from) and re-solve.
    // Pure incumbent heuristic; bounds and the tree are untouched.
    {
        let mut lb = core.base_lb.clone();
        let mut ub = core.base_ub.clone();
        let mut x = root_out.x.clone();
        for _ in 0..binaries.len() {
            if fractional(&x).is_none() {
                let obj = model.objective_value(&x);
                inc_key = sign * obj;
                incumbent = Some(SolutionVector {
                    values: x,
                    objective: obj,
                    status: SolveStatus::Optimal,
                });
                break;
            }
            let target = binaries
                .iter()
                .copied()
                .filter(|&b| {
                    let v = x[b];
                    (v - v.round()).abs() > cfg.int_tol
                })
                .max_by(|&a, &b| {
                    x[a].partial_cmp(&x[b]).unwrap().then(b.cmp(&a))
                })
                .expect("fractional() found one");
            lb[target] = 1.0;
            ub[target] = 1.0;
            let out = core.solve(&lb, &ub, cfg)?;
            nodes_solved += 1;
            if out.status != SxStatus::Optimal {
                break;
            }
            x = out.x;
        }
    }

    let node_bounds = |arena: &[Node], id: usize| -> (Vec<f64>, Vec<f64>) {
        let mut lb = core.base_lb.clone();
        let mut ub = core.base_ub.clone();
        let mut cur = id;
        while cur != usize::MAX {
            if let Some((var, val)) = arena[cur].fix {
                lb[var] = val;
                ub[var] = val;
            }
            cur = arena[cur].parent;
        }
        (lb, ub)
    };

    let mut last_bound = root_key;
    loop {
        let top = match open.pop() {
            Some(t) => t,
            None => {
                // Tree exhausted: incumbent (if any) is optimal.
                let status =
                    if incumbent.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible };
                let bound = if incumbent.is_some() { inc_key } else { f64::INFINITY };
                return Ok(finish(status, incumbent, bound, nodes_solved, history));
            }
        };
        // Global bound: best open node, capped by the incumbent (the node
        // may predate an incumbent update).
        let bound_now = top.key.min(inc_key);
        if bound_now > last_bound + 1e-15 {
            last_bound = bound_now;
            history.push(sign * bound_now);
        }
        let prune_slack = cfg.opt_tol * 1f64.max(inc_key.abs());
        if top.key >= inc_key - prune_slack {
            // Bound already within tolerance of the incumbent.
            return Ok(finish(SolveStatus::Optimal, incumbent, bound_now, nodes_solved, history));
        }
        if nodes_solved >= cfg.node_limit || start.elapsed().as_secs_f64() > cfg.time_limit_s {
            if let Some(s) = incumbent.as_mut() {
                s.status = SolveStatus::Limit;
            }
            return Ok(finish(SolveStatus::Limit, incumbent, bound_now, nodes_solved, history));
        }

        let branch_var = arena[top.id].frac.expect("open nodes are fractional");
        let (parent_lb, parent_ub) = node_bounds(&arena, top.id);
        for val in [0.0, 1.0] {
            let mut lb = parent_lb.clone();
            let mut ub = parent_ub.clone();
            lb[branch_var] = val;
            ub[branch_var] = val;
            let out = core.solve(&lb, &ub, cfg)?;
            nodes_solved += 1;
            match out.status {
                SxStatus::Infeasible => continue,
                SxStatus::Unbounded => {
                    return Ok(finish(
                        SolveStatus::Unbounded,
                        None,
                        f64::NEG_INFINITY,
                        nodes_solved,
                        history,
                    ))
                }
                SxStatus::Optimal => {}
            }
            let obj = model.objective_value(&out.x);
            let key = top.key.max(sign * obj); // child bound never beats parent
            let prune_slack = cfg.opt_tol * 1f64.max(inc_key.abs());
            if key >= inc_key - prune_slack {
                continue;
            }
            match fractional(&out.x) {
                None => {
                    if key < inc_key {
                        inc_key = key;
                        incumbent = Some(SolutionVector {
                            values: out.x,
                            objective: obj,
                            status: SolveStatus::Optimal,
                        });
                    }
                }
                Some(b) => {
                    let id = arena.len();
                    arena.push(Node {
                        parent: top.id,
                        fix: Some((branch_var, val)),
                        frac: Some(b),
                    });
                    open.push(OpenNode { key, id });
                }
            }
        }
    }
}

/// Solve via an external command. The template must contain `{lp_in}` and
/// `{sol_out}` placeholders; the command must write a solution file with
/// one `name value` pair per line (an optional `=obj= value` line is
/// verified against the model's objective). The returned point is validated
/// with `check_feasible` before being accepted.
pub fn solve_external(
    model: &MilpModel,
    template: &str,
    cfg: &SolveConfig,
) -> Result<SolutionVector, SolveError> {
    if !template.contains("{lp_in}") || !template.contains("{sol_out}") {
        return Err(SolveError::Adapter(
            "command template must contain {lp_in} and {sol_out}".into(),
        ));
    }
    let dir = tempfile::tempdir()?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("model.sol");
    std::fs::write(&lp_path, crate::lp_format::write_lp_file(model))?;
    let cmd = template
        .replace("{lp_in}", &lp_path.display().to_string())
        .replace("{sol_out}", &sol_path.display().to_string());
    let output = std::process::Command::new("sh").arg("-c").arg(&cmd).output()?;
    if !output.status.success() {
        return Err(SolveError::Adapter(format!(
            "command `{}` exited with {}: {}",
            cmd,
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let text = std::fs::read_to_string(&sol_path)
        .map_err(|e| SolveError::Adapter(format!("cannot read solution file: {}", e)))?;

    let mut values = vec![f64::NAN; model.num_vars()];
    let mut file_obj: Option<f64> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (name, val) = match (it.next(), it.next(), it.next()) {
            (Some(n), Some(v), None) => (n, v),
            _ => {
                return Err(SolveError::Adapter(format!(
                    "solution line {}: expected `name value`",
                    lineno + 1
                )))
            }
        };
        let val: f64 = val.parse().map_err(|_| {
            SolveError::Adapter(format!("solution line {}: bad number `{}`", lineno + 1, val))
        })?;
        if name == "=obj=" {
            file_obj = Some(val);
        } else {
            match model.var_by_name(name) {
                Some(v) => values[v.0] = val,
                None => {
                    return Err(SolveError::Adapter(format!("unknown variable `{}`", name)))
                }
            }
        }
    }
    if let Some(missing) = values.iter().position(|v| v.is_nan()) {
        return Err(SolveError::Adapter(format!(
            "solution file is missing variable `{}`",
            model.name_of(crate::milp::VarRef(missing))
        )));
    }
    let objective = model.objective_value(&values);
    if let Some(fo) = file_obj {
        if (fo - objective).abs() > 1e-6 * 1f64.max(objective.abs()) {
            return Err(SolveError::Adapter(format!(
                "objective mismatch: file says {}, recomputed {}",
                fo, objective
            )));
        }
    }
    for (i, v) in model.vars().iter().enumerate() {
        if v.kind == VarKind::Binary {
            let val = values[i];
            if (val - val.round()).abs() > cfg.int_tol {
                return Err(SolveError::Adapter(format!(
                    "binary `{}` has fractional value {}",
                    v.name, val
                )));
            }
        }
    }
    let point = SolutionVector { values, objective, status: SolveStatus::Optimal };
    let report = model.check_feasible(&point, cfg.feas_tol)?;
    if !report.is_empty() {
        let (tag, viol) = &report[0];
        return Err(SolveError::Adapter(format!(
            "returned point is infeasible ({} violations; worst `{}` by {:.3e})",
            report.len(),
            tag,
            viol
        )));
    }
    Ok(point)
}
