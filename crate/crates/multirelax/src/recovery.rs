//! Feasible-solution recovery: MILPs that restrict a point to the edges
//! (one-dimensional faces) of hull polytopes so the lifted output equals
//! the true product, plus the optimality-gap formulas.
//!
//! Three variants are assembled from the same per-unit builder:
//!
//! - `Fa`: edges of each term's *active-partition* box (needs a solved
//!   relaxation); falls back to `Ff1` when side constraints make the
//!   active box infeasible.
//! - `Ff1`: edges of the full partition grid (no relaxation needed);
//!   auxiliary variables of recursive groupings stay unpartitioned.
//! - `Ff2`: recursive groupings only; auxiliary variables are partitioned
//!   too, which is why it dominates the other variants at a fixed
//!   partition count.
//!
//! On an edge exactly one coordinate varies, so a convex combination of
//! the edge's two vertices reproduces the bilinear/multilinear product
//! exactly; chaining the per-node recoveries of a grouping therefore
//! yields points feasible for the original multilinear equations. Every
//! result is checked against `|w - prod(x)| <= 1e-6 * max(1, |w|)` per
//! term before it is returned.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{
    uniform_breakpoints, Breakpoints, Discretization, DomainError, Interval, IntervalBox,
    MultilinearTerm, VertexGrid,
};
use crate::milp::{MilpModel, ModelError, RowSense, SolutionVector, SolveStatus, VarKind, VarRef};
use crate::pipeline::{base_model, PipelineError, RelaxationBuild, TermRelaxation};
use crate::problem::ProblemSpec;
use crate::relax::{extract_active_partition, BuildError};
use crate::solver::{solve_milp, MilpResult, SolveConfig, SolveError};

/// Relative tolerance of the per-term product feasibility check.
pub const PRODUCT_TOL: f64 = 1e-6;

#[derive(Error, Debug)]
pub enum RecoveryError {
    #[error("edge set is empty")]
    EmptyEdgeSet,
    #[error("edge set has {got} dimensions but term has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate box cannot produce edges")]
    DegenerateBox,
    #[error("recovery MILP is infeasible")]
    Infeasible,
    #[error("recovery solve hit a limit with no incumbent")]
    NoIncumbent,
    #[error("recovery of `{term}` violates the product: w = {w}, prod = {prod}")]
    ProductViolation { term: String, w: f64, prod: f64 },
    #[error("term `{term}`: {found} active edges in unit {unit}")]
    EdgeIntegrality { term: String, unit: usize, found: usize },
    #[error("recovery variant requires a recursive (grouped) relaxation")]
    NotRecursive,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Vertices and one-dimensional faces of a grid polytope, with a
/// vertex-to-edge incidence map.
#[derive(Clone, Debug)]
pub struct EdgeSet {
    pub grid: VertexGrid,
    pub vertices: Vec<Vec<f64>>,
    /// Edges as vertex index pairs, ordered axis-major.
    pub edges: Vec<(usize, usize)>,
    pub incidence: Vec<Vec<usize>>,
}

/// Edges of the full grid of a discretization: pairs of grid points
/// adjacent in exactly one coordinate.
pub fn grid_edges(d: &Discretization) -> EdgeSet {
    let grid = d.grid();
    let vertices = crate::domain::enumerate_vertices(d);
    let mut edges = Vec::new();
    for axis in 0..d.dims() {
        let n = d.axis(axis).len();
        let stride = grid.stride(axis);
        for s in 0..grid.len() {
            if grid.coord(s, axis) + 1 < n {
                edges.push((s, s + stride));
            }
        }
    }
    let mut incidence = vec![Vec::new(); grid.len()];
    for (e, &(a, b)) in edges.iter().enumerate() {
        incidence[a].push(e);
        incidence[b].push(e);
    }
    EdgeSet { grid, vertices, edges, incidence }
}

/// Edges of a single box (the `2^dims` corners).
pub fn box_edges(bounds: &IntervalBox) -> Result<EdgeSet, RecoveryError> {
    let axes = bounds
        .0
        .iter()
        .map(|iv| Breakpoints::new(vec![iv.lo, iv.hi]).map_err(|_| RecoveryError::DegenerateBox))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(grid_edges(&Discretization::new(axes)))
}

/// Multiplier/edge columns of one recovery block.
#[derive(Clone, Debug)]
pub struct RecoveryArtifacts {
    pub term: MultilinearTerm,
    pub lambda: Vec<VarRef>,
    pub z: Vec<VarRef>,
    pub edges: Vec<(usize, usize)>,
}

/// Edge-restricted convex-combination block: `x`/`w` links over the edge
/// set's vertices, a one-edge selector, and vertex gating.
pub fn build_recovery(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    edge_set: &EdgeSet,
) -> Result<RecoveryArtifacts, RecoveryError> {
    if edge_set.edges.is_empty() {
        return Err(RecoveryError::EmptyEdgeSet);
    }
    if edge_set.grid.dims() != term.arity() {
        return Err(RecoveryError::DimensionMismatch {
            expected: term.arity(),
            got: edge_set.grid.dims(),
        });
    }
    let out = model.name_of(term.output()).to_string();
    let mut lambda = Vec::with_capacity(edge_set.vertices.len());
    for v in 0..edge_set.vertices.len() {
        lambda.push(model.add_variable(
            &format!("lam_{}_{}", out, v),
            0.0,
            1.0,
            VarKind::Continuous,
        )?);
    }
    let mut z = Vec::with_capacity(edge_set.edges.len());
    for e in 0..edge_set.edges.len() {
        z.push(model.add_variable(&format!("z_{}_{}", out, e), 0.0, 1.0, VarKind::Binary)?);
    }
    for (i, &x) in term.vars().iter().enumerate() {
        let mut coeffs = vec![(x, 1.0)];
        for (v, vert) in edge_set.vertices.iter().enumerate() {
            coeffs.push((lambda[v], -vert[i]));
        }
        let xname = model.name_of(x).to_string();
        model.add_row(coeffs, RowSense::Eq, 0.0, &format!("eq11a_x_{}_{}", xname, out))?;
    }
    let mut coeffs = vec![(term.output(), 1.0)];
    for (v, vert) in edge_set.vertices.iter().enumerate() {
        coeffs.push((lambda[v], -crate::domain::phi(vert)));
    }
    model.add_row(coeffs, RowSense::Eq, 0.0, &format!("eq11a_w_{}", out))?;
    model.add_row(
        lambda.iter().map(|&l| (l, 1.0)).collect(),
        RowSense::Eq,
        1.0,
        &format!("eq11a_simplex_{}", out),
    )?;
    model.add_row(
        z.iter().map(|&e| (e, 1.0)).collect(),
        RowSense::Eq,
        1.0,
        &format!("eq11b_edges_{}", out),
    )?;
    for (v, inc) in edge_set.incidence.iter().enumerate() {
        let mut coeffs = vec![(lambda[v], 1.0)];
        for &e in inc {
            coeffs.push((z[e], -1.0));
        }
        model.add_row(coeffs, RowSense::Le, 0.0, &format!("eq11b_v{}_{}", v, out))?;
    }
    Ok(RecoveryArtifacts {
        term: term.clone(),
        lambda,
        z,
        edges: edge_set.edges.clone(),
    })
}

/// `(UB - OPT) / UB * 100` (maximization convention).
pub fn ub_gap(ub: f64, opt: f64) -> f64 {
    (ub - opt) / ub * 100.0
}

/// `(OPT - LB) / LB * 100` (maximization convention).
pub fn lb_gap(opt: f64, lb: f64) -> f64 {
    (opt - lb) / lb * 100.0
}

/// `(UB - OPT) / OPT * 100`: the convention the reference result tables
/// actually follow (their printed cells reproduce under this denominator,
/// not the one stated alongside them).
pub fn ub_gap_table(ub: f64, opt: f64) -> f64 {
    (ub - opt) / opt * 100.0
}

/// `(OPT - LB) / OPT * 100`, table convention.
pub fn lb_gap_table(opt: f64, lb: f64) -> f64 {
    (opt - lb) / opt * 100.0
}

/// One bilinear or direct recovery block, described by names so the block
/// can be replayed into a fresh model.
#[derive(Clone, Debug)]
struct RecoveryUnit {
    /// Child variable name + the breakpoints its edge grid uses.
    children: Vec<(String, Breakpoints)>,
    output: String,
    /// Bounds for auxiliary outputs that must be created in the recovery
    /// model; `None` when the output already exists (term outputs).
    create_output: Option<Interval>,
}

/// How auxiliary children of recursive groupings are discretized.
enum AuxMode {
    /// Single interval over the interval-product bounds.
    Single,
    /// Uniform partitions over the interval-product bounds.
    Partitioned(usize),
    /// Breakpoints at the sorted distinct products of the child grids,
    /// recursively (the lattice the recursion itself induces).
    Induced,
}

/// Sorted, deduplicated pairwise products of two breakpoint sets. Values
/// closer than a relative 1e-9 collapse so the result stays strictly
/// increasing.
fn induced_lattice(a: &Breakpoints, b: &Breakpoints) -> Result<Breakpoints, RecoveryError> {
    let mut vals = Vec::with_capacity(a.len() * b.len());
    for &x in a.values() {
        for &y in b.values() {
            vals.push(x * y);
        }
    }
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * 1f64.max(y.abs()));
    Ok(Breakpoints::new(vals)?)
}

/// Recovered point for one multilinear term.
#[derive(Clone, Debug)]
pub struct TermRecovery {
    pub output: String,
    pub w: f64,
    pub x: Vec<(String, f64)>,
    /// Active edge (vertex index pair) per recovery unit of this term.
    pub active_edges: Vec<(usize, usize)>,
}

/// A feasible point for the nonconvex multilinear equations, with the
/// objective it achieves (a valid LB for maximization).
#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub objective: f64,
    pub status: SolveStatus,
    pub values: BTreeMap<String, f64>,
    pub terms: Vec<TermRecovery>,
    /// True when an infeasible `Fa` fell back to `Ff1`.
    pub used_fallback: bool,
}

fn active_box_units(
    build: &RelaxationBuild,
    sol: &SolutionVector,
) -> Result<Vec<Vec<RecoveryUnit>>, RecoveryError> {
    let model = &build.model;
    let mut all = Vec::with_capacity(build.terms.len());
    for relax in &build.terms {
        let mut units = Vec::new();
        match relax {
            TermRelaxation::Ppr(art) => {
                let active = extract_active_partition(art, sol)?;
                let children = art
                    .term
                    .vars()
                    .iter()
                    .zip(&active.bounds.0)
                    .map(|(&v, iv)| {
                        Ok((model.name_of(v).to_string(), Breakpoints::new(vec![iv.lo, iv.hi])?))
                    })
                    .collect::<Result<Vec<_>, RecoveryError>>()?;
                units.push(RecoveryUnit {
                    children,
                    output: model.name_of(art.term.output()).to_string(),
                    create_output: None,
                });
            }
            TermRelaxation::Rppr(art) => {
                for (i, node) in art.nodes.iter().enumerate() {
                    let active = extract_active_partition(&node.ppr, sol)?;
                    let children = node
                        .ppr
                        .term
                        .vars()
                        .iter()
                        .zip(&active.bounds.0)
                        .map(|(&v, iv)| {
                            Ok((
                                model.name_of(v).to_string(),
                                Breakpoints::new(vec![iv.lo, iv.hi])?,
                            ))
                        })
                        .collect::<Result<Vec<_>, RecoveryError>>()?;
                    let is_root = i + 1 == art.nodes.len();
                    units.push(RecoveryUnit {
                        children,
                        output: model.name_of(node.output).to_string(),
                        create_output: if is_root { None } else { Some(node.bounds) },
                    });
                }
            }
        }
        all.push(units);
    }
    Ok(all)
}

fn grid_units(
    build: &RelaxationBuild,
    aux: AuxMode,
) -> Result<Vec<Vec<RecoveryUnit>>, RecoveryError> {
    let model = &build.model;
    let mut all = Vec::with_capacity(build.terms.len());
    for relax in &build.terms {
        let mut units = Vec::new();
        match relax {
            TermRelaxation::Ppr(art) => {
                let children = art
                    .term
                    .vars()
                    .iter()
                    .map(|&v| {
                        let name = model.name_of(v).to_string();
                        let bp = build.breakpoints[&name].clone();
                        (name, bp)
                    })
                    .collect();
                units.push(RecoveryUnit {
                    children,
                    output: model.name_of(art.term.output()).to_string(),
                    create_output: None,
                });
            }
            TermRelaxation::Rppr(art) => {
                // Breakpoints actually used per node output, for the
                // induced-lattice mode (nodes come in post-order, so child
                // grids are always recorded before they are referenced).
                let mut used: BTreeMap<VarRef, Breakpoints> = BTreeMap::new();
                for (i, node) in art.nodes.iter().enumerate() {
                    let mut children = Vec::with_capacity(2);
                    for child in [&node.left, &node.right] {
                        let name = model.name_of(child.var).to_string();
                        let bp = if child.is_aux {
                            match aux {
                                AuxMode::Single => child.breakpoints.clone(),
                                AuxMode::Partitioned(p) => uniform_breakpoints(child.bounds, p)?,
                                AuxMode::Induced => used[&child.var].clone(),
                            }
                        } else {
                            build.breakpoints[&name].clone()
                        };
                        children.push((name, bp));
                    }
                    used.insert(node.output, induced_lattice(&children[0].1, &children[1].1)?);
                    let is_root = i + 1 == art.nodes.len();
                    units.push(RecoveryUnit {
                        children,
                        output: model.name_of(node.output).to_string(),
                        create_output: if is_root { None } else { Some(node.bounds) },
                    });
                }
            }
        }
        all.push(units);
    }
    Ok(all)
}

/// Assemble the recovery MILP (shared originals, side constraints, original
/// objective, one edge block per unit), solve, and extract the point.
fn solve_units(
    spec: &ProblemSpec,
    units_per_term: &[Vec<RecoveryUnit>],
    cfg: &SolveConfig,
) -> Result<(MilpResult, MilpModel, Vec<Vec<RecoveryArtifacts>>), RecoveryError> {
    let (mut model, refs) = base_model(spec)?;
    let mut artifacts = Vec::with_capacity(units_per_term.len());
    for units in units_per_term {
        let mut term_arts = Vec::with_capacity(units.len());
        for unit in units {
            let output = match unit.create_output {
                Some(iv) => model.add_variable(&unit.output, iv.lo, iv.hi, VarKind::Continuous)?,
                None => refs[&unit.output],
            };
            let vars = unit
                .children
                .iter()
                .map(|(name, _)| {
                    model
                        .var_by_name(name)
                        .ok_or_else(|| PipelineError::UnknownName(name.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let term = MultilinearTerm::new(vars, output)?;
            let d = Discretization::new(unit.children.iter().map(|(_, bp)| bp.clone()).collect());
            let edges = grid_edges(&d);
            term_arts.push(build_recovery(&mut model, &term, &edges)?);
        }
        artifacts.push(term_arts);
    }
    let result = solve_milp(&model, cfg)?;
    Ok((result, model, artifacts))
}

fn extract_result(
    spec: &ProblemSpec,
    model: &MilpModel,
    artifacts: &[Vec<RecoveryArtifacts>],
    result: &MilpResult,
    used_fallback: bool,
) -> Result<RecoveryResult, RecoveryError> {
    let sol = match (&result.incumbent, result.status) {
        (Some(s), _) => s,
        (None, SolveStatus::Infeasible) => return Err(RecoveryError::Infeasible),
        (None, _) => return Err(RecoveryError::NoIncumbent),
    };
    let mut values = BTreeMap::new();
    for v in &spec.variables {
        values.insert(v.name.clone(), sol.value(model.var_by_name(&v.name).unwrap()));
    }
    for t in &spec.terms {
        values.insert(t.output.clone(), sol.value(model.var_by_name(&t.output).unwrap()));
    }
    let mut terms = Vec::with_capacity(spec.terms.len());
    for (t, term_arts) in spec.terms.iter().zip(artifacts) {
        let w = values[&t.output];
        let x: Vec<(String, f64)> =
            t.vars.iter().map(|n| (n.clone(), values[n])).collect();
        let prod: f64 = x.iter().map(|(_, v)| v).product();
        if (w - prod).abs() > PRODUCT_TOL * 1f64.max(w.abs()) {
            return Err(RecoveryError::ProductViolation { term: t.output.clone(), w, prod });
        }
        let mut active_edges = Vec::with_capacity(term_arts.len());
        for (u, art) in term_arts.iter().enumerate() {
            let active: Vec<usize> =
                (0..art.z.len()).filter(|&e| sol.value(art.z[e]) >= 0.5).collect();
            if active.len() != 1 {
                return Err(RecoveryError::EdgeIntegrality {
                    term: t.output.clone(),
                    unit: u,
                    found: active.len(),
                });
            }
            active_edges.push(art.edges[active[0]]);
        }
        terms.push(TermRecovery { output: t.output.clone(), w, x, active_edges });
    }
    Ok(RecoveryResult {
        objective: sol.objective,
        status: result.status,
        values,
        terms,
        used_fallback,
    })
}

/// Number of edge-selector binaries the grid recovery MILP would use:
/// `Ff1` when `aux_partitions` is `None` and the auxiliaries stay
/// unpartitioned, otherwise `Ff2` semantics. Useful for deciding whether
/// the internal solver can take the model (the one-dimensional face count
/// grows exponentially with partitions).
pub fn grid_recovery_binaries(
    build: &RelaxationBuild,
    variant_ff2: bool,
    aux_partitions: Option<usize>,
) -> Result<usize, RecoveryError> {
    let mode = if variant_ff2 {
        match aux_partitions {
            Some(p) => AuxMode::Partitioned(p),
            None => AuxMode::Induced,
        }
    } else {
        AuxMode::Single
    };
    let units = grid_units(build, mode)?;
    let mut total = 0usize;
    for term_units in &units {
        for unit in term_units {
            let sizes: Vec<usize> = unit.children.iter().map(|(_, bp)| bp.len()).collect();
            for a in 0..sizes.len() {
                let mut edges = sizes[a] - 1;
                for (b, &n) in sizes.iter().enumerate() {
                    if b != a {
                        edges *= n;
                    }
                }
                total += edges;
            }
        }
    }
    Ok(total)
}

/// Recovery over the active-partition box of each term (per pair node for
/// recursive groupings). Falls back to [`recover_ff1`] when the active box
/// conflicts with the side constraints.
pub fn recover_fa(
    spec: &ProblemSpec,
    build: &RelaxationBuild,
    relax_sol: &SolutionVector,
    cfg: &SolveConfig,
) -> Result<RecoveryResult, RecoveryError> {
    let units = active_box_units(build, relax_sol)?;
    let (result, model, artifacts) = solve_units(spec, &units, cfg)?;
    if result.status == SolveStatus::Infeasible {
        let mut out = recover_ff1(spec, build, cfg)?;
        out.used_fallback = true;
        return Ok(out);
    }
    extract_result(spec, &model, &artifacts, &result, false)
}

/// Recovery over the edges of the full partition grid; auxiliary variables
/// of recursive groupings stay unpartitioned. Independent of any
/// relaxation solution.
pub fn recover_ff1(
    spec: &ProblemSpec,
    build: &RelaxationBuild,
    cfg: &SolveConfig,
) -> Result<RecoveryResult, RecoveryError> {
    let units = grid_units(build, AuxMode::Single)?;
    let (result, model, artifacts) = solve_units(spec, &units, cfg)?;
    extract_result(spec, &model, &artifacts, &result, false)
}

/// Grid-edge recovery for recursive groupings with the auxiliary lifted
/// variables partitioned as well. By default an auxiliary's breakpoints
/// sit on the induced lattice (products of its children's breakpoints,
/// recursively); passing `aux_partitions` switches to that many uniform
/// intervals over the interval-product bounds instead.
pub fn recover_ff2(
    spec: &ProblemSpec,
    build: &RelaxationBuild,
    aux_partitions: Option<usize>,
    cfg: &SolveConfig,
) -> Result<RecoveryResult, RecoveryError> {
    if build.terms.iter().any(|t| matches!(t, TermRelaxation::Ppr(_))) {
        return Err(RecoveryError::NotRecursive);
    }
    let mode = match aux_partitions {
        Some(p) => AuxMode::Partitioned(p),
        None => AuxMode::Induced,
    };
    let units = grid_units(build, mode)?;
    let (result, model, artifacts) = solve_units(spec, &units, cfg)?;
    extract_result(spec, &model, &artifacts, &result, false)
}

#[cfg(test)]
mod tests {
    use super::*;

   use crate::domain::Interval;
    use crate::milp::{ObjSense, INF};

    fn unit_box(dims: usize) -> IntervalBox {
        IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); dims])
    }

    #[test]
    fn box_edge_counts() {
        let e = box_edges(&unit_box(2)).unwrap();
        assert_eq!(e.vertices.len(), 4);
        assert_eq!(e.edges.len(), 4);

        let e = box_edges(&unit_box(3)).unwrap();
        assert_eq!(e.vertices.len(), 8);
        assert_eq!(e.edges.len(), 12);
        assert!(e.incidence.iter().all(|inc| inc.len() == 3));

        let e = box_edges(&unit_box(4)).unwrap();
        assert_eq!(e.vertices.len(), 16);
        assert_eq!(e.edges.len(), 32);

        let degenerate = IntervalBox(vec![Interval::new(1.0, 1.0).unwrap(); 2]);
        assert!(matches!(box_edges(&degenerate), Err(RecoveryError::DegenerateBox)));
    }

    #[test]
    fn grid_edge_counts() {
        let d = crate::domain::uniform_discretization(&unit_box(2), 3).unwrap();
        let e = grid_edges(&d);
        assert_eq!(e.vertices.len(), 16);
        assert_eq!(e.edges.len(), 24);

        let d = crate::domain::uniform_discretization(&unit_box(2), 1).unwrap();
        assert_eq!(grid_edges(&d).edges.len(), 4);

        let d = crate::domain::uniform_discretization(&unit_box(3), 2).unwrap();
        let e = grid_edges(&d);
        assert_eq!(e.vertices.len(), 27);
        assert_eq!(e.edges.len(), 54);
    }

    #[test]
    fn edges_join_neighbors_in_one_coordinate() {
        let d = crate::domain::uniform_discretization(&unit_box(3), 2).unwrap();
        let e = grid_edges(&d);
        for &(a, b) in &e.edges {
            let ca = e.grid.decode(a);
            let cb = e.grid.decode(b);
            let diffs: Vec<usize> = (0..3).filter(|&i| ca[i] != cb[i]).collect();
            assert_eq!(diffs.len(), 1);
            let i = diffs[0];
            assert_eq!(ca[i] + 1, cb[i]);
        }
    }

    fn recovery_model(dims: usize) -> (MilpModel, MultilinearTerm) {
        let mut m = MilpModel::new();
        let xs: Vec<VarRef> = (0..dims)
            .map(|i| m.add_variable(&format!("x{}", i + 1), 0.0, 1.0, VarKind::Continuous).unwrap())
            .collect();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        (m.clone(), MultilinearTerm::new(xs, w).unwrap())
    }

    #[test]
    fn bilinear_recovery_reaches_the_corner() {
        let (mut m, term) = recovery_model(2);
        let edges = box_edges(&unit_box(2)).unwrap();
        build_recovery(&mut m, &term, &edges).unwrap();
        let w = m.var_by_name("w").unwrap();
        m.set_objective(ObjSense::Maximize, vec![(w, 1.0)]).unwrap();
        let res = solve_milp(&m, &SolveConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.solution().unwrap().objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn budget_blocks_interior_point() {
        // max w s.t. x1 + x2 <= 1 on edges of the unit square: every edge
        // passes through a zero corner, so the edge-restricted optimum is 0
        // even though the relaxed problem reaches 0.25 in the interior.
        let (mut m, term) = recovery_model(2);
        let edges = box_edges(&unit_box(2)).unwrap();
        build_recovery(&mut m, &term, &edges).unwrap();
        let x1 = m.var_by_name("x1").unwrap();
        let x2 = m.var_by_name("x2").unwrap();
        let w = m.var_by_name("w").unwrap();
        m.add_row(vec![(x1, 1.0), (x2, 1.0)], RowSense::Le, 1.0, "budget").unwrap();
        m.set_objective(ObjSense::Maximize, vec![(w, 1.0)]).unwrap();
        let res = solve_milp(&m, &SolveConfig::default()).unwrap();
        assert!(res.solution().unwrap().objective.abs() < 1e-9);
    }

    #[test]
    fn trilinear_edge_reproduces_product() {
        let (mut m, term) = recovery_model(3);
        let edges = box_edges(&unit_box(3)).unwrap();
        build_recovery(&mut m, &term, &edges).unwrap();
        let x1 = m.var_by_name("x1").unwrap();
        let x2 = m.var_by_name("x2").unwrap();
        let x3 = m.var_by_name("x3").unwrap();
        let w = m.var_by_name("w").unwrap();
        m.add_row(vec![(x1, 1.0)], RowSense::Eq, 1.0, "pin1").unwrap();
        m.add_row(vec![(x2, 1.0)], RowSense::Eq, 1.0, "pin2").unwrap();
        m.add_row(vec![(x3, 1.0)], RowSense::Eq, 0.5, "pin3").unwrap();
        m.set_objective(ObjSense::Maximize, vec![(w, 1.0)]).unwrap();
        let res = solve_milp(&m, &SolveConfig::default()).unwrap();
        assert!((res.solution().unwrap().objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn empty_edge_set_is_rejected() {
        let (mut m, term) = recovery_model(2);
        let mut edges = box_edges(&unit_box(2)).unwrap();
        edges.edges.clear();
        assert!(matches!(
            build_recovery(&mut m, &term, &edges),
            Err(RecoveryError::EmptyEdgeSet)
        ));
    }

    #[test]
    fn gap_formulas() {
        let g = ub_gap(4.0986e10, 3.2642e10);
        assert!((g - 20.36).abs() < 0.01, "{}", g);
        assert_eq!(lb_gap(7.0, 7.0), 0.0);
        // invert: gap 2.33 <-> lb = opt / 1.0233
        let opt = 3.2642e10;
        let lb = opt / 1.0233;
        assert!((lb_gap(opt, lb) - 2.33).abs() < 1e-9);
        // table convention divides by OPT instead
        assert!((ub_gap_table(4.047373e10, opt) - 23.99).abs() < 0.005);
    }
}
