//! Formulation builders: McCormick envelope, single-partition convex hull,
//! SOS-2 piecewise polyhedral relaxation (PPR), and the recursive R-PPR.
//!
//! Builders are pure functions into a caller-owned [`MilpModel`]. The
//! caller declares the original `x` columns and the lifted output `w`
//! before building; the builders add multiplier (`lam_*`) and indicator
//! (`y_*`) columns plus the linking rows. Interval indicators are a
//! property of a *variable*, not of a term: problems where several terms
//! share a variable create the indicator set once and pass it to each
//! term's builder, which keeps active partitions consistent across terms.
//!
//! Row tags follow the block structure of the formulation (`eq7a_*` links,
//! `eq7b_*` choose-one, `eq7c`/`eq7d`/`eq7e` adjacency) so every row of a
//! built model is traceable.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{
    interval_product, mu, Breakpoints, Discretization, DomainError, GroupNode, GroupingTree,
    Interval, IntervalBox, MultilinearTerm, VertexGrid,
};
use crate::milp::{
    is_unbounded, MilpModel, ModelError, RowSense, SolutionVector, VarKind, VarRef,
};

/// Default cap on `2^arity` hull columns.
pub const HULL_ARITY_CAP: usize = 12;

#[derive(Error, Debug)]
pub enum BuildError {
    #[error("operation requires a bilinear term, got arity {0}")]
    NotBilinear(usize),
    #[error("bounds of `{0}` must be finite")]
    UnboundedVariable(String),
    #[error("term arity {arity} exceeds the hull column cap of {cap} variables")]
    HullTooLarge { arity: usize, cap: usize },
    #[error("discretization has {got} axes but term has {expected}")]
    AxisMismatch { expected: usize, got: usize },
    #[error("indicator set for `{0}` does not match the discretization axis")]
    IndicatorMismatch(String),
    #[error("grouping tree has {got} leaves but term has {expected} variables")]
    TreeMismatch { expected: usize, got: usize },
    #[error("no shared indicators for variable `{0}`")]
    MissingIndicators(String),
    #[error("active partition of `{var}`: {found} indicators at or above 0.5")]
    Integrality { var: String, found: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Interval indicators `y_{i,k}` of one variable plus its choose-one row.
#[derive(Clone, Debug)]
pub struct IndicatorSet {
    pub var: VarRef,
    pub breakpoints: Breakpoints,
    /// One binary per partition, in interval order.
    pub y: Vec<VarRef>,
}

/// Create the binary indicators of a variable's partitions and the
/// `sum_k y_{i,k} = 1` row. Call once per variable and share the result
/// across every term that partitions it.
pub fn add_interval_indicators(
    model: &mut MilpModel,
    var: VarRef,
    bp: &Breakpoints,
) -> Result<IndicatorSet, BuildError> {
    let name = model.name_of(var).to_string();
    let mut y = Vec::with_capacity(bp.partitions());
    for k in 0..bp.partitions() {
        y.push(model.add_variable(&format!("y_{}_{}", name, k + 1), 0.0, 1.0, VarKind::Binary)?);
    }
    model.add_row(
        y.iter().map(|&v| (v, 1.0)).collect(),
        RowSense::Eq,
        1.0,
        &format!("eq7b_{}", name),
    )?;
    Ok(IndicatorSet { var, breakpoints: bp.clone(), y })
}

/// McCormick envelope of a bilinear term over a finite box: two
/// under-estimators and two over-estimators. Returns the four row tags.
pub fn build_mccormick(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    bounds: &IntervalBox,
) -> Result<Vec<String>, BuildError> {
    if term.arity() != 2 {
        return Err(BuildError::NotBilinear(term.arity()));
    }
    for (iv, &v) in bounds.0.iter().zip(term.vars()) {
        if is_unbounded(iv.lo) || is_unbounded(iv.hi) {
            return Err(BuildError::UnboundedVariable(model.name_of(v).to_string()));
        }
    }
    let (x1, x2) = (term.vars()[0], term.vars()[1]);
    let w = term.output();
    let (l1, u1) = (bounds.0[0].lo, bounds.0[0].hi);
    let (l2, u2) = (bounds.0[1].lo, bounds.0[1].hi);
    let rows: [(&str, f64, f64, RowSense, f64); 4] = [
        ("eq4a", u2, u1, RowSense::Ge, -u1 * u2),
        ("eq4b", l2, l1, RowSense::Ge, -l1 * l2),
        ("eq4c", u2, l1, RowSense::Le, -l1 * u2),
        ("eq4d", l2, u1, RowSense::Le, -u1 * l2),
    ];
    let mut tags = Vec::with_capacity(4);
    for (tag, c1, c2, sense, rhs) in rows {
        model.add_row(vec![(w, 1.0), (x1, -c1), (x2, -c2)], sense, rhs, tag)?;
        tags.push(tag.to_string());
    }
    Ok(tags)
}

/// Convex-hull (lambda) formulation over the `2^arity` corners of a box:
/// nonnegative multipliers, per-variable and output linking rows, and one
/// convexity row. Returns the multiplier columns in grid order.
pub fn build_convex_hull(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    bounds: &IntervalBox,
) -> Result<Vec<VarRef>, BuildError> {
    build_convex_hull_with_cap(model, term, bounds, HULL_ARITY_CAP)
}

/// [`build_convex_hull`] with an explicit arity cap on the `2^arity`
/// column blow-up.
pub fn build_convex_hull_with_cap(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    bounds: &IntervalBox,
    cap: usize,
) -> Result<Vec<VarRef>, BuildError> {
    if term.arity() > cap {
        return Err(BuildError::HullTooLarge { arity: term.arity(), cap });
    }
    if bounds.dims() != term.arity() {
        return Err(BuildError::AxisMismatch { expected: term.arity(), got: bounds.dims() });
    }
    for (iv, &v) in bounds.0.iter().zip(term.vars()) {
        if is_unbounded(iv.lo) || is_unbounded(iv.hi) {
            return Err(BuildError::UnboundedVariable(model.name_of(v).to_string()));
        }
    }
    let axes: Vec<Breakpoints> = bounds
        .0
        .iter()
        .map(|iv| Breakpoints::new(vec![iv.lo, iv.hi]))
        .collect::<Result<_, _>>()?;
    let d = Discretization::new(axes);
    let out = model.name_of(term.output()).to_string();
    let lambda = add_lambda_block(model, term, &d, &out, "eq5")?;
    Ok(lambda)
}

/// Multiplier columns plus linking/convexity rows shared by the hull and
/// PPR builders. `block` distinguishes the row tags.
fn add_lambda_block(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    d: &Discretization,
    out_name: &str,
    block: &str,
) -> Result<Vec<VarRef>, BuildError> {
    let grid = d.grid();
    let vertices = crate::domain::enumerate_vertices(d);
    let mut lambda = Vec::with_capacity(grid.len());
    for s in 0..grid.len() {
        lambda.push(model.add_variable(
            &format!("lam_{}_{}", out_name, s),
            0.0,
            1.0,
            VarKind::Continuous,
        )?);
    }
    for (i, &x) in term.vars().iter().enumerate() {
        let mut coeffs = vec![(x, 1.0)];
        for (s, v) in vertices.iter().enumerate() {
            coeffs.push((lambda[s], -v[i]));
        }
        let xname = model.name_of(x).to_string();
        model.add_row(
            coeffs,
            RowSense::Eq,
            0.0,
            &format!("{}a_x_{}_{}", block, xname, out_name),
        )?;
    }
    let mut coeffs = vec![(term.output(), 1.0)];
    for (s, v) in vertices.iter().enumerate() {
        coeffs.push((lambda[s], -crate::domain::phi(v)));
    }
    model.add_row(coeffs, RowSense::Eq, 0.0, &format!("{}a_w_{}", block, out_name))?;
    model.add_row(
        lambda.iter().map(|&v| (v, 1.0)).collect(),
        RowSense::Eq,
        1.0,
        &format!("{}a_simplex_{}", block, out_name),
    )?;
    Ok(lambda)
}

/// One term's PPR block: multiplier grid, indicator references, and the
/// discretization it was built on.
#[derive(Clone, Debug)]
pub struct PprArtifacts {
    pub term: MultilinearTerm,
    pub axes: Vec<Breakpoints>,
    pub grid: VertexGrid,
    /// Multiplier columns in flat grid order.
    pub lambda: Vec<VarRef>,
    /// Indicator set per axis (possibly shared with other terms).
    pub indicators: Vec<IndicatorSet>,
}

impl PprArtifacts {
    /// Indicator column of interval `k` (0-based) of axis `i`.
    pub fn y_ref(&self, i: usize, k: usize) -> VarRef {
        self.indicators[i].y[k]
    }

    pub fn num_binaries(&self) -> usize {
        self.indicators.iter().map(|ind| ind.y.len()).sum()
    }
}

/// SOS-2 piecewise polyhedral relaxation of a term, creating fresh interval
/// indicators for each axis.
pub fn build_ppr(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    d: &Discretization,
) -> Result<PprArtifacts, BuildError> {
    if d.dims() != term.arity() {
        return Err(BuildError::AxisMismatch { expected: term.arity(), got: d.dims() });
    }
    let mut indicators = Vec::with_capacity(term.arity());
    for (i, &v) in term.vars().iter().enumerate() {
        indicators.push(add_interval_indicators(model, v, d.axis(i))?);
    }
    build_ppr_shared(model, term, d, indicators)
}

/// PPR over existing indicator sets (one per axis, in term-variable order).
pub fn build_ppr_shared(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    d: &Discretization,
    indicators: Vec<IndicatorSet>,
) -> Result<PprArtifacts, BuildError> {
    if d.dims() != term.arity() {
        return Err(BuildError::AxisMismatch { expected: term.arity(), got: d.dims() });
    }
    if indicators.len() != term.arity() {
        return Err(BuildError::AxisMismatch { expected: term.arity(), got: indicators.len() });
    }
    for (i, ind) in indicators.iter().enumerate() {
        if ind.var != term.vars()[i] || ind.breakpoints.values() != d.axis(i).values() {
            return Err(BuildError::IndicatorMismatch(
                model.name_of(term.vars()[i]).to_string(),
            ));
        }
    }
    let out_name = model.name_of(term.output()).to_string();
    let lambda = add_lambda_block(model, term, d, &out_name, "eq7")?;

    // SOS-2 adjacency: one row per breakpoint; the extreme breakpoints bind
    // to a single interval indicator, interior ones to their two neighbors.
    for (i, ind) in indicators.iter().enumerate() {
        let xname = model.name_of(term.vars()[i]).to_string();
        let n = d.axis(i).len();
        for k in 0..n {
            let r = d.axis(i).values()[k];
            let members = mu(d, i, r)?;
            let mut coeffs: Vec<(VarRef, f64)> =
                members.iter().map(|&s| (lambda[s], 1.0)).collect();
            let tag;
            if k == 0 {
                coeffs.push((ind.y[0], -1.0));
                tag = format!("eq7c_{}_{}", xname, out_name);
            } else if k == n - 1 {
                coeffs.push((ind.y[n - 2], -1.0));
                tag = format!("eq7e_{}_{}", xname, out_name);
            } else {
                coeffs.push((ind.y[k - 1], -1.0));
                coeffs.push((ind.y[k], -1.0));
                tag = format!("eq7d_{}_k{}_{}", xname, k + 1, out_name);
            }
            model.add_row(coeffs, RowSense::Le, 0.0, &tag)?;
        }
    }
    Ok(PprArtifacts {
        term: term.clone(),
        axes: d.axes().to_vec(),
        grid: d.grid(),
        lambda,
        indicators,
    })
}

/// One bilinear node of an R-PPR: its output column, interval bounds, the
/// children it multiplies, and the embedded bilinear PPR.
#[derive(Clone, Debug)]
pub struct RpprNode {
    pub output: VarRef,
    pub bounds: Interval,
    pub left: RpprChild,
    pub right: RpprChild,
    pub ppr: PprArtifacts,
}

#[derive(Clone, Debug)]
pub struct RpprChild {
    pub var: VarRef,
    pub is_aux: bool,
    pub bounds: Interval,
    pub breakpoints: Breakpoints,
}

/// R-PPR artifacts: one bilinear PPR per pair node, in post-order (root
/// last). The root node's output is the term's lifted variable.
#[derive(Clone, Debug)]
pub struct RpprArtifacts {
    pub tree: GroupingTree,
    pub nodes: Vec<RpprNode>,
    /// Interval bounds per auxiliary id (root included).
    pub aux_bounds: BTreeMap<usize, Interval>,
}

impl RpprArtifacts {
    pub fn root(&self) -> &RpprNode {
        self.nodes.last().expect("tree has at least one pair")
    }
}

/// Recursive PPR with fresh indicators for the original variables.
pub fn build_rppr(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    tree: &GroupingTree,
    d: &Discretization,
) -> Result<RpprArtifacts, BuildError> {
    let mut shared = BTreeMap::new();
    for (i, &v) in term.vars().iter().enumerate() {
        shared.insert(v, add_interval_indicators(model, v, d.axis(i))?);
    }
    build_rppr_shared(model, term, tree, d, &shared)
}

/// Recursive PPR: a bilinear PPR per pair node of the grouping tree. Only
/// original variables carry the discretization; auxiliary children get a
/// single partition over their interval-product bounds. Indicators for the
/// original variables come from `shared`.
pub fn build_rppr_shared(
    model: &mut MilpModel,
    term: &MultilinearTerm,
    tree: &GroupingTree,
    d: &Discretization,
    shared: &BTreeMap<VarRef, IndicatorSet>,
) -> Result<RpprArtifacts, BuildError> {
    if tree.num_leaves() != term.arity() {
        return Err(BuildError::TreeMismatch { expected: term.arity(), got: tree.num_leaves() });
    }
    if d.dims() != term.arity() {
        return Err(BuildError::AxisMismatch { expected: term.arity(), got: d.dims() });
    }
    let out_name = model.name_of(term.output()).to_string();

    struct Ctx<'a> {
        model: &'a mut MilpModel,
        term: &'a MultilinearTerm,
        d: &'a Discretization,
        shared: &'a BTreeMap<VarRef, IndicatorSet>,
        out_name: String,
        nodes: Vec<RpprNode>,
        aux_bounds: BTreeMap<usize, Interval>,
    }

    fn walk(ctx: &mut Ctx, node: &GroupNode, is_root: bool) -> Result<RpprChild, BuildError> {
        match node {
            GroupNode::Leaf(i) => {
                let var = ctx.term.vars()[*i];
                let bp = ctx.d.axis(*i).clone();
                Ok(RpprChild { var, is_aux: false, bounds: bp.interval(), breakpoints: bp })
            }
            GroupNode::Pair { left, right, aux } => {
                let lc = walk(ctx, left, false)?;
                let rc = walk(ctx, right, false)?;
                let bounds = interval_product(lc.bounds, rc.bounds);
                let output = if is_root {
                    ctx.term.output()
                } else {
                    ctx.model.add_variable(
                        &format!("aux_{}_{}", ctx.out_name, aux),
                        bounds.lo,
                        bounds.hi,
                        VarKind::Continuous,
                    )?
                };
                ctx.aux_bounds.insert(*aux, bounds);
                let sub_term = MultilinearTerm::new(vec![lc.var, rc.var], output)?;
                let sub_d =
                    Discretization::new(vec![lc.breakpoints.clone(), rc.breakpoints.clone()]);
                let mut inds = Vec::with_capacity(2);
                for child in [&lc, &rc] {
                    if child.is_aux {
                        inds.push(add_interval_indicators(
                            ctx.model,
                            child.var,
                            &child.breakpoints,
                        )?);
                    } else {
                        let ind = ctx
                            .shared
                            .get(&child.var)
                            .ok_or_else(|| {
                                BuildError::MissingIndicators(
                                    ctx.model.name_of(child.var).to_string(),
                                )
                            })?
                            .clone();
                        inds.push(ind);
                    }
                }
                let ppr = build_ppr_shared(ctx.model, &sub_term, &sub_d, inds)?;
                ctx.nodes.push(RpprNode {
                    output,
                    bounds,
                    left: lc,
                    right: rc,
                    ppr,
                });
                let bp = Breakpoints::new(vec![bounds.lo, bounds.hi])?;
                Ok(RpprChild { var: output, is_aux: true, bounds, breakpoints: bp })
            }
        }
    }

    let mut ctx = Ctx {
        model,
        term,
        d,
        shared,
        out_name,
        nodes: Vec::new(),
        aux_bounds: BTreeMap::new(),
    };
    walk(&mut ctx, tree.root(), true)?;
    Ok(RpprArtifacts { tree: tree.clone(), nodes: ctx.nodes, aux_bounds: ctx.aux_bounds })
}

/// Active partition of a solved PPR: interval index and bounds per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivePartition {
    pub intervals: Vec<usize>,
    pub bounds: IntervalBox,
}

/// Read the active partition off the indicator values of a MILP-feasible
/// solution. Trusts `y` (threshold 0.5) and never re-derives the partition
/// from `x`, so breakpoint ties are resolved the way the solver chose.
pub fn extract_active_partition(
    art: &PprArtifacts,
    sol: &SolutionVector,
) -> Result<ActivePartition, BuildError> {
    let mut intervals = Vec::with_capacity(art.indicators.len());
    let mut boxes = Vec::with_capacity(art.indicators.len());
    for (i, ind) in art.indicators.iter().enumerate() {
        let active: Vec<usize> =
            (0..ind.y.len()).filter(|&k| sol.value(ind.y[k]) >= 0.5).collect();
        if active.len() != 1 {
            return Err(BuildError::Integrality {
                var: format!("axis {}", i),
                found: active.len(),
            });
        }
        intervals.push(active[0]);
        boxes.push(art.axes[i].partition(active[0]));
    }
    Ok(ActivePartition { intervals, bounds: IntervalBox(boxes) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{uniform_discretization, Interval, IntervalBox};
    use crate::milp::{MilpModel, ObjSense, SolveStatus, VarKind, INF};
    use crate::solver::{solve_lp, SolveConfig};

    fn box2(a: (f64, f64), b: (f64, f64)) -> IntervalBox {
        IntervalBox(vec![Interval::new(a.0, a.1).unwrap(), Interval::new(b.0, b.1).unwrap()])
    }

    fn bilinear_model(bounds: &IntervalBox) -> (MilpModel, MultilinearTerm) {
        let mut m = MilpModel::new();
        let x1 = m.add_variable("x1", bounds.0[0].lo, bounds.0[0].hi, VarKind::Continuous).unwrap();
        let x2 = m.add_variable("x2", bounds.0[1].lo, bounds.0[1].hi, VarKind::Continuous).unwrap();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        (m, MultilinearTerm::new(vec![x1, x2], w).unwrap())
    }

    #[test]
    fn mccormick_unit_square_rows() {
        let bounds = box2((0.0, 1.0), (0.0, 1.0));
        let (mut m, term) = bilinear_model(&bounds);
        let tags = build_mccormick(&mut m, &term, &bounds).unwrap();
        assert_eq!(tags, vec!["eq4a", "eq4b", "eq4c", "eq4d"]);
        assert_eq!(m.num_rows(), 4);
        // w >= x1 + x2 - 1
        let r = m.row_by_tag("eq4a").unwrap();
        assert_eq!(r.rhs, -1.0);
        // w >= 0: eq4b collapses to the single w coefficient
        let r = m.row_by_tag("eq4b").unwrap();
        assert_eq!(r.coeffs.len(), 1);
    }

    #[test]
    fn mccormick_corner_feasibility() {
        let bounds = box2((0.0, 1.0), (0.0, 1.0));
        let (mut m, term) = bilinear_model(&bounds);
        build_mccormick(&mut m, &term, &bounds).unwrap();
        let corner = SolutionVector {
            values: vec![1.0, 1.0, 1.0],
            objective: 1.0,
            status: SolveStatus::Optimal,
        };
        assert!(m.check_feasible(&corner, 1e-9).unwrap().is_empty());
        // (1, 1, 0) violates the under-estimator w >= x1 + x2 - 1
        let below = SolutionVector {
            values: vec![1.0, 1.0, 0.0],
            objective: 0.0,
            status: SolveStatus::Optimal,
        };
        let report = m.check_feasible(&below, 1e-9).unwrap();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].0, "eq4a");
    }

    #[test]
    fn mccormick_general_box_rows() {
        // [1,3] x [2,4]: w >= 4x1+3x2-12, w >= 2x1+x2-2, w <= 4x1+x2-4, w <= 2x1+3x2-6
        let bounds = box2((1.0, 3.0), (2.0, 4.0));
        let (mut m, term) = bilinear_model(&bounds);
        build_mccormick(&mut m, &term, &bounds).unwrap();
        let x1 = m.var_by_name("x1").unwrap();
        let x2 = m.var_by_name("x2").unwrap();
        let w = m.var_by_name("w").unwrap();
        let expect = [
            ("eq4a", -4.0, -3.0, -12.0),
            ("eq4b", -2.0, -1.0, -2.0),
            ("eq4c", -4.0, -1.0, -4.0),
            ("eq4d", -2.0, -3.0, -6.0),
        ];
        for (tag, c1, c2, rhs) in expect {
            let r = m.row_by_tag(tag).unwrap();
            assert_eq!(r.coeffs, vec![(x1, c1), (x2, c2), (w, 1.0)], "{}", tag);
            assert_eq!(r.rhs, rhs, "{}", tag);
        }
    }

    #[test]
    fn mccormick_degenerate_axis_collapses_to_linear() {
        // x2 fixed at 0.6 by its bounds: envelope forces w = 0.6 x1.
        let bounds = box2((0.0, 1.0), (0.6, 0.6));
        let (mut m, term) = bilinear_model(&bounds);
        build_mccormick(&mut m, &term, &bounds).unwrap();
        let w = m.var_by_name("w").unwrap();
        let x1 = m.var_by_name("x1").unwrap();
        // pin x1 = 0.7 and compare max w vs min w
        m.add_row(vec![(x1, 1.0)], RowSense::Eq, 0.7, "pin").unwrap();
        m.set_objective(ObjSense::Maximize, vec![(w, 1.0)]).unwrap();
        let hi = solve_lp(&m, &SolveConfig::default()).unwrap().objective;
        m.set_objective(ObjSense::Minimize, vec![(w, 1.0)]).unwrap();
        let lo = solve_lp(&m, &SolveConfig::default()).unwrap().objective;
        assert!((hi - 0.42).abs() < 1e-9 && (lo - 0.42).abs() < 1e-9);
    }

    #[test]
    fn mccormick_rejects_nonbilinear() {
        let mut m = MilpModel::new();
        let a = m.add_variable("a", 0.0, 1.0, VarKind::Continuous).unwrap();
        let b = m.add_variable("b", 0.0, 1.0, VarKind::Continuous).unwrap();
        let c = m.add_variable("c", 0.0, 1.0, VarKind::Continuous).unwrap();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        let term = MultilinearTerm::new(vec![a, b, c], w).unwrap();
        let bounds = IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); 3]);
        assert!(matches!(
            build_mccormick(&mut m, &term, &bounds),
            Err(BuildError::NotBilinear(3))
        ));
    }

    #[test]
    fn hull_bilinear_unit_square() {
        let bounds = box2((0.0, 1.0), (0.0, 1.0));
        let (mut m, term) = bilinear_model(&bounds);
        let lambda = build_convex_hull(&mut m, &term, &bounds).unwrap();
        assert_eq!(lambda.len(), 4);
        // phi over corners in grid order: (0,0),(1,0),(0,1),(1,1) -> 0,0,0,1
        let wrow = m.row_by_tag("eq5a_w_w").unwrap();
        let phi_coeffs: Vec<f64> = lambda
            .iter()
            .map(|l| wrow.coeffs.iter().find(|(v, _)| v == l).map(|(_, c)| -c).unwrap_or(0.0))
            .collect();
        assert_eq!(phi_coeffs, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn hull_trilinear_max_corner() {
        let mut m = MilpModel::new();
        let xs: Vec<VarRef> = (0..3)
            .map(|i| m.add_variable(&format!("x{}", i), 0.0, 1.0, VarKind::Continuous).unwrap())
            .collect();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        let term = MultilinearTerm::new(xs, w).unwrap();
        let bounds = IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); 3]);
        let lambda = build_convex_hull(&mut m, &term, &bounds).unwrap();
        assert_eq!(lambda.len(), 8);
        m.set_objective(ObjSense::Maximize, vec![(w, 1.0)]).unwrap();
        let sol = solve_lp(&m, &SolveConfig::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hull_with_budget_overestimates() {
        // max w over the hull with x1 + x2 <= 1 reaches 0.5; the true
        // product maximum on that line is 0.25.
        let bounds = box2((0.0, 1.0), (0.0, 1.0));
        let (mut m, term) = bilinear_model(&bounds);
        build_convex_hull(&mut m, &term, &bounds).unwrap();
        let x1 = m.var_by_name("x1").unwrap();
        let x2 = m.var_by_name("x2").unwrap();
        let w = m.var_by_name("w").unwrap();
        m.add_row(vec![(x1, 1.0), (x2, 1.0)], RowSense::Le, 1.0, "budget").unwrap();
        m.set_objective(ObjSense::Maximize, vec![(w, 1.0)]).unwrap();
        let sol = solve_lp(&m, &SolveConfig::default()).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hull_cap_is_enforced() {
        let mut m = MilpModel::new();
        let xs: Vec<VarRef> = (0..13)
            .map(|i| m.add_variable(&format!("x{}", i), 0.0, 1.0, VarKind::Continuous).unwrap())
            .collect();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        let term = MultilinearTerm::new(xs, w).unwrap();
        let bounds = IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); 13]);
        assert!(matches!(
            build_convex_hull(&mut m, &term, &bounds),
            Err(BuildError::HullTooLarge { .. })
        ));
        assert!(build_convex_hull_with_cap(&mut m, &term, &bounds, 13).is_ok());
    }

    /// The Fig-1 worked example: bilinear over [1,4]^2 with 3 partitions
    /// per variable.
    fn fig1_fixture() -> (MilpModel, PprArtifacts) {
        let bounds = box2((1.0, 4.0), (1.0, 4.0));
        let (mut m, term) = bilinear_model(&bounds);
        let d = uniform_discretization(&bounds, 3).unwrap();
        let art = build_ppr(&mut m, &term, &d).unwrap();
        (m, art)
    }

    #[test]
    fn ppr_fig1_counts_and_rows() {
        let (m, art) = fig1_fixture();
        assert_eq!(art.lambda.len(), 16);
        assert_eq!(art.num_binaries(), 6);
        // rows: 2 choose-one + 2 x-links + w-link + simplex + 2*4 adjacency
        assert_eq!(m.num_rows(), 2 + 2 + 1 + 1 + 8);

        // lam_2 + lam_6 + lam_10 + lam_14 <= y_{1,1} + y_{1,2}
        // (1-based lambda labels; flats 1, 5, 9, 13)
        let row = m.row_by_tag("eq7d_x1_k2_w").unwrap();
        let mut lam: Vec<usize> = Vec::new();
        let mut ys = 0;
        for (v, c) in &row.coeffs {
            if *c > 0.0 {
                lam.push(art.lambda.iter().position(|l| l == v).unwrap());
            } else {
                ys += 1;
            }
        }
        assert_eq!(lam, vec![1, 5, 9, 13]);
        assert_eq!(ys, 2);

        // First breakpoint of x2 gathers the first grid row: flats 0..3.
        let row = m.row_by_tag("eq7c_x2_w").unwrap();
        let lam: Vec<usize> = row
            .coeffs
            .iter()
            .filter(|(_, c)| *c > 0.0)
            .map(|(v, _)| art.lambda.iter().position(|l| l == v).unwrap())
            .collect();
        assert_eq!(lam, vec![0, 1, 2, 3]);

        // Last breakpoint of x1: flats 3, 7, 11, 15 against y_{1,3} alone.
        let row = m.row_by_tag("eq7e_x1_w").unwrap();
        assert_eq!(row.coeffs.len(), 5);
    }

    #[test]
    fn ppr_feasibility_of_hand_point() {
        // lambda = indicator of vertex 6 (1-based; flat 5 = (2,2)),
        // y_{1,1} = y_{2,1} = 1: feasible with x = (2,2), w = 4.
        let (m, art) = fig1_fixture();
        let mut values = vec![0.0; m.num_vars()];
        values[m.var_by_name("x1").unwrap().0] = 2.0;
        values[m.var_by_name("x2").unwrap().0] = 2.0;
        values[m.var_by_name("w").unwrap().0] = 4.0;
        values[art.lambda[5].0] = 1.0;
        values[art.y_ref(0, 0).0] = 1.0;
        values[art.y_ref(1, 0).0] = 1.0;
        let point = SolutionVector { values, objective: 4.0, status: SolveStatus::Optimal };
        assert!(m.check_feasible(&point, 1e-9).unwrap().is_empty());

        // Dropping the indicators violates the adjacency rows.
        let mut bad = point.clone();
        bad.values[art.y_ref(0, 0).0] = 0.0;
        bad.values[art.y_ref(0, 2).0] = 1.0;
        assert!(!m.check_feasible(&bad, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn ppr_four_vars_p2_counts() {
        let mut m = MilpModel::new();
        let xs: Vec<VarRef> = (0..4)
            .map(|i| m.add_variable(&format!("x{}", i), 0.0, 1.0, VarKind::Continuous).unwrap())
            .collect();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        let term = MultilinearTerm::new(xs, w).unwrap();
        let bounds = IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); 4]);
        let d = uniform_discretization(&bounds, 2).unwrap();
        let art = build_ppr(&mut m, &term, &d).unwrap();
        assert_eq!(art.lambda.len(), 81);
        assert_eq!(art.num_binaries(), 8);
    }

    #[test]
    fn ppr_single_partition_matches_hull() {
        let bounds = box2((0.5, 2.0), (-1.0, 3.0));
        let d = uniform_discretization(&bounds, 1).unwrap();
        let cfg = SolveConfig::default();
        let objectives = [
            (1.0, 0.0, 1.0),
            (-1.0, 0.5, 1.0),
            (0.3, -0.7, -1.0),
            (0.0, 0.0, 1.0),
            (2.0, 1.0, -2.5),
        ];
        for (c1, c2, cw) in objectives {
            let (mut ppr_m, term) = bilinear_model(&bounds);
            build_ppr(&mut ppr_m, &term, &d).unwrap();
            let (mut hull_m, hull_term) = bilinear_model(&bounds);
            build_convex_hull(&mut hull_m, &hull_term, &bounds).unwrap();
            for m in [&mut ppr_m, &mut hull_m] {
                let x1 = m.var_by_name("x1").unwrap();
                let x2 = m.var_by_name("x2").unwrap();
                let w = m.var_by_name("w").unwrap();
                m.set_objective(ObjSense::Minimize, vec![(x1, c1), (x2, c2), (w, cw)]).unwrap();
            }
            let a = solve_lp(&ppr_m, &cfg).unwrap().objective;
            let b = solve_lp(&hull_m, &cfg).unwrap().objective;
            assert!((a - b).abs() <= 1e-6 * 1f64.max(a.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn rppr_bilinear_base_case_equals_ppr() {
        let bounds = box2((1.0, 4.0), (2.0, 5.0));
        let d = uniform_discretization(&bounds, 3).unwrap();
        let (mut m1, t1) = bilinear_model(&bounds);
        build_ppr(&mut m1, &t1, &d).unwrap();
        let (mut m2, t2) = bilinear_model(&bounds);
        let tree = GroupingTree::left_deep(2).unwrap();
        let art = build_rppr(&mut m2, &t2, &tree, &d).unwrap();
        assert_eq!(art.nodes.len(), 1);
        assert_eq!(m1, m2);
    }

    #[test]
    fn rppr_node_grids() {
        // 3 variables, tree (a*b)*c, p=2: node (a,b) has a 3x3 grid, node
        // (aux,c) a 2x3 grid with the auxiliary unpartitioned.
        let mut m = MilpModel::new();
        let xs: Vec<VarRef> = (0..3)
            .map(|i| m.add_variable(&format!("x{}", i), 1.0, 2.0, VarKind::Continuous).unwrap())
            .collect();
        let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        let term = MultilinearTerm::new(xs, w).unwrap();
        let bounds = IntervalBox(vec![Interval::new(1.0, 2.0).unwrap(); 3]);
        let d = uniform_discretization(&bounds, 2).unwrap();
        let tree = GroupingTree::left_deep(3).unwrap();
        let art = build_rppr(&mut m, &term, &tree, &d).unwrap();
        assert_eq!(art.nodes.len(), 2);
        assert_eq!(art.nodes[0].ppr.lambda.len(), 9);
        assert_eq!(art.nodes[1].ppr.lambda.len(), 6);
        assert_eq!(art.root().output, w);
        // aux bounds: [1,2]*[1,2] = [1,4]
        assert_eq!(art.nodes[0].bounds, Interval { lo: 1.0, hi: 4.0 });
        assert!(art.nodes[1].left.is_aux && !art.nodes[1].right.is_aux);
    }

    #[test]
    fn rppr_unit_box_p1_matches_ppr_lp() {
        // Over [0,1]^4 with one partition, the recursive relaxation is as
        // tight as the hull, so LP optima agree for any linear objective.
        let bounds = IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); 4]);
        let d = uniform_discretization(&bounds, 1).unwrap();
        let cfg = SolveConfig::default();
        let objectives = [
            vec![0.3, -0.2, 0.9, 0.1, -1.0],
            vec![-0.5, -0.5, 0.2, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0, -2.0],
        ];
        for c in objectives {
            let build = |use_rppr: bool| {
                let mut m = MilpModel::new();
                let xs: Vec<VarRef> = (0..4)
                    .map(|i| {
                        m.add_variable(&format!("x{}", i), 0.0, 1.0, VarKind::Continuous).unwrap()
                    })
                    .collect();
                let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
                let term = MultilinearTerm::new(xs.clone(), w).unwrap();
                if use_rppr {
                    let tree = GroupingTree::left_deep(4).unwrap();
                    build_rppr(&mut m, &term, &tree, &d).unwrap();
                } else {
                    build_ppr(&mut m, &term, &d).unwrap();
                }
                let mut obj: Vec<(VarRef, f64)> =
                    xs.iter().zip(&c).map(|(&v, &ci)| (v, ci)).collect();
                obj.push((w, c[4]));
                m.set_objective(ObjSense::Minimize, obj).unwrap();
                m
            };
            let a = solve_lp(&build(false), &cfg).unwrap().objective;
            let b = solve_lp(&build(true), &cfg).unwrap().objective;
            assert!((a - b).abs() <= 1e-6 * 1f64.max(a.abs()), "ppr {} rppr {}", a, b);
        }
    }

    #[test]
    fn extract_active_partition_reads_indicators() {
        let (m, art) = fig1_fixture();
        let mut values = vec![0.0; m.num_vars()];
        values[art.y_ref(0, 1).0] = 1.0; // x1 in [2,3]
        values[art.y_ref(1, 2).0] = 1.0; // x2 in [3,4]
        let sol = SolutionVector { values, objective: 0.0, status: SolveStatus::Optimal };
        let active = extract_active_partition(&art, &sol).unwrap();
        assert_eq!(active.intervals, vec![1, 2]);
        assert_eq!(active.bounds.0[0], Interval { lo: 2.0, hi: 3.0 });
        assert_eq!(active.bounds.0[1], Interval { lo: 3.0, hi: 4.0 });

        // Two indicators above threshold on one axis is an error.
        let mut bad = sol.clone();
        bad.values[art.y_ref(0, 0).0] = 1.0;
        assert!(matches!(
            extract_active_partition(&art, &bad),
            Err(BuildError::Integrality { .. })
        ));
    }

    #[test]
    fn extract_whole_box_for_single_partition() {
        let bounds = box2((0.0, 2.0), (0.0, 2.0));
        let (mut m, term) = bilinear_model(&bounds);
        let d = uniform_discretization(&bounds, 1).unwrap();
        let art = build_ppr(&mut m, &term, &d).unwrap();
        let mut values = vec![0.0; m.num_vars()];
        values[art.y_ref(0, 0).0] = 1.0;
        values[art.y_ref(1, 0).0] = 1.0;
        let sol = SolutionVector { values, objective: 0.0, status: SolveStatus::Optimal };
        let active = extract_active_partition(&art, &sol).unwrap();
        assert_eq!(active.bounds.0, bounds.0);
    }
}
