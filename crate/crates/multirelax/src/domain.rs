//! Domain model for multilinear terms: discretizations, vertex grids,
//! grouping trees, and interval arithmetic.
//!
//! Everything here is pure combinatorics shared by the formulation
//! builders. All types are immutable after construction. Grid enumeration
//! is mixed-radix with the first variable index varying fastest, so flat
//! index 0 is the all-lower corner and index 1 differs only in the first
//! coordinate.

use std::fmt;

use thiserror::Error;

use crate::milp::VarRef;

#[derive(Error, Debug)]
pub enum DomainError {
    #[error("multilinear term needs at least 2 distinct variables, got {0}")]
    TooFewVariables(usize),
    #[error("multilinear term has repeated variables")]
    RepeatedVariable,
    #[error("degenerate interval [{0}, {0}] cannot be discretized")]
    DegenerateInterval(f64),
    #[error("interval [{lo}, {hi}] has lo > hi")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("breakpoints must be strictly increasing with at least 2 points")]
    BadBreakpoints,
    #[error("partition count must be at least 1")]
    ZeroPartitions,
    #[error("value {0} is not a breakpoint of axis {1}")]
    NotABreakpoint(f64, usize),
    #[error("axis index {0} out of range")]
    AxisOutOfRange(usize),
    #[error("grouping parse error: {0}")]
    GroupingParse(String),
    #[error("grouping tree does not match term: {0}")]
    GroupingMismatch(String),
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, DomainError> {
        if lo > hi {
            return Err(DomainError::EmptyInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Tight interval hull of `{x*y : x in a, y in b}` via the four corner
/// products.
pub fn interval_product(a: Interval, b: Interval) -> Interval {
    let corners = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi];
    let mut lo = corners[0];
    let mut hi = corners[0];
    for &c in &corners[1..] {
        lo = lo.min(c);
        hi = hi.max(c);
    }
    Interval { lo, hi }
}

/// Per-variable box of intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBox(pub Vec<Interval>);

impl IntervalBox {
    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

/// Sorted breakpoints of one variable, first = lower bound, last = upper
/// bound. A variable with `n` breakpoints has `n - 1` partitions.
#[derive(Clone, Debug, PartialEq)]
pub struct Breakpoints(Vec<f64>);

impl Breakpoints {
    pub fn new(values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() < 2 || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DomainError::BadBreakpoints);
        }
        Ok(Breakpoints(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn partitions(&self) -> usize {
        self.0.len() - 1
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.0[0], hi: *self.0.last().unwrap() }
    }

    /// The k-th partition `[s_k, s_{k+1}]`, 0-based.
    pub fn partition(&self, k: usize) -> Interval {
        Interval { lo: self.0[k], hi: self.0[k + 1] }
    }

    /// Exact match against stored breakpoint values; breakpoints are
    /// constructed once and never re-derived, so bitwise equality is the
    /// contract.
    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.0.iter().position(|&v| v == r)
    }
}

/// Uniform breakpoints over an interval: `p + 1` equally spaced points
/// including both endpoints.
pub fn uniform_breakpoints(iv: Interval, p: usize) -> Result<Breakpoints, DomainError> {
    if p == 0 {
        return Err(DomainError::ZeroPartitions);
    }
    if iv.lo == iv.hi {
        return Err(DomainError::DegenerateInterval(iv.lo));
    }
    let mut points = Vec::with_capacity(p + 1);
    for k in 0..=p {
        let v = if k == p { iv.hi } else { iv.lo + iv.width() * (k as f64) / (p as f64) };
        points.push(v);
    }
    Breakpoints::new(points)
}

/// Per-variable discretization of a term's domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretization {
    axes: Vec<Breakpoints>,
}

impl Discretization {
    pub fn new(axes: Vec<Breakpoints>) -> Self {
        Discretization { axes }
    }

    pub fn axes(&self) -> &[Breakpoints] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Breakpoints {
        &self.axes[i]
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn grid(&self) -> VertexGrid {
        VertexGrid::new(self.axes.iter().map(|a| a.len()).collect())
    }

    pub fn bounds(&self) -> IntervalBox {
        IntervalBox(self.axes.iter().map(|a| a.interval()).collect())
    }
}

/// Uniform discretization with `p` partitions per variable.
pub fn uniform_discretization(bounds: &IntervalBox, p: usize) -> Result<Discretization, DomainError> {
    let axes = bounds.0.iter().map(|iv| uniform_breakpoints(*iv, p)).collect::<Result<_, _>>()?;
    Ok(Discretization::new(axes))
}

/// Mixed-radix index space over a grid of shape `(n_1, ..., n_d)`, first
/// index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexGrid {
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl VertexGrid {
    pub fn new(shape: Vec<usize>) -> Self {
        let mut strides = Vec::with_capacity(shape.len());
        let mut acc = 1;
        for &n in &shape {
            strides.push(acc);
            acc *= n;
        }
        VertexGrid { shape, strides, len: acc }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn decode(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.len);
        let mut rest = flat;
        self.shape
            .iter()
            .map(|&n| {
                let k = rest % n;
                rest /= n;
                k
            })
            .collect()
    }

    pub fn encode(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.shape.len());
        coords.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Coordinate of `flat` along `axis` without a full decode.
    pub fn coord(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.shape[axis]
    }
}

/// All grid points of a discretization in flat-index order.
pub fn enumerate_vertices(d: &Discretization) -> Vec<Vec<f64>> {
    let grid = d.grid();
    (0..grid.len())
        .map(|s| {
            let coords = grid.decode(s);
            coords.iter().zip(d.axes()).map(|(&k, bp)| bp.values()[k]).collect()
        })
        .collect()
}

/// Flat indices of grid points whose `axis`-th coordinate equals the
/// breakpoint `r`. Errors if `r` is not a stored breakpoint.
pub fn mu(d: &Discretization, axis: usize, r: f64) -> Result<Vec<usize>, DomainError> {
    if axis >= d.dims() {
        return Err(DomainError::AxisOutOfRange(axis));
    }
    let k = d.axis(axis).index_of(r).ok_or(DomainError::NotABreakpoint(r, axis))?;
    let grid = d.grid();
    Ok((0..grid.len()).filter(|&s| grid.coord(s, axis) == k).collect())
}

/// Product of the coordinates of a grid point.
pub fn phi(point: &[f64]) -> f64 {
    point.iter().product()
}

/// A product of distinct model variables with a lifted output variable.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearTerm {
    vars: Vec<VarRef>,
    output: VarRef,
}

impl MultilinearTerm {
    pub fn new(vars: Vec<VarRef>, output: VarRef) -> Result<Self, DomainError> {
        if vars.len() < 2 {
            return Err(DomainError::TooFewVariables(vars.len()));
        }
        let mut seen = vars.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(DomainError::RepeatedVariable);
        }
        Ok(MultilinearTerm { vars, output })
    }

    pub fn vars(&self) -> &[VarRef] {
        &self.vars
    }

    pub fn output(&self) -> VarRef {
        self.output
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }
}

/// Node of a grouping tree: a leaf is a position into the term's variable
/// list, a pair is a bilinear grouping with a dense auxiliary id (assigned
/// in post-order, root last).
#[derive(Clone, Debug, PartialEq)]
pub enum GroupNode {
    Leaf(usize),
    Pair { left: Box<GroupNode>, right: Box<GroupNode>, aux: usize },
}

impl GroupNode {
    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            GroupNode::Leaf(i) => out.push(*i),
            GroupNode::Pair { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }
}

/// Binary grouping of a term's variables into nested bilinear products.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupingTree {
    root: GroupNode,
    leaves: usize,
    pairs: usize,
}

impl GroupingTree {
    pub fn root(&self) -> &GroupNode {
        &self.root
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs
    }

    /// Left-deep lexicographic grouping `((v0*v1)*v2)*...`.
    pub fn left_deep(arity: usize) -> Result<Self, DomainError> {
        if arity < 2 {
            return Err(DomainError::TooFewVariables(arity));
        }
        let mut node = GroupNode::Pair {
            left: Box::new(GroupNode::Leaf(0)),
            right: Box::new(GroupNode::Leaf(1)),
            aux: 0,
        };
        for (next, leaf) in (2..arity).enumerate() {
            node = GroupNode::Pair {
                left: Box::new(node),
                right: Box::new(GroupNode::Leaf(leaf)),
                aux: next + 1,
            };
        }
        Ok(GroupingTree { root: node, leaves: arity, pairs: arity - 1 })
    }

    /// Canonical printer: root pair without outer parentheses, inner pairs
    /// fully parenthesized. `parse_grouping(format(t)) == t`.
    pub fn format(&self, names: &[String]) -> String {
        fn fmt(node: &GroupNode, names: &[String], top: bool) -> String {
            match node {
                GroupNode::Leaf(i) => names[*i].clone(),
                GroupNode::Pair { left, right, .. } => {
                    let inner =
                        format!("{}*{}", fmt(left, names, false), fmt(right, names, false));
                    if top {
                        inner
                    } else {
                        format!("({})", inner)
                    }
                }
            }
        }
        fmt(&self.root, names, true)
    }
}

/// Parse a fully parenthesized binary product (outer parentheses optional)
/// into a grouping tree over `variables`. Every variable must appear
/// exactly once.
pub fn parse_grouping(expr: &str, variables: &[String]) -> Result<GroupingTree, DomainError> {
    #[derive(Clone, Debug, PartialEq)]
    enum T {
        Ident(String),
        Open,
        Close,
        Star,
    }
    let mut toks = Vec::new();
    let bytes = expr.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                toks.push(T::Open);
                i += 1;
            }
            ')' => {
                toks.push(T::Close);
                i += 1;
            }
            '*' => {
                toks.push(T::Star);
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push(T::Ident(expr[start..i].to_string()));
            }
            other => {
                return Err(DomainError::GroupingParse(format!("unexpected character `{}`", other)))
            }
        }
    }

    // Raw tree without aux ids; ids are assigned post-order afterwards.
    enum Raw {
        Leaf(usize),
        Pair(Box<Raw>, Box<Raw>),
    }

    struct P<'a> {
        toks: &'a [T],
        pos: usize,
        vars: &'a [String],
    }
    impl P<'_> {
        fn peek(&self) -> Option<&T> {
            self.toks.get(self.pos)
        }
        fn primary(&mut self) -> Result<Raw, DomainError> {
            match self.peek() {
                Some(T::Ident(name)) => {
                    let name = name.clone();
                    self.pos += 1;
                    let idx = self
                        .vars
                        .iter()
                        .position(|v| *v == name)
                        .ok_or_else(|| DomainError::GroupingParse(format!("unknown variable `{}`", name)))?;
                    Ok(Raw::Leaf(idx))
                }
                Some(T::Open) => {
                    self.pos += 1;
                    let node = self.pair()?;
                    match self.peek() {
                        Some(T::Close) => {
                            self.pos += 1;
                            Ok(node)
                        }
                        _ => Err(DomainError::GroupingParse("expected `)`".into())),
                    }
                }
                _ => Err(DomainError::GroupingParse("expected variable or `(`".into())),
            }
        }
        fn pair(&mut self) -> Result<Raw, DomainError> {
            let left = self.primary()?;
            match self.peek() {
                Some(T::Star) => {
                    self.pos += 1;
                    let right = self.primary()?;
                    Ok(Raw::Pair(Box::new(left), Box::new(right)))
                }
                _ => Err(DomainError::GroupingParse("expected `*`".into())),
            }
        }
        /// Top level: a primary optionally followed by `* primary`.
        fn top(&mut self) -> Result<Raw, DomainError> {
            let left = self.primary()?;
            match self.peek() {
                Some(T::Star) => {
                    self.pos += 1;
                    let right = self.primary()?;
                    Ok(Raw::Pair(Box::new(left), Box::new(right)))
                }
                None => Ok(left),
                _ => Err(DomainError::GroupingParse("unexpected trailing tokens".into())),
            }
        }
    }

    let mut p = P { toks: &toks, pos: 0, vars: variables };
    let raw = p.top()?;
    if p.pos != toks.len() {
        return Err(DomainError::GroupingParse("unexpected trailing tokens".into()));
    }

    fn assign(raw: &Raw, counter: &mut usize) -> GroupNode {
        match raw {
            Raw::Leaf(i) => GroupNode::Leaf(*i),
            Raw::Pair(l, r) => {
                let left = assign(l, counter);
                let right = assign(r, counter);
                let aux = *counter;
                *counter += 1;
                GroupNode::Pair { left: Box::new(left), right: Box::new(right), aux }
            }
        }
    }
    let mut counter = 0;
    let root = assign(&raw, &mut counter);

    let mut leaves = Vec::new();
    root.collect_leaves(&mut leaves);
    let mut sorted = leaves.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != leaves.len() {
        return Err(DomainError::GroupingParse("variable used more than once".into()));
    }
    if sorted.len() != variables.len() {
        return Err(DomainError::GroupingParse("not all variables are used".into()));
    }
    if counter != variables.len() - 1 {
        return Err(DomainError::GroupingParse("grouping is not a binary product".into()));
    }
    Ok(GroupingTree { root, leaves: variables.len(), pairs: counter })
}

/// Position names `a, b, c, ...` for grouping patterns over a term's
/// variables in order.
pub fn position_names(arity: usize) -> Result<Vec<String>, DomainError> {
    if arity > 26 {
        return Err(DomainError::GroupingParse("terms with more than 26 variables need explicit names".into()));
    }
    Ok((0..arity).map(|i| ((b'a' + i as u8) as char).to_string()).collect())
}
