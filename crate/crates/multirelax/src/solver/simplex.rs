//! Bounded-variable revised primal simplex with a dense basis inverse.
//!
//! Models at this scale are small and dense, so the basis inverse is kept
//! explicitly and updated by Gauss-Jordan pivots, with periodic
//! refactorization from scratch for numerical hygiene. Rows are equilibrated
//! by power-of-two scales so that tolerances behave on badly scaled
//! formulations (product coefficients here reach 1e11). Phase 1 uses
//! artificial columns; Bland's rule engages after a run of degenerate
//! pivots.

use crate::milp::{is_unbounded, MilpModel, ObjSense, RowSense};
use crate::solver::SolveConfig;

const REFACTOR_EVERY: usize = 100;
const DEGEN_EPS: f64 = 1e-10;
const DEGEN_LIMIT: usize = 5000;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum SxStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug)]
pub(crate) struct SxOutcome {
    pub status: SxStatus,
    /// Structural variable values (original units).
    pub x: Vec<f64>,
    /// Row duals in original (unscaled) units, phase-2 costs, internal
    /// minimize sense.
    pub duals: Vec<f64>,
    /// Dual objective in the model's original sense.
    pub dual_objective: f64,
}

#[derive(Debug)]
pub(crate) enum SxError {
    Numerical(String),
}

/// Preprocessed LP data shared across branch-and-bound nodes: equilibrated
/// structural columns, slack bounds, internal minimize costs.
///
/// Rows and columns are scaled by powers of two (exact in binary floating
/// point) so that every matrix entry is near unit magnitude; bounds passed
/// to [`LpCore::solve`] stay in original units and are scaled on entry, and
/// solutions are unscaled on exit.
pub(crate) struct LpCore {
    pub nstruct: usize,
    pub m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    pub base_lb: Vec<f64>,
    pub base_ub: Vec<f64>,
    slack_lb: Vec<f64>,
    slack_ub: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    /// +1 for minimize, -1 for maximize (internal objective = sign * model's).
    pub sign: f64,
}

fn pow2_inverse(maxabs: f64) -> f64 {
    if maxabs > 0.0 && maxabs.is_finite() {
        (2.0f64).powi(-maxabs.log2().round() as i32)
    } else {
        1.0
    }
}

impl LpCore {
    pub fn new(model: &MilpModel) -> Self {
        let nstruct = model.num_vars();
        let m = model.num_rows();
        let sign = match model.objective().sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };

        let mut row_scale = vec![1.0f64; m];
        for (i, row) in model.rows().iter().enumerate() {
            let maxabs = row.coeffs.iter().map(|(_, c)| c.abs()).fold(0.0f64, f64::max);
            row_scale[i] = pow2_inverse(maxabs);
        }

        let mut col_max = vec![0.0f64; nstruct];
        for (i, row) in model.rows().iter().enumerate() {
            for (v, c) in &row.coeffs {
                col_max[v.0] = col_max[v.0].max((c * row_scale[i]).abs());
            }
        }
        let col_scale: Vec<f64> = col_max.iter().map(|&mx| pow2_inverse(mx)).collect();

        let mut cols = vec![Vec::new(); nstruct];
        let mut rhs = vec![0.0; m];
        let mut slack_lb = vec![0.0; m];
        let mut slack_ub = vec![0.0; m];
        for (i, row) in model.rows().iter().enumerate() {
            for (v, c) in &row.coeffs {
                cols[v.0].push((i, c * row_scale[i] * col_scale[v.0]));
            }
            rhs[i] = row.rhs * row_scale[i];
            let (ls, us) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            slack_lb[i] = ls;
            slack_ub[i] = us;
        }

        // Scaled variable x^ = x / col_scale, so costs scale up.
        let mut cost = vec![0.0; nstruct];
        for (v, c) in &model.objective().coeffs {
            cost[v.0] = sign * c * col_scale[v.0];
        }

        let to_inf = |v: f64| {
            if is_unbounded(v) {
                if v < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            } else {
                v
            }
        };
        let base_lb = model.vars().iter().map(|v| to_inf(v.lb)).collect();
        let base_ub = model.vars().iter().map(|v| to_inf(v.ub)).collect();

        LpCore {
            nstruct,
            m,
            cols,
            base_lb,
            base_ub,
            slack_lb,
            slack_ub,
            cost,
            rhs,
            row_scale,
            col_scale,
            sign,
        }
    }

    pub fn solve(&self, lb_s: &[f64], ub_s: &[f64], cfg: &SolveConfig) -> Result<SxOutcome, SxError> {
        Simplex::new(self, lb_s, ub_s, cfg).run()
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum VState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free nonbasic, parked at zero.
    FreeZero,
}

struct Simplex<'a> {
    core: &'a LpCore,
    cfg: &'a SolveConfig,
    /// Bounds for structural + slack + artificial columns.
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    /// Artificial columns: (row, coefficient sign).
    arts: Vec<(usize, f64)>,
    n_base: usize,
    state: Vec<VState>,
    basic: Vec<usize>,
    xb: Vec<f64>,
    /// Dense basis inverse, row-major m x m.
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degen_run: usize,
    bland: bool,
    cost_scale: f64,
}

impl<'a> Simplex<'a> {
    fn new(core: &'a LpCore, lb_s: &[f64], ub_s: &[f64], cfg: &'a SolveConfig) -> Self {
        let m = core.m;
        let n_base = core.nstruct + m;
        let mut lb = Vec::with_capacity(n_base);
        let mut ub = Vec::with_capacity(n_base);
        lb.extend(lb_s.iter().zip(&core.col_scale).map(|(v, s)| v / s));
        ub.extend(ub_s.iter().zip(&core.col_scale).map(|(v, s)| v / s));
        lb.extend_from_slice(&core.slack_lb);
        ub.extend_from_slice(&core.slack_ub);
        let mut cost = vec![0.0; n_base];
        cost[..core.nstruct].copy_from_slice(&core.cost);
        let cost_scale = core.cost.iter().map(|c| c.abs()).fold(1.0f64, f64::max);
        Simplex {
            core,
            cfg,
            lb,
            ub,
            cost,
            arts: Vec::new(),
            n_base,
            state: Vec::new(),
            basic: vec![0; m],
            xb: vec![0.0; m],
            binv: vec![0.0; m * m],
            iterations: 0,
            since_refactor: 0,
            degen_run: 0,
            bland: false,
            cost_scale,
        }
    }

    fn n_all(&self) -> usize {
        self.n_base + self.arts.len()
    }

    fn for_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        if j < self.core.nstruct {
            for &(row, a) in &self.core.cols[j] {
                f(row, a);
            }
        } else if j < self.n_base {
            f(j - self.core.nstruct, 1.0);
        } else {
            let (row, s) = self.arts[j - self.n_base];
            f(row, s);
        }
    }

    fn nb_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VState::AtLower => self.lb[j],
            VState::AtUpper => self.ub[j],
            VState::FreeZero => 0.0,
            VState::Basic(r) => self.xb[r],
        }
    }

    /// Initial basis: slacks where the starting activity fits the slack
    /// bounds, artificials elsewhere.
    fn init_basis(&mut self) {
        let m = self.core.m;
        for j in 0..self.core.nstruct {
            let s = if self.lb[j].is_finite() {
                VState::AtLower
            } else if self.ub[j].is_finite() {
                VState::AtUpper
            } else {
                VState::FreeZero
            };
            self.state.push(s);
        }
        // Activities of structural part.
        let mut act = vec![0.0; m];
        for j in 0..self.core.nstruct {
            let v = self.nb_value(j);
            if v != 0.0 {
                for &(row, a) in &self.core.cols[j] {
                    act[row] += a * v;
                }
            }
        }
        self.state.resize(self.state.len() + m, VState::AtLower);
        for i in 0..m {
            let r = self.core.rhs[i] - act[i];
            let slack = self.core.nstruct + i;
            let (ls, us) = (self.lb[slack], self.ub[slack]);
            if r >= ls && r <= us {
                self.state[slack] = VState::Basic(i);
                self.basic[i] = slack;
                self.xb[i] = r;
            } else {
                let clamped = r.clamp(ls, us);
                self.state[slack] = if clamped == ls { VState::AtLower } else { VState::AtUpper };
                let resid = r - clamped;
                let art = self.n_all();
                self.arts.push((i, resid.signum()));
                self.lb.push(0.0);
                self.ub.push(f64::INFINITY);
                self.cost.push(0.0);
                self.state.push(VState::Basic(i));
                self.basic[i] = art;
                self.xb[i] = resid.abs();
            }
        }
        for i in 0..m {
            self.binv[i * m + i] = 1.0;
        }
        // Artificial basis columns carry the residual sign.
        for (k, &(row, s)) in self.arts.iter().enumerate() {
            if self.basic[row] == self.n_base + k {
                self.binv[row * m + row] = s;
            }
        }
    }

    fn refactorize(&mut self) -> Result<(), SxError> {
        let m = self.core.m;
        if m == 0 {
            return Ok(());
        }
        // Gauss-Jordan inversion of the basis matrix with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basic.iter().enumerate() {
            self.for_col(j, |row, v| a[row * m + r] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].abs();
            for r in k + 1..m {
                let v = a[r * m + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-12 {
                return Err(SxError::Numerical("singular basis".into()));
            }
            if p != k {
                for c in 0..m {
                    a.swap(k * m + c, p * m + c);
                    inv.swap(k * m + c, p * m + c);
                }
            }
            let piv = a[k * m + k];
            for c in 0..m {
                a[k * m + c] /= piv;
                inv[k * m + c] /= piv;
            }
            for r in 0..m {
                if r == k {
                    continue;
                }
                let f = a[r * m + k];
                if f != 0.0 {
                    for c in 0..m {
                        a[r * m + c] -= f * a[k * m + c];
                        inv[r * m + c] -= f * inv[k * m + c];
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basics();
        self.since_refactor = 0;
        Ok(())
    }

    /// xb = binv * (rhs - N x_N).
    fn recompute_basics(&mut self) {
        let m = self.core.m;
        let mut t = self.core.rhs.clone();
        for j in 0..self.n_all() {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let v = self.nb_value(j);
            if v != 0.0 {
                self.for_col(j, |row, a| t[row] -= a * v);
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * t[k];
            }
            self.xb[i] = s;
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.core.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let c = self.cost[self.basic[i]];
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[i * m + k];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut rc = self.cost[j];
        self.for_col(j, |row, a| rc -= y[row] * a);
        rc
    }

    /// One simplex phase with the current cost vector. Returns the status.
    fn iterate(&mut self) -> Result<SxStatus, SxError> {
        let m = self.core.m;
        let dtol = 1e-9 * self.cost_scale.max(1.0);
        let ptol = self.cfg.pivot_tol;
        let max_iters = 50_000 + 50 * (self.n_all() + m);
        loop {
            if self.iterations > max_iters {
                return Err(SxError::Numerical(format!(
                    "iteration limit {} exceeded",
                    max_iters
                )));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactorize()?;
            }
            let y = self.duals();

            // Pricing: Dantzig by default, Bland when a degenerate run is on.
            let mut enter: Option<(usize, f64, f64)> = None; // (j, rc, dir)
            let mut best_score = dtol;
            for j in 0..self.n_all() {
                let st = self.state[j];
                if matches!(st, VState::Basic(_)) || self.lb[j] == self.ub[j] {
                    continue;
                }
                let rc = self.reduced_cost(j, &y);
                let dir = match st {
                    VState::AtLower if rc < -dtol => 1.0,
                    VState::AtUpper if rc > dtol => -1.0,
                    VState::FreeZero if rc.abs() > dtol => -rc.signum(),
                    _ => continue,
                };
                if self.bland {
                    enter = Some((j, rc, dir));
                    break;
                }
                if rc.abs() > best_score {
                    best_score = rc.abs();
                    enter = Some((j, rc, dir));
                }
            }
            let (q, _rc, dir) = match enter {
                Some(e) => e,
                None => {
                    // Only trust optimality from a fresh factorization.
                    if self.since_refactor > 0 {
                        self.refactorize()?;
                        continue;
                    }
                    return Ok(SxStatus::Optimal);
                }
            };

            // Direction column d = binv * a_q.
            let mut d = vec![0.0; m];
            self.for_col(q, |row, a| {
                if a != 0.0 {
                    for i in 0..m {
                        d[i] += self.binv[i * m + row] * a;
                    }
                }
            });

            // Ratio test. Ties go to the larger pivot magnitude.
            let width = self.ub[q] - self.lb[q];
            let mut t_best = if width.is_finite() { width } else { f64::INFINITY };
            let mut leave: Option<(usize, VState, f64)> = None; // (row, bound hit, |d|)
            for i in 0..m {
                let rate = -dir * d[i];
                let bj = self.basic[i];
                let (bound, hit) = if rate < -ptol {
                    (self.lb[bj], VState::AtLower)
                } else if rate > ptol {
                    (self.ub[bj], VState::AtUpper)
                } else {
                    continue;
                };
                if !bound.is_finite() {
                    continue;
                }
                let t = ((bound - self.xb[i]) / rate).max(0.0);
                let accept = if t < t_best - 1e-12 {
                    true
                } else if t <= t_best + 1e-12 {
                    match &leave {
                        Some(l) => d[i].abs() > l.2,
                        None => t <= t_best,
                    }
                } else {
                    false
                };
                if accept {
                    t_best = t.min(t_best);
                    leave = Some((i, hit, d[i].abs()));
                }
            }

            if t_best.is_infinite() {
                return Ok(SxStatus::Unbounded);
            }
            self.iterations += 1;
            self.degen_run = if t_best <= DEGEN_EPS { self.degen_run + 1 } else { 0 };
            if self.degen_run > DEGEN_LIMIT {
                self.bland = true;
            }

            match leave {
                None => {
                    // Bound flip: entering jumps to its other bound.
                    for i in 0..m {
                        self.xb[i] += -dir * d[i] * t_best;
                    }
                    self.state[q] = match self.state[q] {
                        VState::AtLower => VState::AtUpper,
                        VState::AtUpper => VState::AtLower,
                        s => s,
                    };
                }
                Some((r, hit, _)) => {
                    let piv = d[r];
                    if piv.abs() < ptol {
                        // Stale inverse produced an unusable pivot; refresh
                        // and re-price before touching the basis.
                        self.refactorize()?;
                        continue;
                    }
                    let entering_val = self.nb_value(q) + dir * t_best;
                    for i in 0..m {
                        if i != r {
                            self.xb[i] += -dir * d[i] * t_best;
                        }
                    }
                    let leaving = self.basic[r];
                    self.state[leaving] = hit;
                    self.state[q] = VState::Basic(r);
                    self.basic[r] = q;
                    self.xb[r] = entering_val;
                    // Gauss-Jordan update of the inverse.
                    let inv_piv = 1.0 / piv;
                    for c in 0..m {
                        self.binv[r * m + c] *= inv_piv;
                    }
                    for i in 0..m {
                        if i != r && d[i] != 0.0 {
                            let f = d[i];
                            for c in 0..m {
                                self.binv[i * m + c] -= f * self.binv[r * m + c];
                            }
                        }
                    }
                    self.since_refactor += 1;
                }
            }
        }
    }

    fn run(mut self) -> Result<SxOutcome, SxError> {
        self.init_basis();

        if !self.arts.is_empty() {
            // Phase 1: minimize the sum of artificials.
            let saved_cost = self.cost.clone();
            for c in self.cost.iter_mut() {
                *c = 0.0;
            }
            for k in 0..self.arts.len() {
                self.cost[self.n_base + k] = 1.0;
            }
            let saved_scale = self.cost_scale;
            self.cost_scale = 1.0;
            let st = self.iterate()?;
            if st == SxStatus::Unbounded {
                return Err(SxError::Numerical("phase 1 unbounded".into()));
            }
            let p1_obj: f64 = (0..self.arts.len())
                .map(|k| self.nb_value(self.n_base + k))
                .sum();
            let rhs_norm = self.core.rhs.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
            if p1_obj > self.cfg.feas_tol * rhs_norm {
                return Ok(SxOutcome {
                    status: SxStatus::Infeasible,
                    x: Vec::new(),
                    duals: Vec::new(),
                    dual_objective: f64::NAN,
                });
            }
            self.pivot_out_artificials()?;
            // Freeze artificials at zero for phase 2.
            for k in 0..self.arts.len() {
                let j = self.n_base + k;
                self.lb[j] = 0.0;
                self.ub[j] = 0.0;
                if !matches!(self.state[j], VState::Basic(_)) {
                    self.state[j] = VState::AtLower;
                }
            }
            self.cost = saved_cost;
            self.cost_scale = saved_scale;
            self.degen_run = 0;
            self.bland = false;
        }

        let st = self.iterate()?;
        if st != SxStatus::Optimal {
            return Ok(SxOutcome {
                status: st,
                x: Vec::new(),
                duals: Vec::new(),
                dual_objective: f64::NAN,
            });
        }

        let mut x = vec![0.0; self.core.nstruct];
        for (j, v) in x.iter_mut().enumerate() {
            *v = self.nb_value(j) * self.core.col_scale[j];
        }

        let y = self.duals();
        let dtol = 1e-7 * self.cost_scale.max(1.0);
        let mut dual_obj: f64 = y.iter().zip(&self.core.rhs).map(|(yi, bi)| yi * bi).sum();
        for j in 0..self.n_all() {
            if matches!(self.state[j], VState::Basic(_)) || self.lb[j] == self.ub[j] {
                if self.lb[j] == self.ub[j] && !matches!(self.state[j], VState::Basic(_)) {
                    let rc = self.reduced_cost(j, &y);
                    dual_obj += rc * self.lb[j];
                }
                continue;
            }
            let rc = self.reduced_cost(j, &y);
            if rc > dtol && self.lb[j].is_finite() {
                dual_obj += rc * self.lb[j];
            } else if rc < -dtol && self.ub[j].is_finite() {
                dual_obj += rc * self.ub[j];
            }
        }
        let duals_orig: Vec<f64> =
            y.iter().zip(&self.core.row_scale).map(|(yi, s)| yi * s).collect();

        Ok(SxOutcome {
            status: SxStatus::Optimal,
            x,
            duals: duals_orig,
            dual_objective: self.core.sign * dual_obj,
        })
    }

    /// After phase 1, swap zero-valued basic artificials for structural or
    /// slack columns where possible; dependent rows keep their artificial
    /// pinned at zero.
    fn pivot_out_artificials(&mut self) -> Result<(), SxError> {
        let m = self.core.m;
        for r in 0..m {
            if self.basic[r] < self.n_base {
                continue;
            }
            // btran row r of the inverse
            let row: Vec<f64> = (0..m).map(|k| self.binv[r * m + k]).collect();
            let mut found = None;
            for j in 0..self.n_base {
                if matches!(self.state[j], VState::Basic(_)) {
                    continue;
                }
                let mut piv = 0.0;
                self.for_col(j, |rr, a| piv += row[rr] * a);
                if piv.abs() > 1e-7 {
                    found = Some((j, piv));
                    break;
                }
            }
            if let Some((j, _piv)) = found {
                // Degenerate basis exchange at step 0.
                let mut d = vec![0.0; m];
                self.for_col(j, |rr, a| {
                    if a != 0.0 {
                        for i in 0..m {
                            d[i] += self.binv[i * m + rr] * a;
                        }
                    }
                });
                let art = self.basic[r];
                let entering_val = self.nb_value(j);
                self.state[art] = VState::AtLower;
                self.state[j] = VState::Basic(r);
                self.basic[r] = j;
                self.xb[r] = entering_val;
                let inv_piv = 1.0 / d[r];
                for c in 0..m {
                    self.binv[r * m + c] *= inv_piv;
                }
                for i in 0..m {
                    if i != r && d[i] != 0.0 {
                        let f = d[i];
                        for c in 0..m {
                            self.binv[i * m + c] -= f * self.binv[r * m + c];
                        }
                    }
                }
                self.since_refactor += 1;
                self.recompute_basics();
            }
        }
        Ok(())
    }
}
