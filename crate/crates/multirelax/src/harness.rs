//! End-to-end pipelines (relax, extract, recover, gaps), the benchmark
//! sweep over partition counts and groupings, the randomized-bounds study,
//! and deterministic CSV emission.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::milp::SolveStatus;
use crate::pipeline::{build_relaxation, Method, PipelineError, RelaxationBuild};
use crate::problem::{corner_opt, randomize_bounds, ProblemError, ProblemSpec};
use crate::recovery::{
    grid_recovery_binaries, lb_gap, recover_fa, recover_ff1, recover_ff2, ub_gap, ub_gap_table,
    RecoveryError, RecoveryResult,
};
use crate::solver::{solve_external, solve_milp, SolveConfig, SolveError};

/// Grouping patterns for 4-variable terms used by the benchmark sweep, in
/// the order the reference table prints them.
pub const BENCHMARK_GROUPINGS: [&str; 3] = ["(a*(b*c))*d", "((a*b)*c)*d", "a*(b*(c*d))"];

/// Partition counts the benchmark sweeps by default.
pub const BENCHMARK_PARTITIONS: [usize; 6] = [2, 4, 6, 8, 10, 12];

/// Largest partition count the internal solver is used for in sweeps;
/// larger rows need an external solver.
pub const INTERNAL_SOLVER_MAX_P: usize = 4;

/// Largest grid-recovery MILP (edge binaries) the sweep hands to the
/// internal solver; bigger recovery models are marked `skipped`.
pub const INTERNAL_SOLVER_MAX_EDGES: usize = 1500;

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("relaxation is {0}; no bound to report")]
    NoBound(SolveStatus),
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RecoveryVariant {
    Fa,
    Ff1,
    Ff2,
}

impl fmt::Display for RecoveryVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecoveryVariant::Fa => write!(f, "fa"),
            RecoveryVariant::Ff1 => write!(f, "ff1"),
            RecoveryVariant::Ff2 => write!(f, "ff2"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub enum SolverKind {
    #[default]
    Internal,
    /// Command template with `{lp_in}` / `{sol_out}` placeholders.
    External(String),
}

impl SolverKind {
    fn label(&self) -> &'static str {
        match self {
            SolverKind::Internal => "internal",
            SolverKind::External(_) => "external",
        }
    }

    /// Reads `MULTIRELAX_SOLVER_CMD` when set, otherwise internal.
    pub fn from_env() -> Self {
        match std::env::var("MULTIRELAX_SOLVER_CMD") {
            Ok(cmd) if !cmd.trim().is_empty() => SolverKind::External(cmd),
            _ => SolverKind::Internal,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineConfig {
    pub solve: SolveConfig,
    pub solver: SolverKind,
    /// `Ff2` auxiliary discretization override (uniform intervals); the
    /// default is the induced product lattice.
    pub aux_partitions: Option<usize>,
}

/// One experiment outcome. Gaps are only present when the instance has a
/// known optimum; `ub_gap`/`lb_gap` follow the (UB-OPT)/UB and (OPT-LB)/LB
/// formulas, `ub_gap_table` the (UB-OPT)/OPT convention of the reference
/// tables.
#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub instance: String,
    pub method: String,
    pub recovery: Option<String>,
    pub partitions: usize,
    pub solver: String,
    pub status: String,
    pub ub: f64,
    pub lb: Option<f64>,
    pub ub_gap: Option<f64>,
    pub lb_gap: Option<f64>,
    pub ub_gap_table: Option<f64>,
    /// Wall time of the relaxation + recovery solves. Not emitted to CSV
    /// (CSV output is byte-identical across reruns).
    pub wall_s: f64,
}

/// Relaxation bound via the configured solver. Returns (UB, status label,
/// incumbent solution if integer-feasible).
fn solve_relaxation(
    build: &RelaxationBuild,
    cfg: &PipelineConfig,
) -> Result<(f64, String, Option<crate::milp::SolutionVector>), HarnessError> {
    match &cfg.solver {
        SolverKind::Internal => {
            let res = solve_milp(&build.model, &cfg.solve)?;
            match res.status {
                SolveStatus::Optimal => {
                    let sol = res.solution()?.clone();
                    Ok((sol.objective, "optimal".into(), Some(sol)))
                }
                SolveStatus::Limit => {
                    Ok((res.stats.best_bound, "limit".into(), res.incumbent))
                }
                other => Err(HarnessError::NoBound(other)),
            }
        }
        SolverKind::External(template) => {
            let sol = solve_external(&build.model, template, &cfg.solve)?;
            Ok((sol.objective, "optimal".into(), Some(sol)))
        }
    }
}

/// Run one recovery variant. A recovery MILP that is infeasible (with no
/// fallback left) or hits a limit without an incumbent yields `Ok(None)`
/// with a note, so sweeps record a bound-only row instead of aborting.
fn run_recovery(
    spec: &ProblemSpec,
    build: &RelaxationBuild,
    relax_sol: Option<&crate::milp::SolutionVector>,
    variant: RecoveryVariant,
    cfg: &PipelineConfig,
) -> Result<(Option<RecoveryResult>, Option<&'static str>), HarnessError> {
    let outcome = match variant {
        RecoveryVariant::Fa => {
            let sol = relax_sol.ok_or_else(|| {
                HarnessError::Other("Fa recovery needs an integer-feasible relaxation".into())
            })?;
            recover_fa(spec, build, sol, &cfg.solve)
        }
        RecoveryVariant::Ff1 => recover_ff1(spec, build, &cfg.solve),
        RecoveryVariant::Ff2 => recover_ff2(spec, build, cfg.aux_partitions, &cfg.solve),
    };
    match outcome {
        Ok(r) => Ok((Some(r), None)),
        Err(RecoveryError::Infeasible) => Ok((None, Some("infeasible"))),
        Err(RecoveryError::NoIncumbent) => Ok((None, Some("limit"))),
        Err(e) => Err(e.into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    spec: &ProblemSpec,
    method: &Method,
    p: usize,
    recovery: Option<(RecoveryVariant, &(Option<RecoveryResult>, Option<&'static str>))>,
    ub: f64,
    status: &str,
    solver: &str,
    wall_s: f64,
) -> ExperimentRow {
    let lb = recovery.and_then(|(_, (r, _))| r.as_ref().map(|r| r.objective));
    let (ub_g, lb_g, ub_gt) = match spec.opt {
        Some(opt) => (
            Some(ub_gap(ub, opt)),
            lb.map(|l| lb_gap(opt, l)),
            Some(ub_gap_table(ub, opt)),
        ),
        None => (None, None, None),
    };
    ExperimentRow {
        instance: spec.name.clone(),
        method: method.id(),
        recovery: recovery.map(|(v, (r, note))| match (r, note) {
            (Some(r), _) if r.used_fallback => format!("{}(ff1-fallback)", v),
            (_, Some(note)) => format!("{}({})", v, note),
            _ => v.to_string(),
        }),
        partitions: p,
        solver: solver.into(),
        status: status.into(),
        ub,
        lb,
        ub_gap: ub_g,
        lb_gap: lb_g,
        ub_gap_table: ub_gt,
        wall_s,
    }
}

/// Relax with `method`/`p`, optionally recover, and report bounds and gaps.
pub fn run_pipeline(
    spec: &ProblemSpec,
    method: &Method,
    p: usize,
    recovery: Option<RecoveryVariant>,
    cfg: &PipelineConfig,
) -> Result<ExperimentRow, HarnessError> {
    let start = Instant::now();
    let build = build_relaxation(spec, method, p)?;
    let (ub, status, relax_sol) = solve_relaxation(&build, cfg)?;
    // A limit without an incumbent still yields a valid bound-only row.
    let rec = match recovery {
        Some(RecoveryVariant::Fa) if relax_sol.is_none() => None,
        Some(v) => Some((v, run_recovery(spec, &build, relax_sol.as_ref(), v, cfg)?)),
        None => None,
    };
    Ok(make_row(
        spec,
        method,
        p,
        rec.as_ref().map(|(v, r)| (*v, r)),
        ub,
        &status,
        cfg.solver.label(),
        start.elapsed().as_secs_f64(),
    ))
}

/// One relaxation solve shared across several recovery variants; emits one
/// row per variant (or a single relaxation-only row for an empty list).
pub fn run_pipeline_multi(
    spec: &ProblemSpec,
    method: &Method,
    p: usize,
    variants: &[RecoveryVariant],
    cfg: &PipelineConfig,
) -> Result<Vec<ExperimentRow>, HarnessError> {
    let start = Instant::now();
    let build = build_relaxation(spec, method, p)?;
    let (ub, status, relax_sol) = solve_relaxation(&build, cfg)?;
    if variants.is_empty() {
        return Ok(vec![make_row(
            spec,
            method,
            p,
            None,
            ub,
            &status,
            cfg.solver.label(),
            start.elapsed().as_secs_f64(),
        )]);
    }
    let mut rows = Vec::with_capacity(variants.len());
    for &v in variants {
        if v == RecoveryVariant::Fa && relax_sol.is_none() {
            rows.push(make_row(
                spec,
                method,
                p,
                None,
                ub,
                &status,
                cfg.solver.label(),
                start.elapsed().as_secs_f64(),
            ));
            continue;
        }
        let rec = run_recovery(spec, &build, relax_sol.as_ref(), v, cfg)?;
        rows.push(make_row(
            spec,
            method,
            p,
            Some((v, &rec)),
            ub,
            &status,
            cfg.solver.label(),
            start.elapsed().as_secs_f64(),
        ));
    }
    Ok(rows)
}

/// Benchmark sweep: PPR plus the three reference groupings, each with its
/// applicable recovery variants, over the given partition counts. With
/// `guard_internal`, rows beyond the internal-solver cap are emitted as
/// `skipped` instead of being solved (the default sweep uses this; an
/// explicitly requested partition list runs as asked).
pub fn benchmark(
    spec: &ProblemSpec,
    partitions: &[usize],
    guard_internal: bool,
    cfg: &PipelineConfig,
) -> Result<Vec<ExperimentRow>, HarnessError> {
    let mut methods = vec![Method::Ppr];
    for g in BENCHMARK_GROUPINGS {
        methods.push(Method::rppr(g));
    }
    let mut rows = Vec::new();
    for &p in partitions {
        for method in &methods {
            let internal_ok = p <= INTERNAL_SOLVER_MAX_P || !guard_internal;
            let effective = match (&cfg.solver, internal_ok) {
                (SolverKind::Internal, false) => None,
                _ => Some(cfg.clone()),
            };
            let all_variants: Vec<RecoveryVariant> = match method {
                Method::Ppr => vec![RecoveryVariant::Fa, RecoveryVariant::Ff1],
                Method::Rppr { .. } => {
                    vec![RecoveryVariant::Fa, RecoveryVariant::Ff1, RecoveryVariant::Ff2]
                }
            };
            let skip_row = |recovery: Option<String>| ExperimentRow {
                instance: spec.name.clone(),
                method: method.id(),
                recovery,
                partitions: p,
                solver: "none".into(),
                status: "skipped".into(),
                ub: f64::NAN,
                lb: None,
                ub_gap: None,
                lb_gap: None,
                ub_gap_table: None,
                wall_s: 0.0,
            };
            match effective {
                Some(cfg) => {
                    // Grid recoveries blow up exponentially with p; hand
                    // oversized ones to an external solver only.
                    let sizing = build_relaxation(spec, method, p)?;
                    let mut variants = Vec::new();
                    let mut skipped = Vec::new();
                    for v in all_variants {
                        let fits = match (&cfg.solver, v) {
                            (SolverKind::External(_), _) | (_, RecoveryVariant::Fa) => true,
                            (SolverKind::Internal, v) => {
                                grid_recovery_binaries(
                                    &sizing,
                                    v == RecoveryVariant::Ff2,
                                    cfg.aux_partitions,
                                )? <= INTERNAL_SOLVER_MAX_EDGES
                            }
                        };
                        if fits {
                            variants.push(v);
                        } else {
                            skipped.push(v);
                        }
                    }
                    rows.extend(run_pipeline_multi(spec, method, p, &variants, &cfg)?);
                    for v in skipped {
                        rows.push(skip_row(Some(v.to_string())));
                    }
                }
                None => rows.push(skip_row(None)),
            }
        }
    }
    Ok(rows)
}

/// Randomized-bounds study: per instance, redraw bounds (lower in
/// [0.1, 0.2], upper in [0.9, 1.0], seeded per instance index), relax with
/// PPR and lexicographic R-PPR for each partition count, and report gaps
/// against the randomized instance's corner-enumeration optimum (falling
/// back to the instance's stated optimum when enumeration is unavailable).
pub fn random_study(
    instances: &[ProblemSpec],
    seed: u64,
    partitions: &[usize],
    cfg: &PipelineConfig,
) -> Result<Vec<ExperimentRow>, HarnessError> {
    let mut rows = Vec::new();
    for (idx, spec) in instances.iter().enumerate() {
        let mut randomized = randomize_bounds(spec, seed.wrapping_add(idx as u64))?;
        randomized.opt = corner_opt(&randomized).or(spec.opt);
        randomized.name = format!("{}@{}", spec.name, seed.wrapping_add(idx as u64));
        for &p in partitions {
            for method in [Method::Ppr, Method::Rppr { grouping: None }] {
                rows.extend(run_pipeline_multi(&randomized, &method, p, &[], cfg)?);
            }
        }
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>, precision: Option<usize>) -> String {
    match (v, precision) {
        (Some(v), Some(p)) => format!("{:.*}", p, v),
        (Some(v), None) => format!("{}", v),
        (None, _) => String::new(),
    }
}

/// Deterministic CSV: header plus one line per row. Byte-identical across
/// reruns of the same configuration (wall time is deliberately excluded).
pub fn emit_csv(rows: &[ExperimentRow], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::Other("no rows to emit".into()));
    }
    let mut out = String::from(
        "instance,method,recovery,partitions,solver,status,ub,lb,ub_gap,lb_gap,ub_gap_table\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.instance,
            r.method,
            r.recovery.clone().unwrap_or_default(),
            r.partitions,
            r.solver,
            r.status,
            if r.ub.is_nan() { String::new() } else { format!("{}", r.ub) },
            fmt_opt(r.lb, None),
            fmt_opt(r.ub_gap, Some(4)),
            fmt_opt(r.lb_gap, Some(4)),
            fmt_opt(r.ub_gap_table, Some(4)),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

/// Per-(method, partitions) five-number summaries of the `ub_gap` column,
/// as a CSV for box plotting.
pub fn emit_boxplot_data(rows: &[ExperimentRow], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::Other("no rows to emit".into()));
    }
    let mut groups: std::collections::BTreeMap<(String, usize), Vec<f64>> =
        std::collections::BTreeMap::new();
    for r in rows {
        if let Some(g) = r.ub_gap {
            groups.entry((r.method.clone(), r.partitions)).or_default().push(g);
        }
    }
    let mut out = String::from("method,partitions,count,min,q1,median,q3,max\n");
    for ((method, p), mut gaps) in groups {
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            method,
            p,
            gaps.len(),
            gaps[0],
            quantile(&gaps, 0.25),
            quantile(&gaps, 0.5),
            quantile(&gaps, 0.75),
            gaps[gaps.len() - 1],
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bilinear_toy() -> ProblemSpec {
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
    fn toy_pipeline_has_zero_gaps() {
        let spec = bilinear_toy();
        let cfg = PipelineConfig::default();
        let row =
            run_pipeline(&spec, &Method::Ppr, 1, Some(RecoveryVariant::Fa), &cfg).unwrap();
        assert_eq!(row.status, "optimal");
        assert!(row.ub_gap.unwrap().abs() < 1e-6, "{:?}", row.ub_gap);
        assert!(row.lb_gap.unwrap().abs() < 1e-6, "{:?}", row.lb_gap);
    }

    #[test]
    fn quantiles_of_small_sets() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.0);
        assert_eq!(quantile(&s, 0.25), 1.0);
        assert_eq!(quantile(&s, 0.75), 3.0);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn csv_emission_is_deterministic() {
        let spec = bilinear_toy();
        let cfg = PipelineConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let run = || {
            let rows = vec![
                run_pipeline(&spec, &Method::Ppr, 2, Some(RecoveryVariant::Fa), &cfg).unwrap(),
                run_pipeline(&spec, &Method::Rppr { grouping: None }, 2, None, &cfg).unwrap(),
            ];
            let path = dir.path().join("rows.csv");
            emit_csv(&rows, &path).unwrap();
            std::fs::read(&path).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 3); // header + 2 rows
        assert!(text.lines().nth(1).unwrap().starts_with("toy,ppr,fa,2,internal,optimal,"));
    }

    #[test]
    fn boxplot_data_for_identical_gaps_has_zero_iqr() {
        let spec = bilinear_toy();
        let cfg = PipelineConfig::default();
        let row = run_pipeline(&spec, &Method::Ppr, 1, None, &cfg).unwrap();
        let rows = vec![row.clone(), row.clone(), row];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.csv");
        emit_boxplot_data(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let line = text.lines().nth(1).unwrap();
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[2], "3");
        assert_eq!(cells[4], cells[6], "q1 != q3: {}", line);
    }

    #[test]
    fn empty_rows_are_rejected() {
        assert!(emit_csv(&[], "/tmp/never.csv").is_err());
        assert!(emit_boxplot_data(&[], "/tmp/never.csv").is_err());
    }
}
