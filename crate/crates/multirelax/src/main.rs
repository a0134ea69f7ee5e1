//! Command-line front end: build/export formulations, solve relaxations,
//! run recovery pipelines, and reproduce the benchmark and randomized
//! studies.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use multirelax::harness::{
    benchmark, emit_boxplot_data, emit_csv, random_study, run_pipeline, ExperimentRow,
    PipelineConfig, RecoveryVariant, SolverKind, BENCHMARK_PARTITIONS,
};
use multirelax::lp_format::write_lp_file;
use multirelax::pipeline::{build_relaxation, Method};
use multirelax::problem::{build_instance_eq12, load_problem, ProblemSpec};
use multirelax::solver::SolveConfig;

#[derive(Parser)]
#[command(
    name = "multirelax",
    about = "Piecewise polyhedral relaxations and feasible-solution recovery for multilinear programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Instance file (JSON), or the built-in name `eq12`.
    #[arg(long)]
    instance: String,
    /// Relaxation method.
    #[arg(long, default_value = "ppr", value_parser = ["ppr", "rppr"])]
    method: String,
    /// Grouping pattern for `--method rppr`, e.g. "((a*b)*c)*d" over
    /// position letters; defaults to left-deep lexicographic.
    #[arg(long)]
    grouping: Option<String>,
    /// Solver backend; `external` runs the MULTIRELAX_SOLVER_CMD template
    /// (or the --solver-cmd override).
    #[arg(long, default_value = "internal", value_parser = ["internal", "external"])]
    solver: String,
    /// External solver command template with {lp_in} and {sol_out}.
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Time limit per solve in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Write the relaxation MILP as an LP file.
    Build {
        #[command(flatten)]
        common: CommonArgs,
        /// Uniform partitions per original variable.
        #[arg(long, default_value_t = 2)]
        partitions: usize,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the relaxation and print the bound.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Uniform partitions per original variable.
        #[arg(long, default_value_t = 2)]
        partitions: usize,
        /// Append the row to a CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: relax, extract, recover, report both bounds.
    Recover {
        #[command(flatten)]
        common: CommonArgs,
        /// Uniform partitions per original variable.
        #[arg(long, default_value_t = 2)]
        partitions: usize,
        /// Recovery variant.
        #[arg(long, default_value = "fa", value_parser = ["fa", "ff1", "ff2"])]
        recovery: String,
        /// Uniform auxiliary partitions for ff2 (default: induced lattice).
        #[arg(long)]
        aux_partitions: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep partition counts x (PPR + reference groupings) x recovery
    /// variants and write a CSV.
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated partition counts (default 2,4,6,8,10,12).
        #[arg(long)]
        partitions: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized-bounds study over a set of unit-box instances.
    RandomStudy {
        /// Instance files (JSON) with [0,1] variable bounds; repeatable.
        #[arg(long = "instance", required = true)]
        instances: Vec<String>,
        /// Base RNG seed; instance i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated partition counts (default 2,3).
        #[arg(long)]
        partitions: Option<String>,
        #[arg(long, default_value = "internal", value_parser = ["internal", "external"])]
        solver: String,
        #[arg(long)]
        solver_cmd: Option<String>,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        /// Box-plot summary CSV (per method and partition count).
        #[arg(long)]
        out: PathBuf,
        /// Also write the raw per-instance rows.
        #[arg(long)]
        rows_out: Option<PathBuf>,
    },
}

fn load_instance(name: &str) -> Result<ProblemSpec, String> {
    if name == "eq12" {
        return Ok(build_instance_eq12());
    }
    load_problem(name).map_err(|e| e.to_string())
}

fn parse_method(common: &CommonArgs) -> Method {
    match common.method.as_str() {
        "rppr" => Method::Rppr { grouping: common.grouping.clone() },
        _ => Method::Ppr,
    }
}

fn solver_kind(solver: &str, cmd: &Option<String>) -> Result<SolverKind, String> {
    if solver == "external" {
        if let Some(cmd) = cmd {
            return Ok(SolverKind::External(cmd.clone()));
        }
        return match SolverKind::from_env() {
            SolverKind::External(c) => Ok(SolverKind::External(c)),
            SolverKind::Internal => {
                Err("--solver external needs --solver-cmd or MULTIRELAX_SOLVER_CMD".into())
            }
        };
    }
    Ok(SolverKind::Internal)
}

fn pipeline_config(common: &CommonArgs) -> Result<PipelineConfig, String> {
    Ok(PipelineConfig {
        solve: SolveConfig { time_limit_s: common.time_limit, ..SolveConfig::default() },
        solver: solver_kind(&common.solver, &common.solver_cmd)?,
        aux_partitions: None,
    })
}

fn parse_sweep(sweep: &Option<String>, default: &[usize]) -> Result<Vec<usize>, String> {
    match sweep {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|tok| tok.trim().parse::<usize>().map_err(|_| format!("bad partition count `{}`", tok)))
            .collect(),
    }
}

fn print_row(row: &ExperimentRow) {
    println!(
        "instance={} method={} p={} solver={} status={} [{:.2}s]",
        row.instance, row.method, row.partitions, row.solver, row.status, row.wall_s
    );
    println!("  UB = {:.6e}", row.ub);
    if let Some(g) = row.ub_gap {
        println!("  ub_gap = {:.4}%  (table convention {:.4}%)", g, row.ub_gap_table.unwrap());
    }
    if let Some(lb) = row.lb {
        println!("  LB = {:.6e}  ({})", lb, row.recovery.clone().unwrap_or_default());
        if let Some(g) = row.lb_gap {
            println!("  lb_gap = {:.4}%", g);
        }
    }
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Build { common, partitions, out } => {
            let spec = load_instance(&common.instance)?;
            let build = build_relaxation(&spec, &parse_method(&common), partitions)
                .map_err(|e| e.to_string())?;
            let text = write_lp_file(&build.model);
            match out {
                Some(path) => std::fs::write(path, text).map_err(|e| e.to_string())?,
                None => print!("{}", text),
            }
        }
        Command::Solve { common, partitions, out } => {
            let spec = load_instance(&common.instance)?;
            let cfg = pipeline_config(&common)?;
            let row = run_pipeline(&spec, &parse_method(&common), partitions, None, &cfg)
                .map_err(|e| e.to_string())?;
            print_row(&row);
            if let Some(path) = out {
                emit_csv(&[row], path).map_err(|e| e.to_string())?;
            }
        }
        Command::Recover { common, partitions, recovery, aux_partitions, out } => {
            let spec = load_instance(&common.instance)?;
            let mut cfg = pipeline_config(&common)?;
            cfg.aux_partitions = aux_partitions;
            let variant = match recovery.as_str() {
                "ff1" => RecoveryVariant::Ff1,
                "ff2" => RecoveryVariant::Ff2,
                _ => RecoveryVariant::Fa,
            };
            let row = run_pipeline(
                &spec,
                &parse_method(&common),
                partitions,
                Some(variant),
                &cfg,
            )
            .map_err(|e| e.to_string())?;
            print_row(&row);
            if let Some(path) = out {
                emit_csv(&[row], path).map_err(|e| e.to_string())?;
            }
        }
        Command::Benchmark { common, partitions, out } => {
            let spec = load_instance(&common.instance)?;
            let cfg = pipeline_config(&common)?;
            let ps = parse_sweep(&partitions, &BENCHMARK_PARTITIONS)?;
            let rows = benchmark(&spec, &ps, partitions.is_none(), &cfg)
                .map_err(|e| e.to_string())?;
            for row in &rows {
                print_row(row);
            }
            emit_csv(&rows, &out).map_err(|e| e.to_string())?;
            eprintln!("wrote {}", out.display());
        }
        Command::RandomStudy {
            instances,
            seed,
            partitions,
            solver,
            solver_cmd,
            time_limit,
            out,
            rows_out,
        } => {
            let specs = instances
                .iter()
                .map(|path| load_instance(path))
                .collect::<Result<Vec<_>, _>>()?;
            let cfg = PipelineConfig {
                solve: SolveConfig { time_limit_s: time_limit, ..SolveConfig::default() },
                solver: solver_kind(&solver, &solver_cmd)?,
                aux_partitions: None,
            };
            let ps = parse_sweep(&partitions, &[2, 3])?;
            let rows = random_study(&specs, seed, &ps, &cfg).map_err(|e| e.to_string())?;
            emit_boxplot_data(&rows, &out).map_err(|e| e.to_string())?;
            eprintln!("wrote {}", out.display());
            if let Some(path) = rows_out {
                emit_csv(&rows, &path).map_err(|e| e.to_string())?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(msg) = run() {
        eprintln!("error: {}", msg);
        std::process::exit(1);
    }
}
