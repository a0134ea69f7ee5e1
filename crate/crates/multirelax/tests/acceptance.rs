//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values (run with `--nocapture` to see them all).
//!
//! Reference-table cells are asserted through the `(UB-OPT)/OPT` table
//! convention (`ub_gap_table`): the published tables follow that
//! denominator, while the standalone gap formulas follow the stated
//! `(UB-OPT)/UB` / `(OPT-LB)/LB` definitions (criterion 4 checks one of
//! those directly).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multirelax::domain::{
    uniform_discretization, Breakpoints, GroupingTree, Interval, IntervalBox, MultilinearTerm,
};
use multirelax::harness::{run_pipeline, PipelineConfig, RecoveryVariant, SolverKind};
use multirelax::milp::{MilpModel, ObjSense, SolveStatus, VarKind, VarRef, INF};
use multirelax::pipeline::{build_relaxation, Method};
use multirelax::problem::{build_instance_eq12, ProblemSpec};
use multirelax::recovery::{recover_fa, ub_gap, PRODUCT_TOL};
use multirelax::relax::{build_convex_hull, build_mccormick, build_ppr, build_rppr};
use multirelax::solver::{solve_lp, solve_milp, SolveConfig};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs().max(b.abs()))
}

#[test]
fn criterion_01_eq12_ppr_p2_gaps() {
    let spec = build_instance_eq12();
    let cfg = PipelineConfig::default();
    let row = run_pipeline(&spec, &Method::Ppr, 2, Some(RecoveryVariant::Fa), &cfg).unwrap();
    assert_eq!(row.status, "optimal");
    let ub_gap_tbl = row.ub_gap_table.unwrap();
    let lb_gap = row.lb_gap.unwrap();
    assert!(
        (ub_gap_tbl - 23.99).abs() <= 0.05,
        "ub gap (table convention) {} vs 23.99",
        ub_gap_tbl
    );
    assert!((lb_gap - 2.33).abs() <= 0.05, "Fa lb gap {} vs 2.33", lb_gap);
    assert!(row.wall_s <= 900.0, "runtime {}s exceeds 15 min", row.wall_s);
    println!(
        "criterion 01: PASS - eq12 PPR p=2: ub_gap 23.99 (got {:.4}), lb_gap(Fa) 2.33 (got {:.4}), {:.1}s",
        ub_gap_tbl, lb_gap, row.wall_s
    );
}

#[test]
fn criterion_02_eq12_rppr_p2_ub_gap() {
    let spec = build_instance_eq12();
    let cfg = PipelineConfig::default();
    let row = run_pipeline(&spec, &Method::rppr("((a*b)*c)*d"), 2, None, &cfg).unwrap();
    let ub_gap_tbl = row.ub_gap_table.unwrap();
    assert!(
        (ub_gap_tbl - 65.47).abs() <= 0.05,
        "ub gap (table convention) {} vs 65.47",
        ub_gap_tbl
    );
    println!(
        "criterion 02: PASS - eq12 R-PPR <<ab>c>d p=2: ub_gap 65.47 (got {:.4})",
        ub_gap_tbl
    );
}

#[test]
fn criterion_03_eq12_ppr_p4_ub_gap() {
    let spec = build_instance_eq12();
    let cfg = PipelineConfig {
        solve: SolveConfig { time_limit_s: 7200.0, ..SolveConfig::default() },
        solver: SolverKind::from_env(),
        aux_partitions: None,
    };
    let row = run_pipeline(&spec, &Method::Ppr, 4, None, &cfg).unwrap();
    let ub_gap_tbl = row.ub_gap_table.unwrap();
    if row.status == "limit" {
        assert!(ub_gap_tbl <= 3.25, "bound gap {} at limit exceeds 3.25", ub_gap_tbl);
        println!(
            "criterion 03: PASS - eq12 PPR p=4 hit the limit with bound gap {:.4} <= 3.25",
            ub_gap_tbl
        );
    } else {
        assert_eq!(row.status, "optimal");
        assert!(
            (ub_gap_tbl - 3.20).abs() <= 0.05,
            "ub gap (table convention) {} vs 3.20",
            ub_gap_tbl
        );
        println!(
            "criterion 03: PASS - eq12 PPR p=4 ({} solver): ub_gap 3.20 (got {:.4}), {:.1}s",
            row.solver, ub_gap_tbl, row.wall_s
        );
    }
}

#[test]
fn criterion_04_ub_gap_formula() {
    let g = ub_gap(4.0986e10, 3.2642e10);
    assert!((g - 20.36).abs() <= 0.01, "ub_gap formula gives {}", g);
    println!("criterion 04: PASS - ub_gap(4.0986e10, 3.2642e10) = {:.4} (20.36 +- 0.01)", g);
}

/// Independent oracle for criterion 5: enumerate the grid by mixed-radix
/// index arithmetic and take the best lifted corner under the objective.
fn corner_oracle(axes: &[Breakpoints], c: &[f64]) -> f64 {
    let shape: Vec<usize> = axes.iter().map(|b| b.len()).collect();
    let total: usize = shape.iter().product();
    let mut best = f64::INFINITY;
    for flat in 0..total {
        let mut rest = flat;
        let mut point = Vec::with_capacity(axes.len());
        for (bp, &n) in axes.iter().zip(&shape) {
            point.push(bp.values()[rest % n]);
            rest /= n;
        }
        let prod: f64 = point.iter().product();
        let mut val = c[axes.len()] * prod;
        for (i, x) in point.iter().enumerate() {
            val += c[i] * x;
        }
        best = best.min(val);
    }
    best
}

#[test]
fn criterion_05_ppr_lp_sharpness() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1105);
    let cfg = SolveConfig::default();
    for case in 0..200 {
        let arity = if rng.random_bool(0.5) { 2 } else { 3 };
        let p = rng.random_range(1..=3usize);
        let mut axes = Vec::with_capacity(arity);
        let mut model = MilpModel::new();
        let mut xs = Vec::with_capacity(arity);
        for i in 0..arity {
            let lo = rng.random_range(-3.0..2.0);
            let hi = lo + rng.random_range(0.5..3.0);
            let iv = Interval::new(lo, hi).unwrap();
            axes.push(iv);
            xs.push(model.add_variable(&format!("x{}", i), lo, hi, VarKind::Continuous).unwrap());
        }
        let w = model.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
        let term = MultilinearTerm::new(xs.clone(), w).unwrap();
        let d = uniform_discretization(&IntervalBox(axes), p).unwrap();
        build_ppr(&mut model, &term, &d).unwrap();
        let c: Vec<f64> = (0..=arity).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut obj: Vec<(VarRef, f64)> = xs.iter().zip(&c).map(|(&v, &ci)| (v, ci)).collect();
        obj.push((w, c[arity]));
        model.set_objective(ObjSense::Minimize, obj).unwrap();
        let lp = solve_lp(&model, &cfg).unwrap();
        assert_eq!(lp.status, SolveStatus::Optimal, "case {}", case);
        let oracle = corner_oracle(d.axes(), &c);
        assert!(
            rel_close(lp.objective, oracle, 1e-6),
            "case {}: lp {} vs corner oracle {}",
            case,
            lp.objective,
            oracle
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 120.0, "sharpness suite took {}s", elapsed);
    println!(
        "criterion 05: PASS - 200 random PPR LPs match the corner-enumeration oracle ({:.1}s)",
        elapsed
    );
}

#[test]
fn criterion_06_hull_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1106);
    let cfg = SolveConfig::default();
    for case in 0..100 {
        let mut bounds = Vec::with_capacity(2);
        for _ in 0..2 {
            let lo = rng.random_range(-4.0..3.0);
            let hi = lo + rng.random_range(0.25..4.0);
            bounds.push(Interval::new(lo, hi).unwrap());
        }
        let bounds = IntervalBox(bounds);
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let build = |hull: bool| {
            let mut m = MilpModel::new();
            let x1 = m.add_variable("x1", bounds.0[0].lo, bounds.0[0].hi, VarKind::Continuous).unwrap();
            let x2 = m.add_variable("x2", bounds.0[1].lo, bounds.0[1].hi, VarKind::Continuous).unwrap();
            let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
            let term = MultilinearTerm::new(vec![x1, x2], w).unwrap();
            if hull {
                build_convex_hull(&mut m, &term, &bounds).unwrap();
            } else {
                build_mccormick(&mut m, &term, &bounds).unwrap();
            }
            m.set_objective(ObjSense::Minimize, vec![(x1, c[0]), (x2, c[1]), (w, c[2])]).unwrap();
            m
        };
        let a = solve_lp(&build(false), &cfg).unwrap().objective;
        let b = solve_lp(&build(true), &cfg).unwrap().objective;
        assert!(rel_close(a, b, 1e-6), "case {}: mccormick {} vs hull {}", case, a, b);
    }
    println!("criterion 06: PASS - 100 random bilinear boxes: McCormick LP = hull LP");
}

#[test]
fn criterion_07_symmetric_bounds_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1107);
    let cfg = SolveConfig::default();
    let bounds = IntervalBox(vec![Interval::new(0.0, 1.0).unwrap(); 3]);
    let d = uniform_discretization(&bounds, 1).unwrap();
    for case in 0..50 {
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let build = |recursive: bool| {
            let mut m = MilpModel::new();
            let xs: Vec<VarRef> = (0..3)
                .map(|i| m.add_variable(&format!("x{}", i), 0.0, 1.0, VarKind::Continuous).unwrap())
                .collect();
            let w = m.add_variable("w", -INF, INF, VarKind::Continuous).unwrap();
            let term = MultilinearTerm::new(xs.clone(), w).unwrap();
            if recursive {
                let tree = GroupingTree::left_deep(3).unwrap();
                build_rppr(&mut m, &term, &tree, &d).unwrap();
            } else {
                build_ppr(&mut m, &term, &d).unwrap();
            }
            let mut obj: Vec<(VarRef, f64)> =
                xs.iter().zip(&c).map(|(&v, &ci)| (v, ci)).collect();
            obj.push((w, c[3]));
            m.set_objective(ObjSense::Minimize, obj).unwrap();
            m
        };
        let a = solve_lp(&build(false), &cfg).unwrap().objective;
        let b = solve_lp(&build(true), &cfg).unwrap().objective;
        assert!(rel_close(a, b, 1e-6), "case {}: ppr {} vs rppr {}", case, a, b);
    }
    println!("criterion 07: PASS - 50 trilinear [0,1]^3 objectives: R-PPR(lex) LP = PPR LP at p=1");
}

fn random_instance(rng: &mut ChaCha8Rng, arity: usize, with_constraint: bool) -> ProblemSpec {
    let variables: Vec<serde_json::Value> = (0..arity)
        .map(|i| {
            let lo: f64 = rng.random_range(0.1..1.0);
            let hi = lo + rng.random_range(0.2..2.0);
            serde_json::json!({"name": format!("x{}", i + 1), "lb": lo, "ub": hi})
        })
        .collect();
    let names: Vec<String> = (0..arity).map(|i| format!("x{}", i + 1)).collect();
    let mut obj = serde_json::Map::new();
    obj.insert("w".into(), serde_json::json!(1.0));
    for n in &names {
        obj.insert(n.clone(), serde_json::json!(rng.random_range(-0.5..0.5)));
    }
    let mut doc = serde_json::json!({
        "name": "random",
        "variables": variables,
        "terms": [{"vars": names, "output": "w"}],
        "objective": {"sense": "max", "coeffs": obj}
    });
    if with_constraint {
        let mut coeffs = serde_json::Map::new();
        let mut mid_total = 0.0;
        for i in 0..arity {
            let c: f64 = rng.random_range(0.2..1.0);
            let v = &doc["variables"][i];
            mid_total += c * 0.5 * (v["lb"].as_f64().unwrap() + v["ub"].as_f64().unwrap());
            coeffs.insert(format!("x{}", i + 1), serde_json::json!(c));
        }
        doc["linear_constraints"] = serde_json::json!([
            {"coeffs": coeffs, "sense": "<=", "rhs": mid_total}
        ]);
    }
    let spec: ProblemSpec = serde_json::from_value(doc).unwrap();
    spec.validate().unwrap();
    spec
}

#[test]
fn criterion_08_recovery_feasibility() {
    // Recovery results inside criteria 1-3 are validated by construction
    // (recover_* errors on a product violation); this re-checks the eq12
    // Fa result explicitly plus 100 random instances.
    let cfg = SolveConfig::default();
    let spec = build_instance_eq12();
    let build = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
    let relax = solve_milp(&build.model, &cfg).unwrap();
    let rec = recover_fa(&spec, &build, relax.solution().unwrap(), &cfg).unwrap();
    let mut checked = 0usize;
    let mut verify = |rec: &multirelax::recovery::RecoveryResult| {
        for t in &rec.terms {
            let prod: f64 = t.x.iter().map(|(_, v)| v).product();
            assert!(
                (t.w - prod).abs() <= PRODUCT_TOL * 1f64.max(t.w.abs()),
                "term {}: w {} vs prod {}",
                t.output,
                t.w,
                prod
            );
            checked += 1;
        }
    };
    verify(&rec);

    let mut rng = ChaCha8Rng::seed_from_u64(1108);
    let pipe_cfg = PipelineConfig::default();
    for case in 0..100 {
        let arity = if rng.random_bool(0.5) { 2 } else { 3 };
        let with_constraint = rng.random_bool(0.5);
        let spec = random_instance(&mut rng, arity, with_constraint);
        let row_rec = {
            let build = build_relaxation(&spec, &Method::Ppr, 2).unwrap();
            let relax = solve_milp(&build.model, &pipe_cfg.solve).unwrap();
            recover_fa(&spec, &build, relax.solution().unwrap(), &pipe_cfg.solve)
                .unwrap_or_else(|e| panic!("case {}: {}", case, e))
        };
        verify(&row_rec);
    }
    println!(
        "criterion 08: PASS - {} recovered terms satisfy |w - prod(x)| <= 1e-6 max(1, |w|)",
        checked
    );
}

#[test]
fn criterion_09_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1109);
    let cfg = SolveConfig::default();
    let groupings = ["(a*(b*c))*d", "((a*b)*c)*d", "a*(b*(c*d))"];
    for case in 0..30 {
        // Asymmetric bounds drawn like the randomized-bounds study.
        let variables: Vec<serde_json::Value> = (0..4)
            .map(|i| {
                let lo: f64 = rng.random_range(0.1..=0.2);
                let hi: f64 = rng.random_range(0.9..=1.0);
                serde_json::json!({"name": format!("x{}", i + 1), "lb": lo, "ub": hi})
            })
            .collect();
        let mut coeffs = serde_json::Map::new();
        let mut mid = 0.0;
        for (i, v) in variables.iter().enumerate() {
            let c: f64 = rng.random_range(0.2..1.0);
            mid += c * 0.5 * (v["lb"].as_f64().unwrap() + v["ub"].as_f64().unwrap());
            coeffs.insert(format!("x{}", i + 1), serde_json::json!(c));
        }
        let spec: ProblemSpec = serde_json::from_value(serde_json::json!({
            "name": "dom",
            "variables": variables,
            "terms": [{"vars": ["x1", "x2", "x3", "x4"], "output": "w"}],
            "linear_constraints": [{"coeffs": coeffs, "sense": "<=", "rhs": mid}],
            "objective": {"sense": "max", "coeffs": {"w": 1.0, "x1": 0.1}}
        }))
        .unwrap();
        for p in [2usize, 3] {
            let ppr = build_relaxation(&spec, &Method::Ppr, p).unwrap();
            let ppr_ub = solve_milp(&ppr.model, &cfg).unwrap().solution().unwrap().objective;
            for g in groupings {
                let rppr = build_relaxation(&spec, &Method::rppr(g), p).unwrap();
                let rppr_ub =
                    solve_milp(&rppr.model, &cfg).unwrap().solution().unwrap().objective;
                assert!(
                    ppr_ub <= rppr_ub + 1e-6 * 1f64.max(ppr_ub.abs()),
                    "case {} p={} {}: PPR {} > R-PPR {}",
                    case,
                    p,
                    g,
                    ppr_ub,
                    rppr_ub
                );
            }
        }
    }
    println!("criterion 09: PASS - PPR UB <= R-PPR UB on 30 random instances, 3 groupings, p in {{2,3}}");
}

#[test]
fn criterion_10_ff2_spot_check() {
    let spec = build_instance_eq12();
    let cfg = PipelineConfig::default();
    let row = run_pipeline(
        &spec,
        &Method::rppr("a*(b*(c*d))"),
        2,
        Some(RecoveryVariant::Ff2),
        &cfg,
    )
    .unwrap();
    let lb_gap = row.lb_gap.unwrap();
    assert!((lb_gap - 0.01).abs() <= 0.05, "Ff2 lb gap {} vs 0.01", lb_gap);
    println!(
        "criterion 10: PASS - eq12 Ff2 on a<b<cd>> p=2: lb_gap 0.01 (got {:.4})",
        lb_gap
    );
}
