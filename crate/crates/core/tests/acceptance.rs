//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::frozen::*;
use common::*;
use driftrate::bellman::{solve, BellmanSolution, ProblemParams, SolverSettings, SystemParams};
use driftrate::constrained::{solve_pstar, ConstraintSpec, DualStatus};
use driftrate::cost_model::{CostModel, EPS_INT};
use driftrate::policy::{ConstantPolicy, OptimalPolicy};
use driftrate::rejection::{beta_bounds, rejection_report, RejectionReport};
use driftrate::simulator::{assess_solution, compare_policies, SimConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solved(m: &CostModel, sigma2: f64, b: f64, p: f64) -> (BellmanSolution, RejectionReport) {
    let sol = solve(m, &ProblemParams::new(sigma2, b, p).unwrap(), &SolverSettings::default()).unwrap();
    let rep = rejection_report(m, &sol).unwrap();
    (sol, rep)
}

fn zero_drift_singleton() -> Outcome {
    let (sol, rep) = solved(&singleton(0.0), 1.0, 1.0, 2.0);
    let v_err = sol
        .z
        .iter()
        .zip(&sol.v)
        .skip(1)
        .map(|(z, v)| rel(*v, 2.0 * z))
        .fold(0.0, f64::max);
    ensure(rel(sol.gamma, 1.0) <= 1e-8, || format!("gamma = {}", sol.gamma))?;
    ensure(v_err <= 1e-8 && sol.v[0] == 0.0, || format!("v relative error {v_err:e}"))?;
    ensure(rel(rep.beta, 0.5) <= 1e-8, || format!("beta = {}", rep.beta))?;
    Ok(format!("gamma={:.15}, beta={:.15}, max rel v error {v_err:.1e}", sol.gamma, rep.beta))
}

fn unit_drift_singleton() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.5, 1.0, 2.0, 10.0] {
        let (sol, rep) = solved(&singleton(1.0), 1.0, 1.0, p);
        let e = [
            rel(sol.gamma, p * INV_E2_MINUS_1),
            rel(rep.beta, INV_E2_MINUS_1),
            rel(sol.gamma, p * rep.beta),
        ];
        let m = e.iter().copied().fold(0.0, f64::max);
        ensure(m <= 1e-8, || format!("p={p}: relative errors {e:?}"))?;
        worst = worst.max(m);
    }
    Ok(format!("p in {{0.5, 1, 2, 10}}, worst relative error {worst:.1e}"))
}

fn exponential_residual() -> Outcome {
    let m = exp_model(1.0, 0.0);
    let mut notes = Vec::new();
    for p in [0.5, 2.0, 5.0, 20.0] {
        let (sol, _) = solved(&m, 1.0, 1.0, p);
        ensure(sol.residual_max <= 1e-6, || format!("p={p}: residual {:e}", sol.residual_max))?;
        ensure(sol.v[0] == 0.0, || format!("p={p}: v(0) = {}", sol.v[0]))?;
        let end = (sol.v_at(1.0) - p).abs().max((sol.v_ode_end - p).abs());
        ensure(end <= 1e-6 * p, || format!("p={p}: |v(b) - p| = {end:e}"))?;
        notes.push(format!("p={p}: {:.1e}", sol.residual_max));
    }
    Ok(format!("max residual {}", notes.join(", ")))
}

fn monte_carlo_agreement() -> Outcome {
    let start = Instant::now();
    let m = exp_model(1.0, 0.0);
    let (sol, rep) = solved(&m, 1.0, 1.0, 5.0);
    let cfg = SimConfig { dt: 1e-3, horizon: 1e4, n_reps: 64, seed: 2024, ..SimConfig::default() };
    let v = assess_solution(&m, &sol, &rep, &cfg, 0.02).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let summary = format!(
        "cost {:.5}±{:.5} vs {:.5}, drop {:.5}±{:.5} vs {:.5}, {secs:.1}s",
        v.cost.empirical.mean, v.cost.empirical.se, v.cost.analytic, v.drop.empirical.mean, v.drop.empirical.se, v.drop.analytic
    );
    ensure(v.cost.passed() && v.drop.passed(), || summary.clone())?;
    ensure(secs < 120.0, || format!("too slow: {summary}"))?;
    Ok(summary)
}

fn optimality_check() -> Outcome {
    let m = exp_model(1.0, 0.0);
    let (sol, _) = solved(&m, 1.0, 1.0, 5.0);
    let opt = OptimalPolicy::new(&m, &sol);
    let top = m.psi(5.0);
    let lo = ConstantPolicy(m.theta_min());
    let hi = ConstantPolicy(top);
    let mid = ConstantPolicy(0.5 * (m.theta_min() + top));
    let cfg = SimConfig { horizon: 1e3, n_reps: 32, seed: 99, ..SimConfig::default() };
    let res = compare_policies(&m, &sol.params, &[("optimal", &opt), ("theta_min", &lo), ("psi(p)", &hi), ("midpoint", &mid)], &cfg)
        .unwrap();
    let listing: Vec<String> =
        res.entries.iter().map(|e| format!("{} {:.4}±{:.4}", e.name, e.cost.mean, e.cost.se)).collect();
    ensure(res.reference_wins, || listing.join(", "))?;
    Ok(listing.join(", "))
}

fn dual_round_trip() -> Outcome {
    let m = exp_model(1.0, 0.0);
    let sys = SystemParams::new(1.0, 1.0).unwrap();
    let mut worst_p: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for p in [1.5, 3.0, 5.0, 10.0, 20.0] {
        ensure(p > m.p_zero(), || "p not above p0".into())?;
        let (sol, rep) = solved(&m, 1.0, 1.0, p);
        let d = solve_pstar(&m, &sys, &ConstraintSpec { beta_hat: rep.beta }, &SolverSettings::default()).unwrap();
        ensure(d.status == DualStatus::Binding, || format!("p={p}: not binding"))?;
        let ep = rel(d.p_star, p);
        let ee = (d.energy_cost - (sol.gamma - p * rep.beta)).abs();
        ensure(ep <= 1e-6, || format!("p={p}: p* = {} (rel {ep:e})", d.p_star))?;
        ensure(ee <= 1e-8, || format!("p={p}: energy mismatch {ee:e}"))?;
        worst_p = worst_p.max(ep);
        worst_e = worst_e.max(ee);
    }
    Ok(format!("5 penalties, worst p* rel error {worst_p:.1e}, worst energy error {worst_e:.1e}"))
}

fn conjugate_structure(m: &CostModel) -> Result<(), String> {
    let mut ys: Vec<f64> = (0..=2000).map(|i| 0.005 * i as f64).collect();
    for &y in m.breakpoints() {
        ys.extend([y, y * (1.0 - 1e-9), y * (1.0 + 1e-9)]);
    }
    ys.sort_by(f64::total_cmp);
    ensure(m.phi(0.0) == 0.0, || "phi(0) != 0".into())?;
    for w in ys.windows(2) {
        ensure(m.psi(w[1]) >= m.psi(w[0]), || format!("psi decreases at {}", w[1]))?;
    }
    for &y in m.jumps() {
        ensure(m.psi(y) == m.psi(y * (1.0 - 1e-10)), || format!("psi not left-continuous at {y}"))?;
    }
    for w in ys.windows(3) {
        let chord = 0.5 * (m.phi(w[0]) + m.phi(w[2]));
        ensure(m.phi(0.5 * (w[0] + w[2])) <= chord + EPS_INT, || format!("phi not convex near {}", w[1]))?;
    }
    for &y in ys.iter().step_by(50) {
        let q = m.phi_by_quadrature(y).unwrap();
        ensure((q - m.phi(y)).abs() <= EPS_INT * m.phi(y).abs().max(1.0), || format!("quadrature mismatch at {y}"))?;
    }
    Ok(())
}

fn structure_suite() -> Outcome {
    let sys = SystemParams::new(1.0, 1.0).unwrap();
    let grid = log_grid(1e-3, 1e3, 50);
    let mut notes = Vec::new();
    for (name, m, check_lower) in [("exponential", exp_model(1.0, 0.0), false), ("two-point {0,1}", two_point(0.5), true)] {
        conjugate_structure(&m)?;
        let (upper, lower) = beta_bounds(&m, &sys);
        let mut betas = Vec::with_capacity(grid.len());
        for &p in &grid {
            let (sol, rep) = solved(&m, 1.0, 1.0, p);
            ensure(sol.theta.windows(2).all(|w| w[1] >= w[0]), || format!("{name}: policy not monotone at p={p}"))?;
            ensure(sol.theta.iter().all(|&t| m.contains(t)), || format!("{name}: policy leaves A at p={p}"))?;
            betas.push(rep.beta);
        }
        ensure(betas.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)), || format!("{name}: beta not nonincreasing"))?;
        let first = rel(betas[0], upper);
        ensure(first <= 0.01, || format!("{name}: beta(1e-3) off beta* by {first:e}"))?;
        let mut note = format!("{name}: beta(1e-3)/beta* - 1 = {first:.1e}");
        if check_lower {
            let last = rel(*betas.last().unwrap(), lower);
            ensure(last <= 0.01, || format!("{name}: beta(1e3) off beta_* by {last:e}"))?;
            note += &format!(", beta(1e3)/beta_* - 1 = {last:.1e}");
        }
        notes.push(note);
    }
    conjugate_structure(&point_and_interval())?;
    Ok(notes.join("; "))
}

fn cli(dir: &Path, config: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_driftrate"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[model]\ndomain = [[0.0, inf]]\ncost = [{ kind = \"exponential\", alpha = 1.0 }]\n\
         [params]\nsigma2 = 1.0\nb = 1.0\np = 5.0\n[sim]\nhorizon = 200.0\nn_reps = 8\nseed = 5\n",
    )
    .unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        cli(d, &cfg, &["solve"])?;
        cli(d, &cfg, &["beta"])?;
        cli(d, &cfg, &["simulate", "--dump-path"])?;
        cli(d, &cfg, &["sweep", "--p-grid", "0.1:10:8:log"])?;
    }
    let files = ["policy.csv", "rejection.csv", "occupancy.csv", "path.csv", "sweep.csv", "summary.txt", "simulation.txt"];
    for f in files {
        let a = std::fs::read(dirs[0].join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dirs[1].join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} output files identical across two runs", files.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 zero-drift singleton oracle", zero_drift_singleton),
        ("2 unit-drift singleton oracle", unit_drift_singleton),
        ("3 Bellman residual, exponential cost", exponential_residual),
        ("4 Monte Carlo agreement at p=5", monte_carlo_agreement),
        ("5 optimal policy beats constant alternatives", optimality_check),
        ("6 dual round trip", dual_round_trip),
        ("7 structure suite", structure_suite),
        ("8 determinism of CLI outputs", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
