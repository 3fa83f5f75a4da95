//! The `driftrate` command-line tool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::bellman::{self, BellmanSolution};
use crate::config::{self, RunConfig};
use crate::constrained::{solve_pstar, ConstraintSpec, DualStatus};
use crate::cost_model::CostModel;
use crate::output::{self, Value};
use crate::rejection::{self, beta_bounds, RejectionReport};
use crate::simulator::{self, SimConfig};
use crate::{Error, ExitCode};

#[derive(Debug, Parser)]
#[command(name = "driftrate", version, about = "Optimal drift-rate control of a reflected Brownian buffer")]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Penalty grid for `sweep`: lo:hi:n or lo:hi:n:log
    #[arg(long, global = true, value_name = "SPEC")]
    p_grid: Option<String>,
    /// Write path.csv for the first replication of `simulate`
    #[arg(long, global = true)]
    dump_path: bool,
    /// Simulation seed (overrides [sim] seed)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the modelling assumptions and print a report
    Validate,
    /// Solve for gamma(p), the policy and the rejection rate
    Solve,
    /// Rejection rate, u(z) and the structural bounds
    Beta,
    /// Find the penalty p* that meets params.beta_hat
    Constrained,
    /// Solve, then cross-check by Monte Carlo simulation
    Simulate,
    /// Solve over a grid of penalties
    Sweep,
}

/// Runs the tool and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Usage as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code as i32,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Model(m) = &e {
                for v in m.violations() {
                    eprintln!("  violated: {v}");
                }
            }
            e.exit_code() as i32
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Usage("--config PATH is required".into()))?;
    let cfg = config::load(config_path)?;
    if let Command::Validate = cli.command {
        return cmd_validate(&cfg);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("driftrate-out"));
    std::fs::create_dir_all(&out).map_err(|source| Error::Io { path: out.display().to_string(), source })?;
    let ctx = Ctx { cfg, out };
    match cli.command {
        Command::Validate => unreachable!(),
        Command::Solve => cmd_solve(&ctx),
        Command::Beta => cmd_beta(&ctx),
        Command::Constrained => cmd_constrained(&ctx),
        Command::Simulate => cmd_simulate(&ctx, cli.seed, cli.dump_path),
        Command::Sweep => cmd_sweep(&ctx, cli.p_grid.as_deref()),
    }
}

fn cmd_validate(cfg: &RunConfig) -> Result<ExitCode, Error> {
    let (model, _) = cfg.build()?;
    println!("model: valid");
    for line in model.assumption_report() {
        println!("  {line}");
    }
    let p0 = model.p_zero();
    println!("  p0 = {}", output::num(p0));
    Ok(ExitCode::Success)
}

fn solve_at(ctx: &Ctx, p: f64) -> Result<(CostModel, BellmanSolution, RejectionReport), Error> {
    let (model, sys) = ctx.cfg.build()?;
    let sol = bellman::solve(&model, &sys.with_p(p)?, &ctx.cfg.solver_settings())?;
    let rep = rejection::rejection_report(&model, &sol)?;
    Ok((model, sol, rep))
}

fn summary_entries(model: &CostModel, sol: &BellmanSolution, rep: &RejectionReport) -> Vec<(&'static str, Value)> {
    vec![
        ("sigma2", sol.params.sigma2.into()),
        ("b", sol.params.b.into()),
        ("p", sol.params.p.into()),
        ("gamma", sol.gamma.into()),
        ("beta", rep.beta.into()),
        ("gap", rep.gap.into()),
        ("residual_max", sol.residual_max.into()),
        ("u_residual_max", rep.u_residual_max.into()),
        ("v_end_ode", sol.v_ode_end.into()),
        ("phi_star", sol.phi_star.into()),
        ("p0", model.p_zero().into()),
        ("beta_upper", rep.beta_upper.into()),
        ("beta_lower", rep.beta_lower.into()),
        ("n_z", sol.z.len().into()),
    ]
}

fn print_kv(entries: &[(&str, Value)]) {
    print!("{}", output::kv_text(entries));
}

fn cmd_solve(ctx: &Ctx) -> Result<ExitCode, Error> {
    let (model, sol, rep) = solve_at(ctx, ctx.cfg.p()?)?;
    let entries = summary_entries(&model, &sol, &rep);
    output::write_kv(&ctx.path("summary.txt"), &entries)?;
    output::write_policy(&ctx.path("policy.csv"), &sol)?;
    write_u(&ctx.path("rejection.csv"), &rep)?;
    print_kv(&entries);
    Ok(ExitCode::Success)
}

fn write_u(path: &Path, rep: &RejectionReport) -> Result<(), Error> {
    output::write_csv(path, &["z", "u"], rep.z.iter().zip(&rep.u).map(|(z, u)| [*z, *u]))
}

fn cmd_beta(ctx: &Ctx) -> Result<ExitCode, Error> {
    let (model, sol, rep) = solve_at(ctx, ctx.cfg.p()?)?;
    let entries: Vec<(&str, Value)> = vec![
        ("p", sol.params.p.into()),
        ("beta", rep.beta.into()),
        ("beta_upper", rep.beta_upper.into()),
        ("beta_lower", rep.beta_lower.into()),
        ("p0", model.p_zero().into()),
        ("gamma", sol.gamma.into()),
        ("gap", rep.gap.into()),
        ("u_residual_max", rep.u_residual_max.into()),
    ];
    output::write_kv(&ctx.path("beta.txt"), &entries)?;
    write_u(&ctx.path("rejection.csv"), &rep)?;
    print_kv(&entries);
    Ok(ExitCode::Success)
}

fn cmd_constrained(ctx: &Ctx) -> Result<ExitCode, Error> {
    let (model, sys) = ctx.cfg.build()?;
    let spec = ConstraintSpec { beta_hat: ctx.cfg.beta_hat()? };
    let dual = solve_pstar(&model, &sys, &spec, &ctx.cfg.solver_settings())?;
    if let Some(w) = dual.warning() {
        eprintln!("warning: {w}");
    }
    let status = match dual.status {
        DualStatus::Binding => "binding",
        DualStatus::Slack => "slack",
    };
    let entries: Vec<(&str, Value)> = vec![
        ("beta_hat", dual.beta_hat.into()),
        ("p_star", dual.p_star.into()),
        ("gamma", dual.gamma.into()),
        ("beta", dual.beta.into()),
        ("energy_cost", dual.energy_cost.into()),
        ("beta_upper", dual.beta_upper.into()),
        ("beta_lower", dual.beta_lower.into()),
        ("status", status.into()),
    ];
    output::write_kv(&ctx.path("constrained.txt"), &entries)?;
    match &dual.solution {
        Some(sol) => output::write_policy(&ctx.path("policy.csv"), sol)?,
        None => {
            // Zero penalty: v ≡ 0, f ≡ 0 and θ ≡ θ_*.
            let n = ctx.cfg.solver_settings().n_z;
            let theta = model.theta_min();
            let header = format!(
                "# sigma2={},b={},p={},gamma={},residual_max={}\n",
                output::num(sys.sigma2),
                output::num(sys.b),
                output::num(0.0),
                output::num(0.0),
                output::num(0.0)
            );
            let rows = (0..n).map(|i| [sys.b * i as f64 / (n - 1) as f64, 0.0, 0.0, theta]);
            let text = header + &output::csv_text(&["z", "v", "f", "theta"], rows);
            std::fs::write(ctx.path("policy.csv"), text)
                .map_err(|source| Error::Io { path: ctx.path("policy.csv").display().to_string(), source })?;
        }
    }
    print_kv(&entries);
    Ok(ExitCode::Success)
}

fn cmd_simulate(ctx: &Ctx, seed: Option<u64>, dump_path: bool) -> Result<ExitCode, Error> {
    let (model, sol, rep) = solve_at(ctx, ctx.cfg.p()?)?;
    let mut sim_cfg: SimConfig = ctx.cfg.sim_config();
    if let Some(s) = seed {
        sim_cfg.seed = s;
    }
    if dump_path {
        let n_steps = (sim_cfg.horizon / sim_cfg.dt).round() as usize;
        sim_cfg.dump_stride = Some((n_steps / 100_000).max(1));
    }
    let tol_mc = ctx.cfg.tol_mc();
    let report = simulator::assess_solution(&model, &sol, &rep, &sim_cfg, tol_mc)?;
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    let s = &report.sim;
    let entries: Vec<(&str, Value)> = vec![
        ("p", sol.params.p.into()),
        ("gamma", sol.gamma.into()),
        ("beta", rep.beta.into()),
        ("avg_cost_mean", s.avg_cost.mean.into()),
        ("avg_cost_se", s.avg_cost.se.into()),
        ("avg_cost_tolerance", report.cost.tolerance.into()),
        ("drop_rate_mean", s.drop_rate.mean.into()),
        ("drop_rate_se", s.drop_rate.se.into()),
        ("drop_rate_tolerance", report.drop.tolerance.into()),
        ("lower_push_rate_mean", s.lower_push_rate.mean.into()),
        ("lower_push_rate_se", s.lower_push_rate.se.into()),
        ("z_min", s.z_min.into()),
        ("z_max", s.z_max.into()),
        ("dt", sim_cfg.dt.into()),
        ("horizon", sim_cfg.horizon.into()),
        ("n_reps", sim_cfg.n_reps.into()),
        ("seed", Value::Int(sim_cfg.seed)),
        ("tol_mc", tol_mc.into()),
        ("verdict", verdict.into()),
    ];
    output::write_kv(&ctx.path("simulation.txt"), &entries)?;
    let bins = s.occupancy.len();
    let b = sol.params.b;
    output::write_csv(
        &ctx.path("occupancy.csv"),
        &["z_lo", "z_hi", "fraction"],
        s.occupancy
            .iter()
            .enumerate()
            .map(|(i, f)| [b * i as f64 / bins as f64, b * (i + 1) as f64 / bins as f64, *f]),
    )?;
    if let Some(path) = &s.path {
        output::write_csv(
            &ctx.path("path.csv"),
            &["t", "z", "l", "u", "xi"],
            path.iter().map(|r| [r.t, r.z, r.l, r.u, r.xi]),
        )?;
    }
    output::write_policy(&ctx.path("policy.csv"), &sol)?;
    print_kv(&entries);
    if report.passed() {
        Ok(ExitCode::Success)
    } else {
        let err = report.into_result().unwrap_err();
        eprintln!("error: {err}");
        Ok(ExitCode::Validation)
    }
}

/// Parses `lo:hi:n` or `lo:hi:n:log`.
pub fn parse_p_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Usage(format!("bad --p-grid '{spec}': expected lo:hi:n or lo:hi:n:log"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 && !(parts.len() == 4 && parts[3] == "log") {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && n >= 1) || (n == 1 && hi != lo) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let log = parts.len() == 4;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if i + 1 == n {
                hi
            } else if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect())
}

fn cmd_sweep(ctx: &Ctx, grid: Option<&str>) -> Result<ExitCode, Error> {
    let grid = parse_p_grid(grid.ok_or_else(|| Error::Usage("sweep needs --p-grid".into()))?)?;
    let (model, sys) = ctx.cfg.build()?;
    let settings = ctx.cfg.solver_settings();
    let rows: Vec<[f64; 4]> = grid
        .par_iter()
        .map(|&p| -> Result<[f64; 4], Error> {
            let sol = bellman::solve(&model, &sys.with_p(p)?, &settings)?;
            let rep = rejection::rejection_report(&model, &sol)?;
            Ok([p, sol.gamma, rep.beta, rep.gap])
        })
        .collect::<Result<_, _>>()?;
    output::write_csv(&ctx.path("sweep.csv"), &["p", "gamma", "beta", "gap"], &rows)?;

    let (beta_upper, beta_lower) = beta_bounds(&model, &sys);
    let beta_ok = rows.windows(2).all(|w| w[1][2] <= w[0][2] * (1.0 + 1e-9));
    let gamma_ok = rows.windows(2).all(|w| w[1][1] >= w[0][1] * (1.0 - 1e-12));
    println!("points={}", rows.len());
    println!("beta_upper={}", output::num(beta_upper));
    println!("beta_lower={}", output::num(beta_lower));
    println!("beta_nonincreasing={beta_ok}");
    println!("gamma_nondecreasing={gamma_ok}");
    if !beta_ok || !gamma_ok {
        eprintln!("warning: sweep is not monotone");
    }
    Ok(ExitCode::Success)
}
