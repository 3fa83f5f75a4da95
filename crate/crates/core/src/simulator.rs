//! Monte Carlo simulation of the controlled reflected diffusion.
//!
//! Euler steps with a one-step two-sided projection:
//! `W = Z + σ√dt·N − θ(Z)dt`, `ΔL = (−W)⁺`, `ΔU = (W − b)⁺`. Projection only
//! sees the grid times, so it under-counts boundary pushing by `O(√dt)`; with
//! `boundary_correction` the projection interval is shrunk by
//! `0.5826·σ√dt` on each side, which removes the leading term.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::bellman::{BellmanSolution, ProblemParams};
use crate::cost_model::CostModel;
use crate::policy::{OptimalPolicy, Policy};
use crate::rejection::RejectionReport;

/// `−ζ(1/2)/√(2π)`, the leading boundary-overshoot constant of a Gaussian
/// random walk.
pub const OVERSHOOT: f64 = 0.582_597_157_939_010_6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step too large: sigma*sqrt(dt) = {step} exceeds b/4 = {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("policy is not admissible: theta({z}) = {theta} is not a finite action in A")]
    InadmissiblePolicy { z: f64, theta: f64 },
    #[error(
        "validation failed for {statistic}: simulated {empirical:.6e} vs analytic {analytic:.6e} \
         (tolerance {tolerance:.3e})"
    )]
    ValidationFailed { statistic: &'static str, empirical: f64, analytic: f64, tolerance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_reps: usize,
    pub seed: u64,
    /// Fraction of the horizon discarded before averaging.
    pub burn_in: f64,
    /// Initial state; `None` means `b/2`.
    pub z0: Option<f64>,
    pub n_bins: usize,
    pub boundary_correction: bool,
    /// Record every `stride`-th step of replication 0.
    pub dump_stride: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 1e4,
            n_reps: 64,
            seed: 0,
            burn_in: 0.1,
            z0: None,
            n_bins: 50,
            boundary_correction: true,
            dump_stride: None,
        }
    }
}

/// Mean and standard error over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, se: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub t: f64,
    pub z: f64,
    pub l: f64,
    pub u: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub avg_cost: Estimate,
    pub drop_rate: Estimate,
    pub lower_push_rate: Estimate,
    /// Fraction of post-burn-in samples in each of `n_bins` equal bins of
    /// `[0, b]`.
    pub occupancy: Vec<f64>,
    pub z_min: f64,
    pub z_max: f64,
    pub n_steps: usize,
    pub rep_costs: Vec<f64>,
    pub rep_drops: Vec<f64>,
    pub path: Option<Vec<PathRecord>>,
}

struct RepOutcome {
    cost: f64,
    drop: f64,
    lower: f64,
    counts: Vec<u64>,
    z_min: f64,
    z_max: f64,
    path: Option<Vec<PathRecord>>,
}

fn check_config(params: &ProblemParams, config: &SimConfig) -> Result<(), SimError> {
    let bad = |m: String| Err(SimError::InvalidConfig(m));
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return bad(format!("dt must be positive, got {}", config.dt));
    }
    if !(config.horizon > config.dt && config.horizon.is_finite()) {
        return bad(format!("horizon {} must exceed dt", config.horizon));
    }
    if !(0.0..=0.5).contains(&config.burn_in) {
        return bad(format!("burn_in must be in [0, 0.5], got {}", config.burn_in));
    }
    if config.n_reps < 2 {
        return bad(format!("need at least 2 replications, got {}", config.n_reps));
    }
    if config.n_bins == 0 {
        return bad("n_bins must be positive".into());
    }
    if let Some(z0) = config.z0 {
        if !(z0 >= 0.0 && z0 <= params.b) {
            return bad(format!("z0 = {z0} is outside [0, {}]", params.b));
        }
    }
    if config.dump_stride == Some(0) {
        return bad("dump stride must be positive".into());
    }
    let step = (params.sigma2 * config.dt).sqrt();
    if step > params.b / 4.0 {
        return Err(SimError::StepTooLarge { step, limit: params.b / 4.0 });
    }
    Ok(())
}

/// Rejects policies that leave the action set or are not finite.
pub fn check_admissible<P: Policy + ?Sized>(model: &CostModel, policy: &P, b: f64) -> Result<(), SimError> {
    let mut zs: Vec<f64> = (0..=4096).map(|i| b * i as f64 / 4096.0).collect();
    for z in policy.breakpoints() {
        zs.extend([z, z * (1.0 - 1e-9), z * (1.0 + 1e-9)].iter().filter(|&&x| (0.0..=b).contains(&x)));
    }
    for z in zs {
        let theta = policy.drift(z);
        if !model.contains(theta) {
            return Err(SimError::InadmissiblePolicy { z, theta });
        }
    }
    Ok(())
}

fn run_rep<P: Policy + ?Sized>(
    model: &CostModel,
    policy: &P,
    params: &ProblemParams,
    config: &SimConfig,
    rep: usize,
) -> RepOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rep as u64);
    let b = params.b;
    let s = (params.sigma2 * config.dt).sqrt();
    let dt = config.dt;
    let (lo_b, hi_b) = if config.boundary_correction { (OVERSHOOT * s, b - OVERSHOOT * s) } else { (0.0, b) };
    let n_steps = (config.horizon / dt).round() as usize;
    let burn = (config.burn_in * n_steps as f64).round() as usize;
    let bins = config.n_bins;
    let bin_scale = bins as f64 / b;
    let record = if rep == 0 { config.dump_stride } else { None };

    let mut z = config.z0.unwrap_or(0.5 * b).clamp(lo_b, hi_b);
    let (mut cost, mut l_tot, mut u_tot) = (0.0, 0.0, 0.0);
    let mut counts = vec![0u64; bins];
    let (mut z_min, mut z_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut path = record.map(|_| Vec::new());
    let (mut l_all, mut u_all, mut xi_all) = (0.0, 0.0, 0.0);
    if let Some(p) = path.as_mut() {
        p.push(PathRecord { t: 0.0, z, l: 0.0, u: 0.0, xi: 0.0 });
    }

    for k in 0..n_steps {
        let theta = policy.drift(z);
        let c = model.cost_unchecked(theta);
        let n: f64 = StandardNormal.sample(&mut rng);
        let w = z + s * n - theta * dt;
        let dl = (lo_b - w).max(0.0);
        let w = w + dl;
        let du = (w - hi_b).max(0.0);
        z = w - du;
        if k >= burn {
            cost += c * dt;
            l_tot += dl;
            u_tot += du;
            let bin = ((z * bin_scale) as usize).min(bins - 1);
            counts[bin] += 1;
            z_min = z_min.min(z);
            z_max = z_max.max(z);
        }
        if let (Some(p), Some(stride)) = (path.as_mut(), record) {
            l_all += dl;
            u_all += du;
            xi_all += c * dt + params.p * du;
            if (k + 1) % stride == 0 {
                p.push(PathRecord { t: (k + 1) as f64 * dt, z, l: l_all, u: u_all, xi: xi_all });
            }
        }
    }
    let t_eff = (n_steps - burn) as f64 * dt;
    RepOutcome {
        cost: (cost + params.p * u_tot) / t_eff,
        drop: u_tot / t_eff,
        lower: l_tot / t_eff,
        counts,
        z_min,
        z_max,
        path,
    }
}

/// Simulates `n_reps` independent replications under `policy`.
///
/// Replication `r` draws from stream `r` of a ChaCha8 generator keyed by the
/// seed, and results are reduced in replication order, so the output is
/// bit-identical for a fixed config regardless of thread count.
pub fn simulate<P: Policy + ?Sized>(
    model: &CostModel,
    policy: &P,
    params: &ProblemParams,
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    check_config(params, config)?;
    check_admissible(model, policy, params.b)?;
    let reps: Vec<RepOutcome> = (0..config.n_reps)
        .into_par_iter()
        .map(|r| run_rep(model, policy, params, config, r))
        .collect();

    let rep_costs: Vec<f64> = reps.iter().map(|r| r.cost).collect();
    let rep_drops: Vec<f64> = reps.iter().map(|r| r.drop).collect();
    let lowers: Vec<f64> = reps.iter().map(|r| r.lower).collect();
    let mut counts = vec![0u64; config.n_bins];
    for r in &reps {
        for (c, x) in counts.iter_mut().zip(&r.counts) {
            *c += x;
        }
    }
    let total: u64 = counts.iter().sum();
    let occupancy = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let z_min = reps.iter().map(|r| r.z_min).fold(f64::INFINITY, f64::min);
    let z_max = reps.iter().map(|r| r.z_max).fold(f64::NEG_INFINITY, f64::max);
    let path = reps.into_iter().next().and_then(|r| r.path);

    Ok(SimResult {
        avg_cost: Estimate::from_samples(&rep_costs),
        drop_rate: Estimate::from_samples(&rep_drops),
        lower_push_rate: Estimate::from_samples(&lowers),
        occupancy,
        z_min,
        z_max,
        n_steps: (config.horizon / config.dt).round() as usize,
        rep_costs,
        rep_drops,
        path,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub empirical: Estimate,
    pub analytic: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(empirical: Estimate, analytic: f64, tol_mc: f64) -> Self {
        let tolerance = (3.0 * empirical.se).max(tol_mc * analytic.abs());
        Self { empirical, analytic, tolerance }
    }

    pub fn passed(&self) -> bool {
        (self.empirical.mean - self.analytic).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub sim: SimResult,
    pub cost: Check,
    pub drop: Check,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.cost.passed() && self.drop.passed()
    }

    pub fn into_result(self) -> Result<Self, SimError> {
        for (statistic, check) in [("average cost", self.cost), ("drop rate", self.drop)] {
            if !check.passed() {
                return Err(SimError::ValidationFailed {
                    statistic,
                    empirical: check.empirical.mean,
                    analytic: check.analytic,
                    tolerance: check.tolerance,
                });
            }
        }
        Ok(self)
    }
}

/// Simulates the optimal policy and compares against `γ(p)` and `β(p)`
/// without failing.
pub fn assess_solution(
    model: &CostModel,
    solution: &BellmanSolution,
    report: &RejectionReport,
    config: &SimConfig,
    tol_mc: f64,
) -> Result<ValidationReport, SimError> {
    let policy = OptimalPolicy::new(model, solution);
    let sim = simulate(model, &policy, &solution.params, config)?;
    Ok(ValidationReport {
        cost: Check::new(sim.avg_cost, solution.gamma, tol_mc),
        drop: Check::new(sim.drop_rate, report.beta, tol_mc),
        sim,
    })
}

/// Like [`assess_solution`], but a failed check is an error.
pub fn validate_solution(
    model: &CostModel,
    solution: &BellmanSolution,
    report: &RejectionReport,
    config: &SimConfig,
    tol_mc: f64,
) -> Result<ValidationReport, SimError> {
    assess_solution(model, solution, report, config, tol_mc)?.into_result()
}

#[derive(Debug, Clone)]
pub struct RankedPolicy {
    pub name: String,
    pub cost: Estimate,
}

#[derive(Debug, Clone)]
pub struct PolicyComparison {
    /// The reference policy first, then the alternatives in input order.
    pub entries: Vec<RankedPolicy>,
    /// Whether the reference cost is within `3·√(se_ref² + se_alt²)` of or
    /// below every alternative.
    pub reference_wins: bool,
}

/// Simulates each policy with the same seed (common random numbers). The
/// first policy is the reference, normally the optimal one.
pub fn compare_policies(
    model: &CostModel,
    params: &ProblemParams,
    policies: &[(&str, &dyn Policy)],
    config: &SimConfig,
) -> Result<PolicyComparison, SimError> {
    let mut entries = Vec::with_capacity(policies.len());
    for (name, policy) in policies {
        let sim = simulate(model, *policy, params, config)?;
        entries.push(RankedPolicy { name: name.to_string(), cost: sim.avg_cost });
    }
    let reference_wins = match entries.split_first() {
        Some((r, rest)) => rest
            .iter()
            .all(|a| r.cost.mean <= a.cost.mean + 3.0 * (r.cost.se.powi(2) + a.cost.se.powi(2)).sqrt()),
        None => true,
    };
    Ok(PolicyComparison { entries, reference_wins })
}
