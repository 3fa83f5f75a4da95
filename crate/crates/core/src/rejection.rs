//! Long-run rejection rate at the upper boundary.
//!
//! For a stationary policy `θ` with `I(y) = ∫₀^y θ`, the rate is
//! `β = (σ²/2)·e^{−2I(b)/σ²} / ∫₀^b e^{−2I(y)/σ²} dy`, and
//! `u(z) = (2β/σ²)·e^{2I(z)/σ²}·∫₀^z e^{−2I(y)/σ²} dy` solves
//! `(σ²/2)u′ − θu = β` with `u(0) = 0`, `u(b) = 1`. Everything is carried in
//! log space so strong drifts do not overflow.

use thiserror::Error;

use crate::bellman::{smooth_ranges, BellmanSolution, SystemParams, EPS_RESIDUAL};
use crate::cost_model::CostModel;
use crate::numerics::{derivative_5pt, integrate, QuadError, QuadOptions};
use crate::policy::{OptimalPolicy, Policy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RejectionError {
    #[error("grid needs at least 9 points, got {0}")]
    GridTooSmall(usize),
    #[error("policy drift is not finite at z = {z}")]
    NonFiniteDrift { z: f64 },
    #[error("u equation residual {residual:e} exceeds the tolerance {tolerance:e}")]
    UResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("duality gap gamma - p*beta = {gap:e} is negative beyond tolerance")]
    DualityViolation { gap: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Rejection rate and `u(·)` for an arbitrary policy.
#[derive(Debug, Clone)]
pub struct PolicyRejection {
    pub beta: f64,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub u_residual_max: f64,
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Computes `β` and `u` on a uniform grid of `n_z` points.
///
/// The inner antiderivative `I` is accumulated cell by cell; inside each cell
/// the outer integrand `e^{−2(I(y) − I(z_k))/σ²}` is integrated adaptively
/// with panels split at the policy breakpoints.
pub fn analyze_policy<P: Policy + ?Sized>(
    policy: &P,
    sys: &SystemParams,
    n_z: usize,
    rel_tol: f64,
) -> Result<PolicyRejection, RejectionError> {
    if n_z < 9 {
        return Err(RejectionError::GridTooSmall(n_z));
    }
    let SystemParams { sigma2, b } = *sys;
    let k = 2.0 / sigma2;
    let h = b / (n_z - 1) as f64;
    let z: Vec<f64> = (0..n_z).map(|i| if i + 1 == n_z { b } else { i as f64 * h }).collect();
    let mut breaks = policy.breakpoints();
    breaks.retain(|x| x.is_finite() && *x > 0.0 && *x < b);
    breaks.sort_by(f64::total_cmp);

    let theta: Vec<f64> = z.iter().map(|&x| policy.drift(x)).collect();
    if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
        return Err(RejectionError::NonFiniteDrift { z: z[i] });
    }

    // a_i = −2I(z_i)/σ², and log_j_i = ln ∫₀^{z_i} e^{−2I/σ²}.
    let mut a = vec![0.0; n_z];
    let mut log_j = vec![f64::NEG_INFINITY; n_z];
    for c in 0..n_z - 1 {
        let (lo, hi) = (z[c], z[c + 1]);
        let cell_breaks: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
        let scale = theta[c].abs().max(theta[c + 1].abs()).max(1.0);
        let inner_opts = QuadOptions { rel_tol, abs_tol: 1e-16 * h * scale, ..QuadOptions::default() };
        let mut inner_err = None;
        let mut inner = |y: f64| match integrate(|s| policy.drift(s), lo, y, &cell_breaks, inner_opts) {
            Ok(v) => v,
            Err(e) => {
                inner_err.get_or_insert(e);
                f64::NAN
            }
        };
        let d_i = inner(hi);
        let cell = integrate(|y| (-k * inner(y)).exp(), lo, hi, &cell_breaks, QuadOptions::with_rel_tol(rel_tol));
        if let Some(e) = inner_err {
            return Err(e.into());
        }
        let cell = cell?;
        a[c + 1] = a[c] - k * d_i;
        log_j[c + 1] = logaddexp(log_j[c], a[c] + cell.ln());
    }

    let last = n_z - 1;
    let tail = log_j[last] - a[last];
    let beta = (0.5 * sigma2) * (-tail).exp();
    let u: Vec<f64> = (0..n_z)
        .map(|i| if i == last { 1.0 } else { (log_j[i] - a[i] - tail).exp() })
        .collect();

    let ranges = smooth_ranges(&z, &breaks);
    let mut u_residual_max: f64 = 0.0;
    for i in 1..last {
        let (lo, hi) = ranges[i];
        if let Some(d) = derivative_5pt(&u, h, i, lo, hi) {
            u_residual_max = u_residual_max.max((0.5 * sigma2 * d - theta[i] * u[i] - beta).abs());
        }
    }

    Ok(PolicyRejection { beta, z, u, u_residual_max })
}

/// Rejection rate under a constant drift `θ₀`: `θ₀/(e^{2θ₀b/σ²} − 1)`,
/// with a series fallback near `θ₀ = 0`.
pub fn constant_drift_rate(theta: f64, sys: &SystemParams) -> f64 {
    let x = 2.0 * theta * sys.b / sys.sigma2;
    if x.abs() < 1e-8 {
        sys.sigma2 / (2.0 * sys.b) * (1.0 - x / 2.0 + x * x / 12.0)
    } else {
        theta / x.exp_m1()
    }
}

/// `(β*, β_*)`: the rate under constant `θ_*`, and under constant `sup A`
/// (zero when the action set is unbounded).
pub fn beta_bounds(model: &CostModel, sys: &SystemParams) -> (f64, f64) {
    let upper = constant_drift_rate(model.theta_min(), sys);
    let lower = if model.is_bounded() { constant_drift_rate(model.theta_max(), sys) } else { 0.0 };
    (upper, lower)
}

/// Average pure energy cost `γ(p) − pβ(p)`; errors if clearly negative.
pub fn check_duality_gap(gamma: f64, beta: f64, p: f64) -> Result<f64, RejectionError> {
    let gap = gamma - p * beta;
    if gap < -EPS_RESIDUAL * gamma.abs().max(1.0) {
        return Err(RejectionError::DualityViolation { gap });
    }
    Ok(gap)
}

#[derive(Debug, Clone)]
pub struct RejectionReport {
    pub beta: f64,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub beta_upper: f64,
    pub beta_lower: f64,
    pub p0: f64,
    pub u_residual_max: f64,
    /// `γ(p) − pβ(p)`.
    pub gap: f64,
}

/// Rejection analysis of the optimal policy of a Bellman solution.
pub fn rejection_report(model: &CostModel, solution: &BellmanSolution) -> Result<RejectionReport, RejectionError> {
    let sys = solution.params.system();
    let policy = OptimalPolicy::new(model, solution);
    let r = analyze_policy(&policy, &sys, solution.z.len(), 1e-13)?;
    let scale = solution
        .theta
        .iter()
        .zip(&r.u)
        .map(|(t, u)| t.abs() * u)
        .fold(r.beta, f64::max)
        .max(1.0);
    let tolerance = EPS_RESIDUAL * scale;
    if !(r.u_residual_max <= tolerance) {
        return Err(RejectionError::UResidualTooLarge { residual: r.u_residual_max, tolerance });
    }
    let gap = check_duality_gap(solution.gamma, r.beta, solution.params.p)?;
    let (beta_upper, beta_lower) = beta_bounds(model, &sys);
    Ok(RejectionReport {
        beta: r.beta,
        z: r.z,
        u: r.u,
        beta_upper,
        beta_lower,
        p0: model.p_zero(),
        u_residual_max: r.u_residual_max,
        gap,
    })
}
