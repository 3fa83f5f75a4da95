//! Rejection-rate budget `β ≤ β̂` handled by dualization: find the penalty
//! `p*` with `β(p*) = β̂` and use the penalized optimal policy.

use std::cell::RefCell;

use thiserror::Error;

use crate::bellman::{self, BellmanError, BellmanSolution, SolverSettings, SystemParams};
use crate::cost_model::{validate, ActionSet, CostModel, CostPiece, CostSpec, ModelError};
use crate::numerics::{brent_with_values, RootError, RootOptions};
use crate::rejection::{beta_bounds, rejection_report, RejectionError, RejectionReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstrainedError {
    #[error("budget beta_hat = {beta_hat:e} is not above the smallest attainable rate {beta_lower:e}")]
    InfeasibleBudget { beta_hat: f64, beta_lower: f64 },
    #[error("budget beta_hat must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("could not bracket the dual penalty: {0}")]
    BracketingFailed(String),
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Bellman(#[from] BellmanError),
    #[error(transparent)]
    Rejection(#[from] RejectionError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    pub beta_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualStatus {
    /// The budget binds and `β(p*) = β̂`.
    Binding,
    /// `β̂ ≥ β*`: the free policy `θ ≡ θ_*` already meets the budget.
    Slack,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub beta_hat: f64,
    pub p_star: f64,
    pub gamma: f64,
    /// `β(p*)` as computed, equal to `β̂` up to the root tolerance.
    pub beta: f64,
    /// Average energy cost `γ(p*) − p*β̂`.
    pub energy_cost: f64,
    pub status: DualStatus,
    pub beta_upper: f64,
    pub beta_lower: f64,
    pub iterations: usize,
    /// `None` in the slack case, where the policy is constant `θ_*`.
    pub solution: Option<BellmanSolution>,
    pub report: Option<RejectionReport>,
}

impl DualSolution {
    pub fn warning(&self) -> Option<String> {
        (self.status == DualStatus::Slack).then(|| {
            format!(
                "budget beta_hat = {} is at or above beta* = {}: constraint is slack, using the constant least-drift policy",
                self.beta_hat, self.beta_upper
            )
        })
    }
}

/// Finds `p*` with `β(p*) = β̂`.
pub fn solve_pstar(
    model: &CostModel,
    sys: &SystemParams,
    spec: &ConstraintSpec,
    settings: &SolverSettings,
) -> Result<DualSolution, ConstrainedError> {
    let beta_hat = spec.beta_hat;
    if !(beta_hat > 0.0 && beta_hat.is_finite()) {
        return Err(ConstrainedError::InvalidBudget(beta_hat));
    }
    let (beta_upper, beta_lower) = beta_bounds(model, sys);
    if beta_hat <= beta_lower {
        return Err(ConstrainedError::InfeasibleBudget { beta_hat, beta_lower });
    }
    if beta_hat >= beta_upper {
        return Ok(DualSolution {
            beta_hat,
            p_star: 0.0,
            gamma: 0.0,
            beta: beta_upper,
            energy_cost: 0.0,
            status: DualStatus::Slack,
            beta_upper,
            beta_lower,
            iterations: 0,
            solution: None,
            report: None,
        });
    }

    let cache: RefCell<Vec<(f64, f64)>> = RefCell::new(Vec::new());
    let beta_at = |p: f64| -> Result<f64, ConstrainedError> {
        if let Some(&(_, b)) = cache.borrow().iter().find(|(q, _)| *q == p) {
            return Ok(b);
        }
        let sol = bellman::solve(model, &sys.with_p(p)?, settings)?;
        let b = rejection_report(model, &sol)?.beta;
        cache.borrow_mut().push((p, b));
        Ok(b)
    };

    let p0 = model.p_zero();
    let mut lo = if p0.is_finite() { p0.max(1e-3) } else { 1e-3 };
    let mut f_lo = beta_at(lo)? - beta_hat;
    let mut guard = 0;
    while f_lo <= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 200 {
            return Err(ConstrainedError::BracketingFailed(format!(
                "beta stays below the budget down to p = {lo:e}"
            )));
        }
        f_lo = beta_at(lo)? - beta_hat;
    }
    let mut hi = 2.0 * lo;
    let mut f_hi = beta_at(hi)? - beta_hat;
    guard = 0;
    while f_hi >= 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(ConstrainedError::BracketingFailed(format!(
                "beta stays above the budget up to p = {hi:e}"
            )));
        }
        f_hi = beta_at(hi)? - beta_hat;
    }

    let mut failure = None;
    let root = brent_with_values(
        |p| match beta_at(p) {
            Ok(b) => b - beta_hat,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        f_lo,
        hi,
        f_hi,
        RootOptions { xtol_abs: 0.0, xtol_rel: 1e-13, max_iter: 60 },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root?;
    let p_star = root.x;
    let solution = bellman::solve(model, &sys.with_p(p_star)?, settings)?;
    let report = rejection_report(model, &solution)?;
    Ok(DualSolution {
        beta_hat,
        p_star,
        gamma: solution.gamma,
        beta: report.beta,
        energy_cost: solution.gamma - p_star * beta_hat,
        status: DualStatus::Binding,
        beta_upper,
        beta_lower,
        iterations: root.iterations,
        solution: Some(solution),
        report: Some(report),
    })
}

/// Exponential energy cost `e^{α(x−θ_*)} − 1` on `[θ_*, ∞)` with buffer
/// `b = λd` (arrival rate times delay bound).
pub fn wireless_setup(
    lambda: f64,
    d: f64,
    alpha: f64,
    sigma: f64,
    theta_min: f64,
) -> Result<(CostModel, SystemParams), ConstrainedError> {
    for (name, value) in [("lambda", lambda), ("d", d), ("alpha", alpha), ("sigma", sigma)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ConstrainedError::NonPositiveParameter { name, value });
        }
    }
    if !theta_min.is_finite() {
        return Err(ConstrainedError::NonPositiveParameter { name: "theta_min", value: theta_min });
    }
    let model = validate(
        &ActionSet::interval(theta_min, f64::INFINITY),
        &CostSpec::new(vec![CostPiece::exponential(alpha, theta_min)]),
    )?;
    let sys = SystemParams::new(sigma * sigma, lambda * d)?;
    Ok((model, sys))
}
