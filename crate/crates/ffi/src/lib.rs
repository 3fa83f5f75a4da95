//! C ABI for the drift-rate solver.
//!
//! Every function returns a [`DrStatus`]; results come back through out
//! pointers. Models and solutions are opaque handles owned by the caller and
//! released with the matching `*_free` function. After a failed call,
//! [`dr_last_error_message`] describes the failure on the calling thread.
//! No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use driftrate::bellman::{self, BellmanError, BellmanSolution, ProblemParams, SolverSettings, SystemParams};
use driftrate::config::{self, ConfigError};
use driftrate::constrained::{self, ConstrainedError, ConstraintSpec, DualStatus};
use driftrate::cost_model::{CostModel, ModelError};
use driftrate::rejection::{self, RejectionReport};
use driftrate::simulator::{self, SimConfig, SimError};
use driftrate::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range, or a string was not valid UTF-8.
    InvalidArgument = 2,
    /// The configuration text could not be parsed.
    Parse = 3,
    /// The cost model violates a modelling assumption.
    Model = 4,
    /// A solver step failed to converge or a numerical check failed.
    Numerical = 5,
    /// The drop-rate budget is below the smallest attainable rate.
    Infeasible = 6,
    /// A Monte Carlo check disagreed with the analytic values.
    Validation = 7,
    /// The caller's buffer is shorter than the data.
    BufferTooSmall = 8,
    /// An internal panic was caught.
    Panic = 9,
}

/// A validated cost model together with its system parameters.
pub struct DrModel {
    model: CostModel,
    sys: Option<SystemParams>,
}

/// A solved penalty problem.
pub struct DrSolution {
    model: CostModel,
    solution: BellmanSolution,
    report: RejectionReport,
}

/// Scalar results of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DrSummary {
    pub sigma2: f64,
    pub b: f64,
    pub p: f64,
    pub gamma: f64,
    pub beta: f64,
    /// `gamma - p * beta`, the average energy cost.
    pub gap: f64,
    pub residual_max: f64,
    pub phi_star: f64,
    pub beta_upper: f64,
    pub beta_lower: f64,
    pub p0: f64,
    pub n_z: usize,
}

/// Result of the constrained solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DrDual {
    pub beta_hat: f64,
    pub p_star: f64,
    pub gamma: f64,
    pub beta: f64,
    pub energy_cost: f64,
    pub beta_upper: f64,
    pub beta_lower: f64,
    /// 1 if the budget binds, 0 if it is slack.
    pub binding: i32,
}

/// Simulation settings; see [`dr_sim_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DrSimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub burn_in: f64,
    pub boundary_correction: i32,
    /// Relative tolerance of the agreement checks.
    pub tol_mc: f64,
}

/// Monte Carlo estimates under the optimal policy.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DrSimSummary {
    pub avg_cost_mean: f64,
    pub avg_cost_se: f64,
    pub drop_rate_mean: f64,
    pub drop_rate_se: f64,
    pub lower_push_rate_mean: f64,
    /// 1 if both agreement checks pass.
    pub passed: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: DrStatus, msg: impl AsRef<str>) -> DrStatus {
    set_error(msg.as_ref());
    status
}

fn status_of(e: &Error) -> DrStatus {
    match e {
        Error::Config(ConfigError::Parse(_)) => DrStatus::Parse,
        Error::Config(_) | Error::Usage(_) | Error::Io { .. } => DrStatus::InvalidArgument,
        Error::Bellman(BellmanError::StateOutOfRange { .. }) | Error::Model(ModelError::NotInActionSet { .. }) => {
            DrStatus::InvalidArgument
        }
        Error::Constrained(ConstrainedError::InfeasibleBudget { .. }) => DrStatus::Infeasible,
        Error::Sim(SimError::ValidationFailed { .. }) => DrStatus::Validation,
        other => match other.exit_code() {
            driftrate::ExitCode::Usage => DrStatus::InvalidArgument,
            driftrate::ExitCode::Model => DrStatus::Model,
            driftrate::ExitCode::Validation => DrStatus::Validation,
            _ => DrStatus::Numerical,
        },
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> DrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DrStatus::Ok
        }
        Ok(Err(e)) => fail(status_of(&e), e.to_string()),
        Err(_) => fail(DrStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(DrStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn boxed_model(out: *mut *mut DrModel, model: CostModel, sys: Option<SystemParams>) {
    // SAFETY: the caller checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(DrModel { model, sys })) };
}

/// Builds a model from the text of a TOML run configuration (a `[model]` or
/// `[wireless]` block plus `[params]`).
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dr_model_from_toml(toml: *const c_char, out: *mut *mut DrModel) -> DrStatus {
    non_null!(toml, out);
    let Ok(text) = CStr::from_ptr(toml).to_str() else {
        return fail(DrStatus::InvalidArgument, "configuration is not valid UTF-8");
    };
    guard(|| {
        let cfg = config::parse(text)?;
        let (model, sys) = cfg.build()?;
        boxed_model(out, model, Some(sys));
        Ok(())
    })
}

/// Exponential energy cost on `[theta_min, inf)` with buffer `lambda * d`
/// and variance `sigma^2`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dr_model_wireless(
    lambda: f64,
    d: f64,
    alpha: f64,
    sigma: f64,
    theta_min: f64,
    out: *mut *mut DrModel,
) -> DrStatus {
    non_null!(out);
    guard(|| {
        let (model, sys) = constrained::wireless_setup(lambda, d, alpha, sigma, theta_min)?;
        boxed_model(out, model, Some(sys));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from a `dr_model_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dr_model_free(model: *mut DrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// System parameters stored with the model.
///
/// # Safety
/// `model` must be a live handle; `sigma2` and `b` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn dr_model_system(model: *const DrModel, sigma2: *mut f64, b: *mut f64) -> DrStatus {
    non_null!(model, sigma2, b);
    match (*model).sys {
        Some(s) => {
            *sigma2 = s.sigma2;
            *b = s.b;
            set_error("");
            DrStatus::Ok
        }
        None => fail(DrStatus::InvalidArgument, "model has no system parameters"),
    }
}

unsafe fn model_scalar(model: *const DrModel, out: *mut f64, f: impl FnOnce(&CostModel) -> Result<f64, Error>) -> DrStatus {
    non_null!(model, out);
    let m = &(*model).model;
    guard(|| {
        *out = f(m)?;
        Ok(())
    })
}

/// `c(x)`; fails with `DR_STATUS_INVALID_ARGUMENT` if `x` is not an action.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_eval_cost(model: *const DrModel, x: f64, out: *mut f64) -> DrStatus {
    model_scalar(model, out, |m| Ok(m.eval_cost(x)?))
}

/// Smallest maximizer of `y x - c(x)`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_psi(model: *const DrModel, y: f64, out: *mut f64) -> DrStatus {
    model_scalar(model, out, |m| Ok(m.psi(y)))
}

/// `sup_x { y x - c(x) }`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_phi(model: *const DrModel, y: f64, out: *mut f64) -> DrStatus {
    model_scalar(model, out, |m| Ok(m.phi(y)))
}

/// Largest level at which the least drift is still optimal; may be `inf`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_model_p_zero(model: *const DrModel, out: *mut f64) -> DrStatus {
    model_scalar(model, out, |m| Ok(m.p_zero()))
}

fn settings(n_z: usize) -> SolverSettings {
    let mut s = SolverSettings::default();
    if n_z > 0 {
        s.n_z = n_z;
    }
    s
}

/// Solves the penalty problem. `n_z = 0` selects the default grid size.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_solve(
    model: *const DrModel,
    sigma2: f64,
    b: f64,
    p: f64,
    n_z: usize,
    out: *mut *mut DrSolution,
) -> DrStatus {
    non_null!(model, out);
    let m = &(*model).model;
    guard(|| {
        let params = ProblemParams::new(sigma2, b, p)?;
        let solution = bellman::solve(m, &params, &settings(n_z))?;
        let report = rejection::rejection_report(m, &solution)?;
        *out = Box::into_raw(Box::new(DrSolution { model: m.clone(), solution, report }));
        Ok(())
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must come from [`dr_solve`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dr_solution_free(solution: *mut DrSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Scalar results of a solve.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_solution_summary(solution: *const DrSolution, out: *mut DrSummary) -> DrStatus {
    non_null!(solution, out);
    let s = &*solution;
    let sol = &s.solution;
    *out = DrSummary {
        sigma2: sol.params.sigma2,
        b: sol.params.b,
        p: sol.params.p,
        gamma: sol.gamma,
        beta: s.report.beta,
        gap: s.report.gap,
        residual_max: sol.residual_max,
        phi_star: sol.phi_star,
        beta_upper: s.report.beta_upper,
        beta_lower: s.report.beta_lower,
        p0: s.report.p0,
        n_z: sol.z.len(),
    };
    set_error("");
    DrStatus::Ok
}

/// Copies the grid tables into caller buffers of length `len`. Any of the
/// four buffers may be null to skip it. Fails with
/// `DR_STATUS_BUFFER_TOO_SMALL` if `len` is below the grid size.
///
/// # Safety
/// Each non-null buffer must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dr_solution_grid(
    solution: *const DrSolution,
    z: *mut f64,
    v: *mut f64,
    f: *mut f64,
    theta: *mut f64,
    len: usize,
) -> DrStatus {
    non_null!(solution);
    let sol = &(*solution).solution;
    let n = sol.z.len();
    if len < n {
        return fail(DrStatus::BufferTooSmall, format!("grid has {n} points, buffer holds {len}"));
    }
    for (dst, src) in [(z, &sol.z), (v, &sol.v), (f, &sol.f), (theta, &sol.theta)] {
        if !dst.is_null() {
            ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
        }
    }
    set_error("");
    DrStatus::Ok
}

/// Optimal drift at state `z` in `[0, b]`.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_solution_policy(solution: *const DrSolution, z: f64, out: *mut f64) -> DrStatus {
    non_null!(solution, out);
    let s = &*solution;
    guard(|| {
        *out = s.solution.policy(&s.model, z)?;
        Ok(())
    })
}

/// Finds the penalty whose optimal policy drops at rate `beta_hat`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_solve_pstar(
    model: *const DrModel,
    sigma2: f64,
    b: f64,
    beta_hat: f64,
    out: *mut DrDual,
) -> DrStatus {
    non_null!(model, out);
    let m = &(*model).model;
    guard(|| {
        let sys = SystemParams::new(sigma2, b)?;
        let d = constrained::solve_pstar(m, &sys, &ConstraintSpec { beta_hat }, &SolverSettings::default())?;
        *out = DrDual {
            beta_hat: d.beta_hat,
            p_star: d.p_star,
            gamma: d.gamma,
            beta: d.beta,
            energy_cost: d.energy_cost,
            beta_upper: d.beta_upper,
            beta_lower: d.beta_lower,
            binding: (d.status == DualStatus::Binding) as i32,
        };
        Ok(())
    })
}

/// Default simulation settings.
#[no_mangle]
pub extern "C" fn dr_sim_config_default() -> DrSimConfig {
    let d = SimConfig::default();
    DrSimConfig {
        dt: d.dt,
        horizon: d.horizon,
        n_reps: d.n_reps,
        seed: d.seed,
        burn_in: d.burn_in,
        boundary_correction: d.boundary_correction as i32,
        tol_mc: 0.02,
    }
}

/// Simulates the optimal policy of `solution`. A disagreement with the
/// analytic values is reported through `passed`, not as an error.
///
/// # Safety
/// `solution` and `config` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_simulate(
    solution: *const DrSolution,
    config: *const DrSimConfig,
    out: *mut DrSimSummary,
) -> DrStatus {
    non_null!(solution, config, out);
    let s = &*solution;
    let c = *config;
    guard(|| {
        let cfg = SimConfig {
            dt: c.dt,
            horizon: c.horizon,
            n_reps: c.n_reps,
            seed: c.seed,
            burn_in: c.burn_in,
            boundary_correction: c.boundary_correction != 0,
            ..SimConfig::default()
        };
        let r = simulator::assess_solution(&s.model, &s.solution, &s.report, &cfg, c.tol_mc)?;
        *out = DrSimSummary {
            avg_cost_mean: r.sim.avg_cost.mean,
            avg_cost_se: r.sim.avg_cost.se,
            drop_rate_mean: r.sim.drop_rate.mean,
            drop_rate_se: r.sim.drop_rate.se,
            lower_push_rate_mean: r.sim.lower_push_rate.mean,
            passed: r.passed() as i32,
        };
        Ok(())
    })
}
