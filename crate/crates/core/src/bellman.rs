//! Average-cost Bellman equation on `[0, b]`.
//!
//! The marginal value `v = f′` satisfies `(σ²/2)v′ − φ(v) = γ` with
//! `v(0) = 0` and `v(b) = p`. Separating variables gives
//! `G(v) = (σ²/2)∫₀^v du/(φ(u)+γ) = z`, so `γ(p)` is the root of
//! `(σ²/2)F(γ, p) = b` with `F(γ, p) = ∫₀^p du/(φ(u)+γ)`, and `v(·, p)` is the
//! inverse of `G`. The optimal policy is `θ(z) = ψ(v(z))`.

use thiserror::Error;

use crate::cost_model::CostModel;
use crate::numerics::{
    brent, derivative_5pt, integrate, InterpError, MonotoneCubic, QuadError, QuadOptions, RootError,
    RootOptions,
};

pub const EPS_RESIDUAL: f64 = 1e-6;
pub const EPS_ROOT: f64 = 1e-10;
pub const EPS_BVP: f64 = 1e-6;
pub const EPS_QUAD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellmanError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("gamma = {gamma:e} is not above phi_star(p) = {phi_star:e}")]
    GammaOutOfRange { gamma: f64, phi_star: f64 },
    #[error("could not bracket the average cost: {0}")]
    BracketingFailed(String),
    #[error("ODE cross-check failed: v(b) = {v_end} from the shooting integration, expected p = {p}")]
    EndpointMismatch { v_end: f64, p: f64 },
    #[error("state {z} is outside [0, {b}]")]
    StateOutOfRange { z: f64, b: f64 },
    #[error("Bellman residual {residual:e} exceeds the tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("grid needs at least 9 points, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Interpolation(#[from] InterpError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, BellmanError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BellmanError::NonPositiveParameter { name, value })
    }
}

/// Volatility and buffer size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub sigma2: f64,
    pub b: f64,
}

impl SystemParams {
    pub fn new(sigma2: f64, b: f64) -> Result<Self, BellmanError> {
        Ok(Self { sigma2: positive("sigma2", sigma2)?, b: positive("b", b)? })
    }

    pub fn with_p(self, p: f64) -> Result<ProblemParams, BellmanError> {
        ProblemParams::new(self.sigma2, self.b, p)
    }
}

/// Volatility, buffer size and the per-unit rejection penalty `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub sigma2: f64,
    pub b: f64,
    pub p: f64,
}

impl ProblemParams {
    pub fn new(sigma2: f64, b: f64, p: f64) -> Result<Self, BellmanError> {
        Ok(Self {
            sigma2: positive("sigma2", sigma2)?,
            b: positive("b", b)?,
            p: positive("p", p)?,
        })
    }

    pub fn system(&self) -> SystemParams {
        SystemParams { sigma2: self.sigma2, b: self.b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Number of uniform z-grid points, endpoints included.
    pub n_z: usize,
    pub quad_rel_tol: f64,
    /// Relative tolerance on `γ − φ_*(p)`.
    pub gamma_rel_tol: f64,
    /// Residual gate, scaled by `max(1, φ(p) + γ)`.
    pub residual_tol: f64,
    pub bvp_rel_tol: f64,
    pub min_ode_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_z: 1025,
            quad_rel_tol: 1e-12,
            gamma_rel_tol: 1e-14,
            residual_tol: EPS_RESIDUAL,
            bvp_rel_tol: EPS_BVP,
            min_ode_steps: 8192,
        }
    }
}

fn quad_splits(model: &CostModel) -> Vec<f64> {
    let mut s = model.breakpoints().to_vec();
    let y0 = model.phi_argmin();
    if y0.is_finite() && y0 > 0.0 {
        s.push(y0);
    }
    s.sort_by(f64::total_cmp);
    s
}

/// `F(γ, p) = ∫₀^p du / (φ(u) + γ)`.
pub fn integral_f(model: &CostModel, gamma: f64, p: f64, rel_tol: f64) -> Result<f64, BellmanError> {
    let phi_star = model.phi_star(p);
    if !(gamma > phi_star) || !gamma.is_finite() {
        return Err(BellmanError::GammaOutOfRange { gamma, phi_star });
    }
    let splits = quad_splits(model);
    integral_f_with(model, gamma, 0.0, p, &splits, rel_tol)
}

fn integral_f_with(
    model: &CostModel,
    gamma: f64,
    a: f64,
    b: f64,
    splits: &[f64],
    rel_tol: f64,
) -> Result<f64, BellmanError> {
    Ok(integrate(
        |u| 1.0 / (model.phi(u) + gamma),
        a,
        b,
        splits,
        QuadOptions::with_rel_tol(rel_tol),
    )?)
}

/// Root `γ(p)` of `(σ²/2)F(γ, p) = b`.
pub fn solve_gamma(model: &CostModel, params: &ProblemParams, settings: &SolverSettings) -> Result<f64, BellmanError> {
    let ProblemParams { sigma2, b, p } = *params;
    let target = 2.0 * b / sigma2;
    let phi_star = model.phi_star(p);
    let splits = quad_splits(model);
    let excess = |delta: f64| -> Result<f64, BellmanError> {
        Ok(integral_f_with(model, phi_star + delta, 0.0, p, &splits, settings.quad_rel_tol)? - target)
    };

    let mut gamma_hi = (phi_star + 1.0).max(1.0);
    let mut h_hi = excess(gamma_hi - phi_star)?;
    let mut doublings = 0;
    while h_hi >= 0.0 {
        gamma_hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !gamma_hi.is_finite() {
            return Err(BellmanError::BracketingFailed(format!(
                "F stays above 2b/sigma2 up to gamma = {gamma_hi:e}"
            )));
        }
        h_hi = excess(gamma_hi - phi_star)?;
    }
    let delta_hi = gamma_hi - phi_star;

    // Zero phi_star allows gamma far below the relative cap, e.g. strong
    // constant drift with a large buffer.
    let cap = if phi_star > 0.0 { (1e-14 * phi_star).max(1e-280) } else { 1e-280 };
    let mut delta_lo = 0.5 * delta_hi;
    let mut h_lo = excess(delta_lo)?;
    while h_lo <= 0.0 {
        delta_lo /= 16.0;
        if delta_lo < cap || phi_star + delta_lo <= phi_star {
            return Err(BellmanError::BracketingFailed(format!(
                "F stays below 2b/sigma2 down to gamma - phi_star = {delta_lo:e}"
            )));
        }
        h_lo = excess(delta_lo)?;
    }

    let mut failure = None;
    let root = brent(
        |s: f64| match excess(s.exp()) {
            Ok(h) => h,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        delta_lo.ln(),
        delta_hi.ln(),
        RootOptions { xtol_abs: settings.gamma_rel_tol, xtol_rel: 0.0, max_iter: 300 },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(phi_star + root?.x.exp())
}

/// Tabulated `v(·, p)` on the uniform z-grid.
#[derive(Debug, Clone)]
pub struct VTable {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    /// Exact derivative `v′ = (2/σ²)(φ(v) + γ)` at each node.
    pub dv: Vec<f64>,
    /// States `z = G(y)` for every breakpoint `y < p` of `ψ`.
    pub z_breakpoints: Vec<f64>,
    /// `v(b)` from the independent fixed-step shooting integration.
    pub v_ode_end: f64,
}

/// Builds `v(z_i, p)` by inverting `G` node by node.
///
/// Each node solves `∫_{v_{i-1}}^{v_i} (σ²/2)/(φ+γ) = z_i − z_{i−1}` by
/// safeguarded Newton, using exact adaptive quadrature for the partial
/// integral. The endpoint values are then pinned to `0` and `p`.
pub fn solve_v(
    model: &CostModel,
    params: &ProblemParams,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<VTable, BellmanError> {
    let ProblemParams { sigma2, b, p } = *params;
    let n = settings.n_z;
    if n < 9 {
        return Err(BellmanError::GridTooSmall(n));
    }
    let phi_star = model.phi_star(p);
    if !(gamma > phi_star) {
        return Err(BellmanError::GammaOutOfRange { gamma, phi_star });
    }
    let splits = quad_splits(model);
    let half_s2 = 0.5 * sigma2;
    let w = |u: f64| half_s2 / (model.phi(u) + gamma);
    let h = b / (n - 1) as f64;
    let z: Vec<f64> = (0..n).map(|i| if i + 1 == n { b } else { i as f64 * h }).collect();

    let mut v = vec![0.0; n];
    for i in 1..n - 1 {
        let v_prev = v[i - 1];
        let dz = z[i] - z[i - 1];
        let g = |x: f64| -> Result<f64, BellmanError> {
            Ok(half_s2 * integral_f_with(model, gamma, v_prev, x, &splits, settings.quad_rel_tol)? - dz)
        };
        let (mut lo, mut hi) = (v_prev, p);
        let mut x = (v_prev + dz / w(v_prev)).min(p);
        // Midpoint slope for a second-order starting guess.
        x = (v_prev + dz / w(0.5 * (v_prev + x))).clamp(v_prev, p);
        for _ in 0..200 {
            let gx = g(x)?;
            if gx == 0.0 {
                break;
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - gx / w(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
                break;
            }
        }
        v[i] = x;
    }
    v[n - 1] = p;

    let dv: Vec<f64> = v.iter().map(|&x| (model.phi(x) + gamma) / half_s2).collect();

    let mut z_breakpoints = Vec::new();
    for &y in model.breakpoints().iter().filter(|&&y| y < p) {
        z_breakpoints.push(half_s2 * integral_f_with(model, gamma, 0.0, y, &splits, settings.quad_rel_tol)?);
    }

    let v_ode_end = shoot(model, params, gamma, settings);
    if !((v_ode_end - p).abs() <= settings.bvp_rel_tol * p) {
        return Err(BellmanError::EndpointMismatch { v_end: v_ode_end, p });
    }

    Ok(VTable { z, v, dv, z_breakpoints, v_ode_end })
}

/// Classical RK4 on `v′ = (2/σ²)(φ(v) + γ)` from `v(0) = 0` to `z = b`.
fn shoot(model: &CostModel, params: &ProblemParams, gamma: f64, settings: &SolverSettings) -> f64 {
    let ProblemParams { sigma2, b, p } = *params;
    let k = 2.0 / sigma2;
    let rhs = |x: f64| k * (model.phi(x.max(0.0)) + gamma);
    // Keep the step well inside the stability region of the fastest mode.
    let rate = k * model.psi(p).abs();
    let steps = settings.min_ode_steps.max((b * rate / 0.05).ceil().min(1e7) as usize);
    let h = b / steps as f64;
    let mut x = 0.0;
    for _ in 0..steps {
        let k1 = rhs(x);
        let k2 = rhs(x + 0.5 * h * k1);
        let k3 = rhs(x + 0.5 * h * k2);
        let k4 = rhs(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

/// Monotone Hermite interpolant through the v-table.
///
/// The exact slopes are limited to the Fritsch–Carlson region so the
/// interpolant stays increasing.
pub fn v_interpolant(table: &VTable) -> Result<MonotoneCubic, BellmanError> {
    let n = table.z.len();
    let secant: Vec<f64> = (0..n - 1)
        .map(|k| (table.v[k + 1] - table.v[k]) / (table.z[k + 1] - table.z[k]))
        .collect();
    let ds: Vec<f64> = (0..n)
        .map(|i| {
            let lim = match i {
                0 => secant[0],
                i if i == n - 1 => secant[n - 2],
                i => secant[i - 1].min(secant[i]),
            };
            table.dv[i].clamp(0.0, 3.0 * lim.max(0.0))
        })
        .collect();
    Ok(MonotoneCubic::with_slopes(table.z.clone(), table.v.clone(), ds)?)
}

/// `f(z_i, p) = ∫₀^{z_i} v`, integrating the Hermite interpolant exactly.
pub fn relative_value(interp: &MonotoneCubic) -> Vec<f64> {
    interp.cumulative_integral()
}

/// For each node, the inclusive index range of nodes on the same smooth
/// piece (no breakpoint strictly inside).
pub(crate) fn smooth_ranges(z: &[f64], breaks: &[f64]) -> Vec<(usize, usize)> {
    let n = z.len();
    let seg: Vec<usize> = z.iter().map(|&x| breaks.partition_point(|&b| b < x)).collect();
    let mut out = vec![(0, 0); n];
    let mut start = 0;
    for i in 0..n {
        if i + 1 == n || seg[i + 1] != seg[i] {
            for r in out.iter_mut().take(i + 1).skip(start) {
                *r = (start, i);
            }
            start = i + 1;
        }
    }
    out
}

/// Max of `|(σ²/2)v′(z) − φ(v(z)) − γ|` over interior nodes, with `v′` from
/// fourth-order finite differences that never straddle a breakpoint.
pub fn bellman_residual(
    model: &CostModel,
    params: &ProblemParams,
    gamma: f64,
    z: &[f64],
    v: &[f64],
    z_breakpoints: &[f64],
) -> f64 {
    let n = z.len();
    let h = params.b / (n - 1) as f64;
    let ranges = smooth_ranges(z, z_breakpoints);
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let (lo, hi) = ranges[i];
        if let Some(d) = derivative_5pt(v, h, i, lo, hi) {
            let r = (0.5 * params.sigma2 * d - model.phi(v[i]) - gamma).abs();
            worst = worst.max(r);
        }
    }
    worst
}

/// Complete solution of the Bellman equation for one penalty `p`.
#[derive(Debug, Clone)]
pub struct BellmanSolution {
    pub params: ProblemParams,
    pub gamma: f64,
    pub phi_star: f64,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    pub theta: Vec<f64>,
    pub residual_max: f64,
    pub v_ode_end: f64,
    /// States where the policy jumps or changes analytic form.
    pub z_breakpoints: Vec<f64>,
    v_interp: MonotoneCubic,
}

impl BellmanSolution {
    /// Interpolated `v(z, p)`.
    pub fn v_at(&self, z: f64) -> f64 {
        self.v_interp.eval(z)
    }

    /// `θ(z, p) = ψ(v(z, p))`.
    pub fn policy(&self, model: &CostModel, z: f64) -> Result<f64, BellmanError> {
        let b = self.params.b;
        if !(z >= 0.0 && z <= b) {
            return Err(BellmanError::StateOutOfRange { z, b });
        }
        Ok(model.psi(self.v_interp.eval(z)))
    }

    /// Policy at a state known to lie in `[0, b]` (clamped otherwise).
    pub fn policy_unchecked(&self, model: &CostModel, z: f64) -> f64 {
        model.psi(self.v_interp.eval(z))
    }

    /// Residual gate applied by [`solve`].
    pub fn residual_tolerance(&self, model: &CostModel, settings: &SolverSettings) -> f64 {
        settings.residual_tol * (model.phi(self.params.p) + self.gamma).max(1.0)
    }
}

/// Solves for `γ(p)`, `v`, `f` and the policy, then gates on the residual.
pub fn solve(model: &CostModel, params: &ProblemParams, settings: &SolverSettings) -> Result<BellmanSolution, BellmanError> {
    let gamma = solve_gamma(model, params, settings)?;
    let table = solve_v(model, params, gamma, settings)?;
    let interp = v_interpolant(&table)?;
    let f = relative_value(&interp);
    let theta = table.v.iter().map(|&x| model.psi(x)).collect();
    let residual_max = bellman_residual(model, params, gamma, &table.z, &table.v, &table.z_breakpoints);
    let sol = BellmanSolution {
        params: *params,
        gamma,
        phi_star: model.phi_star(params.p),
        z: table.z,
        v: table.v,
        f,
        theta,
        residual_max,
        v_ode_end: table.v_ode_end,
        z_breakpoints: table.z_breakpoints,
        v_interp: interp,
    };
    let tolerance = sol.residual_tolerance(model, settings);
    if !(residual_max <= tolerance) {
        return Err(BellmanError::ResidualTooLarge { residual: residual_max, tolerance });
    }
    Ok(sol)
}
