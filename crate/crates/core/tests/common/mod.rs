//! Independent reference computations for the integration tests.
//!
//! Nothing here calls the library's quadrature, root finder or interpolator:
//! integrals use composite Gauss–Legendre rules, roots use plain bisection,
//! and the exponential-cost conjugate is written in closed form.
#![allow(dead_code)]

use driftrate::cost_model::{validate, ActionSet, CostModel, CostPiece, CostSpec, Segment};

/// Values frozen from a 40-digit evaluation.
pub mod frozen {
    pub const E_MINUS_1: f64 = 1.718_281_828_459_045;
    pub const TWO_LN2_MINUS_1: f64 = 0.386_294_361_119_890_6;
    pub const INV_E2_MINUS_1: f64 = 0.156_517_642_749_665_65;
    pub const TWO_OVER_E2_MINUS_1: f64 = 0.313_035_285_499_331_3;
    pub const TWO_OVER_E4_MINUS_1: f64 = 0.037_314_720_727_548_096;
    /// Exponential cost `α = 1`, `θ_* = 0`, `σ = 1`, `b = 1`: `(p, γ(p), β(p))`.
    pub const EXP_CASES: [(f64, f64, f64); 4] = [
        (0.5, 0.25, 0.5),
        (2.0, 0.941_694_413_785_492_1, 0.373_326_838_994_689_9),
        (5.0, 1.723_351_199_867_109_8, 0.190_438_494_740_580_27),
        (20.0, 3.247_350_951_429_759_2, 0.062_619_466_373_222_46),
    ];
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Composite 20-point Gauss–Legendre with `panels` equal panels between
/// consecutive split points.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, splits: &[f64], panels: usize) -> f64 {
    let (xs, ws) = gauss_legendre(20);
    let mut pts = vec![a];
    pts.extend(splits.iter().copied().filter(|&s| s > a && s < b));
    pts.push(b);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let lo = w[0] + k as f64 * h;
            let mid = lo + 0.5 * h;
            total += 0.5 * h * xs.iter().zip(&ws).map(|(x, wt)| wt * f(mid + 0.5 * h * x)).sum::<f64>();
        }
    }
    total
}

pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `c(x) = e^{α(x−θ)} − 1` on `[θ, ∞)`.
pub fn exp_model(alpha: f64, theta: f64) -> CostModel {
    validate(
        &ActionSet::interval(theta, f64::INFINITY),
        &CostSpec::new(vec![CostPiece::exponential(alpha, theta)]),
    )
    .unwrap()
}

pub fn exp_psi(alpha: f64, theta: f64, y: f64) -> f64 {
    if y <= alpha {
        theta
    } else {
        theta + (y / alpha).ln() / alpha
    }
}

pub fn exp_phi(alpha: f64, theta: f64, y: f64) -> f64 {
    if y <= alpha {
        y * theta
    } else {
        let x = exp_psi(alpha, theta, y);
        y * x - (y / alpha - 1.0)
    }
}

pub fn singleton(theta: f64) -> CostModel {
    validate(&ActionSet::singleton(theta), &CostSpec::new(vec![CostPiece::constant(0.0)])).unwrap()
}

/// `{0} ∪ [1, 2]` with `c = 0.5 + (x − 1)` on the interval.
pub fn point_and_interval() -> CostModel {
    validate(
        &ActionSet::new(vec![Segment::point(0.0), Segment::interval(1.0, 2.0)]),
        &CostSpec::new(vec![CostPiece::constant(0.0), CostPiece::Linear { slope: 1.0, intercept: -0.5 }]),
    )
    .unwrap()
}

/// Two actions `{0, 1}` with `c(1) = c1`.
pub fn two_point(c1: f64) -> CostModel {
    validate(
        &ActionSet::points(&[0.0, 1.0]),
        &CostSpec::new(vec![CostPiece::constant(0.0), CostPiece::constant(c1)]),
    )
    .unwrap()
}

/// `γ(p)` for a single action `θ`: inverting `(σ²/2)·ln((θp+γ)/γ)/θ = b`.
pub fn singleton_gamma(theta: f64, sigma2: f64, b: f64, p: f64) -> f64 {
    if theta == 0.0 {
        sigma2 * p / (2.0 * b)
    } else {
        theta * p / (2.0 * theta * b / sigma2).exp_m1()
    }
}

pub fn singleton_v(theta: f64, gamma: f64, sigma2: f64, z: f64) -> f64 {
    if theta == 0.0 {
        2.0 * gamma * z / sigma2
    } else {
        gamma * (2.0 * theta * z / sigma2).exp_m1() / theta
    }
}

/// `θ/(e^{2θb/σ²} − 1)`, with its zero-drift limit.
pub fn constant_beta(theta: f64, sigma2: f64, b: f64) -> f64 {
    if theta == 0.0 {
        sigma2 / (2.0 * b)
    } else {
        theta / (2.0 * theta * b / sigma2).exp_m1()
    }
}

/// `γ(p)` by bisection on a Gauss–Legendre evaluation of `F`, for a
/// conjugate with `φ ≥ 0`.
pub fn gamma_oracle(phi: impl Fn(f64) -> f64, splits: &[f64], sigma2: f64, b: f64, p: f64) -> f64 {
    let target = 2.0 * b / sigma2;
    let f = |g: f64| integrate_gl(|u| 1.0 / (phi(u) + g), 0.0, p, splits, 200) - target;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while f(lo) < 0.0 {
        lo /= 2.0;
    }
    bisect(f, lo, hi)
}

/// Rejection rate of the optimal policy. With `I(z) = ∫₀^z ψ(v)`, `φ′ = ψ`
/// and `v′ = (2/σ²)(φ(v)+γ)` give `e^{−2I(z)/σ²} = γ/(φ(v(z))+γ)`, so
/// `β = 1 / ((φ(p)+γ)·∫₀^p du/(φ(u)+γ)²)`.
pub fn beta_oracle(phi: impl Fn(f64) -> f64, splits: &[f64], gamma: f64, p: f64) -> f64 {
    let i2 = integrate_gl(|u| (phi(u) + gamma).powi(-2), 0.0, p, splits, 200);
    1.0 / ((phi(p) + gamma) * i2)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
