//! Shape-preserving (monotone) piecewise cubic Hermite interpolation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("need at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node abscissae must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("length mismatch: {xs} abscissae vs {ys} values")]
    LengthMismatch { xs: usize, ys: usize },
}

/// Piecewise cubic Hermite interpolant with Fritsch–Butland slopes, so
/// monotone data yields a monotone interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
    uniform: Option<(f64, f64)>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, InterpError> {
        check_nodes(&xs, &ys)?;
        let ds = pchip_slopes(&xs, &ys);
        Ok(Self::assemble(xs, ys, ds))
    }

    /// Uses caller-supplied derivatives at the nodes.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self, InterpError> {
        check_nodes(&xs, &ys)?;
        if ds.len() != xs.len() {
            return Err(InterpError::LengthMismatch { xs: xs.len(), ys: ds.len() });
        }
        Ok(Self::assemble(xs, ys, ds))
    }

    fn assemble(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Self {
        let n = xs.len();
        let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let uniform = xs
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (xs[0] + i as f64 * h)).abs() <= 1e-12 * h.max(x.abs()))
            .then_some((xs[0], h));
        Self { xs, ys, ds, uniform }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ds
    }

    /// Index `k` of the cell `[x_k, x_{k+1}]` containing `x` (clamped).
    fn cell(&self, x: f64) -> usize {
        let n = self.xs.len();
        if let Some((x0, h)) = self.uniform {
            let k = ((x - x0) / h).floor();
            let k = if k.is_nan() || k < 0.0 { 0 } else { (k as usize).min(n - 2) };
            // Uniform guess may be off by one at cell edges.
            if k + 1 < n - 1 && x > self.xs[k + 1] {
                return k + 1;
            }
            if k > 0 && x < self.xs[k] {
                return k - 1;
            }
            return k;
        }
        match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Evaluates the interpolant; `x` is clamped to the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let s = 1.0 - t;
        let s2 = s * s;
        (1.0 + 2.0 * t) * s2 * self.ys[k]
            + t * s2 * h * self.ds[k]
            + t2 * (3.0 - 2.0 * t) * self.ys[k + 1]
            - t2 * s * h * self.ds[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let k = self.cell(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let dy = (self.ys[k + 1] - self.ys[k]) / h;
        6.0 * t * (1.0 - t) * dy
            + (1.0 - t) * (1.0 - 3.0 * t) * self.ds[k]
            + t * (3.0 * t - 2.0) * self.ds[k + 1]
    }

    /// Exact integral of the interpolant from `x_0` to each node.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len());
        let mut acc = 0.0;
        out.push(0.0);
        for k in 0..self.xs.len() - 1 {
            let h = self.xs[k + 1] - self.xs[k];
            acc += 0.5 * h * (self.ys[k] + self.ys[k + 1]) + h * h * (self.ds[k] - self.ds[k + 1]) / 12.0;
            out.push(acc);
        }
        out
    }
}

fn check_nodes(xs: &[f64], ys: &[f64]) -> Result<(), InterpError> {
    if xs.len() != ys.len() {
        return Err(InterpError::LengthMismatch { xs: xs.len(), ys: ys.len() });
    }
    if xs.len() < 2 {
        return Err(InterpError::TooFewNodes(xs.len()));
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(InterpError::NotIncreasing(i + 1));
    }
    Ok(())
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
