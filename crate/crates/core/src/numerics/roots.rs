//! Bracketed scalar root finding (Brent's method).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root is not bracketed: f({a}) = {fa:e}, f({b}) = {fb:e}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("no convergence after {iterations} iterations (last bracket [{a}, {b}])")]
    MaxIterations { iterations: usize, a: f64, b: f64 },
    #[error("function value is not finite at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub xtol_abs: f64,
    pub xtol_rel: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            xtol_abs: 0.0,
            xtol_rel: 1e-14,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Finds a root of `f` in `[a, b]`, where `f(a)` and `f(b)` have opposite
/// signs (or one of them is zero).
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: RootOptions,
) -> Result<Root, RootError> {
    let fa = f(a);
    let fb = f(b);
    brent_with_values(f, a, fa, b, fb, opts)
}

/// Same as [`brent`] when the endpoint values are already known.
pub fn brent_with_values<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    opts: RootOptions,
) -> Result<Root, RootError> {
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }

    let mut c = a;
    let mut fc = fa;
    for iteration in 1..=opts.max_iter {
        let prev_step = b - a;
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * (opts.xtol_abs + opts.xtol_rel * b.abs());
        let mut step = 0.5 * (c - b);
        if step.abs() <= tol || fb == 0.0 {
            return Ok(Root { x: b, fx: fb, iterations: iteration });
        }

        if prev_step.abs() >= tol && fa.abs() > fb.abs() {
            let cb = c - b;
            let (mut p, mut q);
            if a == c {
                // secant
                let t1 = fb / fa;
                p = cb * t1;
                q = 1.0 - t1;
            } else {
                // inverse quadratic interpolation
                let qq = fa / fc;
                let t1 = fb / fc;
                let t2 = fb / fa;
                p = t2 * (cb * qq * (qq - t1) - (b - a) * (t1 - 1.0));
                q = (qq - 1.0) * (t1 - 1.0) * (t2 - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if p < 0.75 * cb * q - 0.5 * (tol * q).abs() && p < (0.5 * prev_step * q).abs() {
                step = p / q;
            }
        }
        if step.abs() < tol {
            step = tol.copysign(step);
        }

        a = b;
        fa = fb;
        b += step;
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite { x: b });
        }
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
        }
    }
    Err(RootError::MaxIterations {
        iterations: opts.max_iter,
        a: b.min(c),
        b: b.max(c),
    })
}
