//! Numerical building blocks: quadrature, root finding, interpolation and
//! finite-difference stencils.

pub mod interp;
pub mod quad;
pub mod roots;

pub use interp::{InterpError, MonotoneCubic};
pub use quad::{integrate, QuadError, QuadOptions};
pub use roots::{brent, brent_with_values, Root, RootError, RootOptions};

/// Fourth-order first derivative at node `i` of a uniformly spaced table,
/// using only nodes in `lo..=hi` (a range on which the tabulated function is
/// smooth). Picks the most centered five-point stencil that fits; `None` when
/// the range holds fewer than five nodes.
pub(crate) fn derivative_5pt(values: &[f64], h: f64, i: usize, lo: usize, hi: usize) -> Option<f64> {
    const W: [[f64; 5]; 5] = [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
        [1.0, -8.0, 0.0, 8.0, -1.0],
        [-1.0, 6.0, -18.0, 10.0, 3.0],
        [3.0, -16.0, 36.0, -48.0, 25.0],
    ];
    if hi < lo + 4 || i < lo || i > hi {
        return None;
    }
    let start = i.saturating_sub(2).clamp(lo, hi - 4);
    let w = &W[i - start];
    let s: f64 = (0..5).map(|k| w[k] * values[start + k]).sum();
    Some(s / (12.0 * h))
}
