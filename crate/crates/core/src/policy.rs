//! Stationary state-feedback policies `z ↦ θ(z)` on `[0, b]`.

use crate::bellman::BellmanSolution;
use crate::cost_model::CostModel;

pub trait Policy: Sync {
    /// Negative drift rate at state `z ∈ [0, b]`.
    fn drift(&self, z: f64) -> f64;

    /// States where the drift jumps or loses smoothness. Used to split
    /// quadrature panels and finite-difference stencils.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy(pub f64);

impl Policy for ConstantPolicy {
    fn drift(&self, _z: f64) -> f64 {
        self.0
    }
}

/// `θ(z, p) = ψ(v(z, p))` from a Bellman solution.
#[derive(Debug, Clone, Copy)]
pub struct OptimalPolicy<'a> {
    pub model: &'a CostModel,
    pub solution: &'a BellmanSolution,
}

impl<'a> OptimalPolicy<'a> {
    pub fn new(model: &'a CostModel, solution: &'a BellmanSolution) -> Self {
        Self { model, solution }
    }
}

impl Policy for OptimalPolicy<'_> {
    fn drift(&self, z: f64) -> f64 {
        self.solution.policy_unchecked(self.model, z)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.solution.z_breakpoints.clone()
    }
}

/// Any thread-safe closure is a policy with no declared breakpoints.
pub struct FnPolicy<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Policy for FnPolicy<F> {
    fn drift(&self, z: f64) -> f64 {
        (self.0)(z)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn drift(&self, z: f64) -> f64 {
        (**self).drift(z)
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}
