//! Pathwise fractional calculus for piecewise-linear grid functions.

mod derivative;
mod gls;
mod grid_function;
mod norm;
mod oracle;

pub use derivative::{
    frac_derivative_backward, frac_derivative_backward_fn, frac_derivative_forward, frac_derivative_forward_fn,
};
pub use gls::{gls_integral, gls_integral_with, GlsOptions};
pub use grid_function::GridFunction;
pub use norm::{alpha_norm, alpha_norm_tails, lambda_alpha, LambdaAlpha};
pub use oracle::{rs_oracle, OracleResult};

use crate::error::{domain, Result};

/// Fractional order α ∈ (0, 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub alpha: f64,
}

impl FracParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return domain(format!("alpha = {alpha} outside (0, 1/2)"));
        }
        Ok(Self { alpha })
    }

    /// Midpoint of (1 − θ, 1/2) for integration against a θ-Hölder path.
    pub fn for_holder(theta: f64) -> Result<Self> {
        if !(theta > 0.5 && theta <= 1.0) {
            return domain(format!("Hölder exponent {theta} must lie in (1/2, 1]"));
        }
        Self::new(0.5 * ((1.0 - theta) + 0.5))
    }

    /// Whether α is admissible against a θ-Hölder integrator.
    pub fn admissible_for(&self, theta: f64) -> bool {
        self.alpha > 1.0 - theta && self.alpha < 0.5
    }
}
