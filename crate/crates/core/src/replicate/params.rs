use crate::error::{domain, Error, Result};
use crate::models::{rho_zero, Sign};
use crate::smallball::{derive_constants, HelixInput, SmallBallExponents};
use serde::Serialize;

pub const DEFAULT_EPS_GAP: f64 = 0.05;
pub const DEFAULT_BETA_MARGIN: f64 = 0.1;
const THETA_STEP: f64 = 0.01;

/// Which ρ-threshold the chosen parameters had to clear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoThresholds {
    /// (1+H2)(H1−H2)/(H2+1−2H1).
    pub closed_form: f64,
    /// μ/(λθ) − 1 at the chosen θ.
    pub at_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationParams {
    pub h1: f64,
    pub h2: f64,
    pub rho: f64,
    pub theta: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub eps_gap: f64,
    pub beta: f64,
    pub gamma: f64,
    pub exponents: SmallBallExponents,
    pub thresholds: RhoThresholds,
}

impl ReplicationParams {
    #[inline]
    pub fn mu_over_lambda(&self) -> f64 {
        self.exponents.mu / self.exponents.lambda
    }

    /// σ_n = n^ε Δ_n^{κ−μ/λ}.
    pub fn sigma(&self, n: usize, delta_n: f64) -> f64 {
        (n as f64).powf(self.eps_gap) * delta_n.powf(self.kappa - self.mu_over_lambda())
    }

    /// ν_n = Δ_n^κ / σ_n.
    pub fn nu(&self, n: usize, delta_n: f64) -> f64 {
        delta_n.powf(self.kappa) / self.sigma(n, delta_n)
    }

    /// Same set with the catch-up lemma exponents replaced.
    pub fn with_lemma_exponents(&self, beta: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            beta,
            gamma,
            ..self.clone()
        };
        let bad = p.violations();
        if !bad.is_empty() {
            return Err(Error::Infeasible(bad.join("; ")));
        }
        Ok(p)
    }

    /// Constraints that fail; empty when the set is feasible.
    pub fn violations(&self) -> Vec<String> {
        check_constraints(
            self.theta,
            self.alpha,
            self.kappa,
            self.rho,
            self.beta,
            self.gamma,
            self.exponents.lambda,
            self.exponents.mu,
        )
    }
}

/// Pure feasibility predicate over the five constraints on (θ, α, κ, β, γ).
#[allow(clippy::too_many_arguments)]
pub fn check_constraints(
    theta: f64,
    alpha: f64,
    kappa: f64,
    rho: f64,
    beta: f64,
    gamma: f64,
    lambda: f64,
    mu: f64,
) -> Vec<String> {
    let r = mu / lambda;
    let mut v = Vec::new();
    if !(theta > 0.0 && theta <= r) {
        v.push(format!("θ ≤ μ/λ: θ = {theta}, μ/λ = {r}"));
    }
    if !(alpha > 1.0 - theta && alpha < 0.5) {
        v.push(format!("α ∈ (1−θ, 1/2): α = {alpha}, 1−θ = {}", 1.0 - theta));
    }
    let slack = 1.0 + kappa - r * (1.0 + alpha / theta);
    if !(slack > 0.0) {
        v.push(format!("1 + κ − μ(1+α/θ)/λ > 0: value {slack}"));
    }
    if !(kappa > 0.0 && kappa < rho) {
        v.push(format!("0 < κ < ρ: κ = {kappa}, ρ = {rho}"));
    }
    if !(beta > r) {
        v.push(format!("β > μ/λ: β = {beta}, μ/λ = {r}"));
    }
    let gmax = (1.0 / theta).min(beta / r);
    if !(gamma > 1.0 && gamma < gmax) {
        v.push(format!("1 < γ < min(1/θ, βλ/μ): γ = {gamma}, bound {gmax}"));
    }
    v
}

pub(crate) fn exponents_for(h1: f64, h2: f64) -> Result<SmallBallExponents> {
    // the exponents do not depend on C1, C2
    let input = HelixInput::new(1.0, 1.0, h1, h2, Sign::Positive)?;
    Ok(derive_constants(&input)?.1)
}

/// θ is taken 0.01 below min(H2, μ/λ), or halfway into the feasible θ-range
/// when that is narrower; κ = 0.9ρ; α is the midpoint of the interval on
/// which the κ constraint holds; β = μ/λ + 0.1 and γ is the midpoint of its
/// range.
pub fn select_parameters(h1: f64, h2: f64, rho: f64) -> Result<ReplicationParams> {
    let closed_form = rho_zero(h1, h2)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return domain(format!("need ρ > 0, got {rho}"));
    }
    let exponents = exponents_for(h1, h2)?;
    let r = exponents.mu / exponents.lambda;
    let kappa = 0.9 * rho;
    let top = h2.min(r);
    // some α ∈ (1−θ, 1/2) satisfies 1 + κ − r(1 + α/θ) > 0  ⇔  θ > r/(1+κ)
    let theta_lo = (r / (1.0 + kappa)).max(0.5);
    if theta_lo < top {
        let theta = if top - THETA_STEP > theta_lo {
            top - THETA_STEP
        } else {
            0.5 * (theta_lo + top)
        };
        let alpha_hi = (theta * ((1.0 + kappa) / r - 1.0)).min(0.5);
        let alpha = 0.5 * (1.0 - theta + alpha_hi);
        let beta = r + DEFAULT_BETA_MARGIN;
        let gamma = 0.5 * (1.0 + (1.0 / theta).min(beta / r));
        let p = ReplicationParams {
            h1,
            h2,
            rho,
            theta,
            alpha,
            kappa,
            eps_gap: DEFAULT_EPS_GAP,
            beta,
            gamma,
            exponents,
            thresholds: RhoThresholds {
                closed_form,
                at_theta: r / theta - 1.0,
            },
        };
        debug_assert!(p.violations().is_empty(), "{:?}", p.violations());
        return Ok(p);
    }
    let limit = r / top - 1.0;
    let binding = if rho > closed_form {
        format!(
            "ρ = {rho} clears the closed-form threshold {closed_form} but not μ/(λθ) − 1 = {limit} (θ → {top}), \
             which the constraint 1 + κ − μ(1+α/θ)/λ > 0 requires"
        )
    } else {
        format!("ρ = {rho} ≤ closed-form threshold {closed_form} and ≤ μ/(λθ) − 1 = {limit}")
    };
    Err(Error::Infeasible(binding))
}
