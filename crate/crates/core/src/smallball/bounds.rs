//! Small-ball constants and bounds, re-derived from the underlying
//! inequality P{range ≤ ε} ≤ exp{−ε⁴/(16 a² Σ_{i,j} (Eξ_iξ_j)²)} for the
//! increments ξ_i over a grid of size a:
//!
//! with a = C0^{1/(2H1)} ε^{1/H1}, C0 = 64/C1, the grid size must satisfy
//! a ≤ 1/4, which gives ε ≤ C3 = 4^{−H1} C0^{−1/2}. The positive case bounds
//! the double sum by C2² a^{2H2}, so log P ≤ −ε⁴/(16 C2² a^{2H2+2})
//! = −C4 ε^{4−(2H2+2)/H1} with C4 = (16 C2² C0^{(H2+1)/H1})^{−1}; the
//! negative case by 2 C2² a^{4H2−1}, so log P ≤ −ε⁴/(32 C2² a^{4H2+1})
//! = −C5 ε^{4−(4H2+1)/H1} with C5 = (32 C2² C0^{(4H2+1)/(2H1)})^{−1}.

use crate::error::{domain, Error, Result};
use crate::models::Sign;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelixInput {
    pub c1: f64,
    pub c2: f64,
    pub h1: f64,
    pub h2: f64,
    pub sign: Sign,
}

impl HelixInput {
    pub fn new(c1: f64, c2: f64, h1: f64, h2: f64, sign: Sign) -> Result<Self> {
        let s = Self { c1, c2, h1, h2, sign };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return domain(format!("C1, C2 must be positive, got {}, {}", self.c1, self.c2));
        }
        if !(self.h2 > 0.0 && self.h2 <= self.h1 && self.h1 <= 1.0) {
            return domain(format!("need 0 < H2 ≤ H1 ≤ 1, got H1={}, H2={}", self.h1, self.h2));
        }
        match self.sign {
            Sign::Positive if self.h1 < 0.5 => domain(format!("positive sign needs H1 ≥ 1/2, got {}", self.h1)),
            Sign::Negative if self.h2 > 0.5 => domain(format!("negative sign needs H2 ≤ 1/2, got {}", self.h2)),
            _ => Ok(()),
        }
    }

    /// Same-regularity input (H1 = H2 = H, C1 = C2 = 1) used for fBm.
    pub fn fbm(h: f64) -> Result<Self> {
        let sign = if h >= 0.5 { Sign::Positive } else { Sign::Negative };
        Self::new(1.0, 1.0, h, h, sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallBallConstants {
    pub c0: f64,
    pub c3: f64,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub h1: f64,
}

impl SmallBallConstants {
    /// Grid size a(ε) = C0^{1/(2H1)} ε^{1/H1}.
    pub fn a_of_eps(&self, eps: f64) -> f64 {
        self.c0.powf(0.5 / self.h1) * eps.powf(1.0 / self.h1)
    }
}

/// Bound exp{−K2 ε^{−λ} Δ^μ}; K1 = exp{K2 C3^{−λ}} makes K1·exp{−K2 ε^{−λ}}
/// exceed 1 beyond the validity range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallBallExponents {
    pub lambda: f64,
    pub mu: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Whether the ε-exponent is negative (a non-trivial bound), decided on the
/// exponents directly so the boundary case is exact.
pub fn bound_is_useful(h1: f64, h2: f64, sign: Sign) -> bool {
    match sign {
        Sign::Positive => h2 > 2.0 * h1 - 1.0,
        Sign::Negative => h2 > h1 - 0.25,
    }
}

pub fn derive_constants(input: &HelixInput) -> Result<(SmallBallConstants, SmallBallExponents)> {
    input.validate()?;
    let HelixInput { c1, c2, h1, h2, sign } = *input;
    if !bound_is_useful(h1, h2, sign) {
        let need = match sign {
            Sign::Positive => format!("H2 > 2H1 − 1 = {}", 2.0 * h1 - 1.0),
            Sign::Negative => format!("H2 > H1 − 1/4 = {}", h1 - 0.25),
        };
        return Err(Error::VacuousBound(format!(
            "the ε-exponent is non-negative for H1={h1}, H2={h2} ({} case), the bound is useless; need {need}",
            sign.as_str()
        )));
    }
    let c0 = 64.0 / c1;
    let c3 = 4f64.powf(-h1) / c0.sqrt();
    let (c4, c5, lambda, mu, k2) = match sign {
        Sign::Positive => {
            let c4 = 1.0 / (16.0 * c2 * c2 * c0.powf((h2 + 1.0) / h1));
            (Some(c4), None, (2.0 * h2 + 2.0) / h1 - 4.0, 2.0 - 2.0 * h2, c4)
        }
        Sign::Negative => {
            let c5 = 1.0 / (32.0 * c2 * c2 * c0.powf((4.0 * h2 + 1.0) / (2.0 * h1)));
            (None, Some(c5), (4.0 * h2 + 1.0) / h1 - 4.0, 1.0, c5)
        }
    };
    let k1 = (k2 * c3.powf(-lambda)).exp();
    Ok((SmallBallConstants { c0, c3, c4, c5, h1 }, SmallBallExponents { lambda, mu, k1, k2 }))
}

/// Upper bound on P{range over a window of length Δ ≤ ε}; 1 outside the
/// validity range ε ≤ C3 Δ^{H1}.
pub fn theoretical_bound(c: &SmallBallConstants, e: &SmallBallExponents, eps: f64, delta: f64) -> f64 {
    if eps <= 0.0 {
        return 0.0;
    }
    if eps > c.c3 * delta.powf(c.h1) {
        return 1.0;
    }
    (-e.k2 * eps.powf(-e.lambda) * delta.powf(e.mu)).exp().min(1.0)
}

/// Second route to the positive-case window bound: the restriction to a
/// window of length Δ, rescaled to [0, 1], is a helix with the same C1 and
/// C2·Δ^{2(H2−H1)}, so the window bound is the unit bound at ε·Δ^{−H1}.
pub fn theoretical_bound_by_scaling(input: &HelixInput, eps: f64, delta: f64) -> Result<f64> {
    if input.sign != Sign::Positive {
        return domain("scaling route is defined for the positive case");
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("Δ = {delta} outside (0, 1]"));
    }
    let scaled = HelixInput {
        c2: input.c2 * delta.powf(2.0 * (input.h2 - input.h1)),
        ..*input
    };
    let (c, e) = derive_constants(&scaled)?;
    Ok(theoretical_bound(&c, &e, eps * delta.powf(-input.h1), 1.0))
}

/// Bound for the anchored statistic sup|X_t − X_{t0}|, via
/// P{anchored ≤ ε} ≤ P{range ≤ 2ε}.
pub fn anchored_bound(c: &SmallBallConstants, e: &SmallBallExponents, eps: f64, delta: f64) -> f64 {
    theoretical_bound(c, e, 2.0 * eps, delta)
}

/// Constants of the anchored form exp{−K2' ε^{−λ} Δ^μ}: K2' = 2^{−λ} K2,
/// valid for ε ≤ C3 Δ^{H1}/2.
pub fn anchored_exponents(e: &SmallBallExponents, c: &SmallBallConstants) -> SmallBallExponents {
    let k2 = e.k2 * 2f64.powf(-e.lambda);
    SmallBallExponents {
        k2,
        k1: (k2 * (0.5 * c.c3).powf(-e.lambda)).exp(),
        ..*e
    }
}

/// P{sup_{[0,1]} |W_t| ≤ ε} by the reflection series.
pub fn wiener_sup_abs_probability(eps: f64) -> f64 {
    if eps <= 0.0 {
        return 0.0;
    }
    let c = std::f64::consts::PI.powi(2) / (8.0 * eps * eps);
    let mut s = 0.0;
    for k in 0..100_000 {
        let j = (2 * k + 1) as f64;
        let t = (-c * j * j).exp() / j;
        s += if k % 2 == 0 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (4.0 / std::f64::consts::PI * s).clamp(0.0, 1.0)
}
