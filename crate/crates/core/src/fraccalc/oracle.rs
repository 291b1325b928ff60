//! Riemann–Stieltjes reference sums.

use super::grid_function::GridFunction;
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Richardson-extrapolated value (the finest sum when extrapolation is
    /// not justified).
    pub value: f64,
    pub error_estimate: f64,
    /// Fitted convergence order, when three levels were available.
    pub order: Option<f64>,
    /// Sums from finest (stride 1) to coarsest.
    pub sums: Vec<f64>,
    pub unreliable: bool,
    pub warning: Option<String>,
}

/// Left-point sum Σ f(t_i)(g(t_{i+s}) − g(t_i)) with stride s from a to b.
fn left_sum(f: &GridFunction, g: &GridFunction, ia: usize, ib: usize, stride: usize) -> f64 {
    let mut s = 0.0;
    let mut i = ia;
    while i < ib {
        let j = (i + stride).min(ib);
        s += f.values[i] * (g.values[j] - g.values[i]);
        i = j;
    }
    s
}

/// Left-endpoint Riemann–Stieltjes sums on sub-grids of stride 2^r,
/// r = 0..=n_refine, with Richardson extrapolation at the fitted order.
/// Sub-grids are nested, so the differences between levels estimate the
/// discretization error of the finest sum.
pub fn rs_oracle(f: &GridFunction, g: &GridFunction, a: f64, b: f64, n_refine: usize) -> Result<OracleResult> {
    if f.grid != g.grid {
        return domain("integrand and integrator must share a grid");
    }
    let ia = f.node(a, "a")?;
    let ib = f.node(b, "b")?;
    if ib <= ia {
        return domain(format!("empty interval [{a}, {b}]"));
    }
    let levels = n_refine.min(((ib - ia) as f64).log2().floor() as usize);
    let sums: Vec<f64> = (0..=levels).map(|r| left_sum(f, g, ia, ib, 1 << r)).collect();
    let s0 = sums[0];
    let scale = sums.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(f64::MIN_POSITIVE);
    let mut out = OracleResult {
        value: s0,
        error_estimate: 0.0,
        order: None,
        sums: sums.clone(),
        unreliable: false,
        warning: None,
    };
    if levels == 0 {
        out.unreliable = true;
        out.warning = Some("no refinement available".into());
        return Ok(out);
    }
    let d1 = s0 - sums[1];
    out.error_estimate = d1.abs();
    if d1.abs() <= 1e-13 * scale {
        // converged to roundoff (telescoping sums)
        return Ok(out);
    }
    if levels < 2 {
        out.unreliable = true;
        out.warning = Some("only two levels: error estimate is the raw difference".into());
        return Ok(out);
    }
    let d2 = sums[1] - sums[2];
    let ratio = d2 / d1;
    if !(ratio > 1.0) {
        out.unreliable = true;
        out.warning = Some(format!("differences do not contract (ratio {ratio:.3})"));
        return Ok(out);
    }
    let p = ratio.log2();
    let corr = d1 / (2f64.powf(p) - 1.0);
    out.order = Some(p);
    out.value = s0 + corr;
    out.error_estimate = corr.abs();
    // check the contraction persists on coarser levels
    if levels >= 3 {
        let d3 = sums[2] - sums[3];
        let r2 = d3 / d2;
        if !(r2 > 1.0) || (r2.log2() - p).abs() > 1.0 {
            out.unreliable = true;
            out.warning = Some(format!("unstable order estimates ({p:.3} vs {:.3})", r2.log2()));
        }
    }
    Ok(out)
}
