//! Structural-condition checkers: variance envelopes (A1)/(A2), the
//! increment sign condition, kernel conditions, and ρ-threshold algebra.

use super::kernel::{B3Variant, Kernel};
use super::model::{ProcessModel, TOL_SIGN};
use crate::error::{domain, Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "+" => Ok(Sign::Positive),
            "negative" | "-" => Ok(Sign::Negative),
            _ => domain(format!("unknown sign '{s}' (expected positive|negative)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiHelixCertificate {
    pub h1: f64,
    pub h2: f64,
    pub c1_fit: f64,
    pub c2_fit: f64,
    pub sign: Option<Sign>,
    pub max_sign_violation: f64,
    pub grid_size: usize,
    pub pass: bool,
}

fn window_grid(t0: f64, grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 8 {
        return domain(format!("grid_size must be ≥ 8, got {grid_size}"));
    }
    if !(0.0..1.0).contains(&t0) {
        return domain(format!("window start {t0} outside [0, 1)"));
    }
    let h = (1.0 - t0) / grid_size as f64;
    Ok((0..=grid_size)
        .map(|i| if i == grid_size { 1.0 } else { t0 + i as f64 * h })
        .collect())
}

/// Envelope fit of the incremental variance on the uniform grid of [0, 1].
pub fn verify_a1_a2(model: &ProcessModel, grid_size: usize, h1: f64, h2: f64) -> Result<QuasiHelixCertificate> {
    verify_a1_a2_on(model, 0.0, grid_size, h1, h2)
}

/// As [`verify_a1_a2`], restricted to the window [t0, 1].
pub fn verify_a1_a2_on(
    model: &ProcessModel,
    t0: f64,
    grid_size: usize,
    h1: f64,
    h2: f64,
) -> Result<QuasiHelixCertificate> {
    if !(h2 > 0.0 && h2 <= h1 && h1 <= 1.0) {
        return domain(format!("need 0 < H2 ≤ H1 ≤ 1, got H1={h1}, H2={h2}"));
    }
    let t = window_grid(t0, grid_size)?;
    let rows: Vec<Result<(f64, f64, f64)>> = (0..grid_size)
        .into_par_iter()
        .map(|i| {
            let (mut lo, mut hi, mut max_v) = (f64::INFINITY, 0.0f64, 0.0f64);
            for j in i + 1..=grid_size {
                let d = t[j] - t[i];
                let v = model.incremental_variance(t[i], t[j])?;
                lo = lo.min(v / d.powf(2.0 * h1));
                hi = hi.max(v / d.powf(2.0 * h2));
                max_v = max_v.max(v);
            }
            Ok((lo, hi, max_v))
        })
        .collect();
    let (mut c1, mut c2, mut max_v) = (f64::INFINITY, 0.0f64, 0.0f64);
    for r in rows {
        let (lo, hi, mv) = r?;
        c1 = c1.min(lo);
        c2 = c2.max(hi);
        max_v = max_v.max(mv);
    }
    if max_v == 0.0 {
        return Err(Error::ModelInconsistency("identically zero increments on the grid".into()));
    }
    let pass = c1.is_finite() && c2.is_finite() && c1 > 0.0 && c2 > 0.0;
    Ok(QuasiHelixCertificate {
        h1,
        h2,
        c1_fit: c1,
        c2_fit: c2,
        sign: None,
        max_sign_violation: f64::NAN,
        grid_size,
        pass,
    })
}

/// Sign of E(X_{t1}−X_{s1})(X_{t2}−X_{s2}) over all ordered disjoint grid
/// increment pairs on [0, 1].
pub fn verify_sign_condition(model: &ProcessModel, grid_size: usize, sign: Sign) -> Result<QuasiHelixCertificate> {
    verify_sign_condition_on(model, 0.0, grid_size, sign)
}

/// As [`verify_sign_condition`] on the window [t0, 1].
///
/// Every increment pair is a sum of cell-pair covariances G[c][d] (c < d),
/// so G is evaluated once and all pairs follow from 2-D prefix sums.
pub fn verify_sign_condition_on(
    model: &ProcessModel,
    t0: f64,
    grid_size: usize,
    sign: Sign,
) -> Result<QuasiHelixCertificate> {
    let t = window_grid(t0, grid_size)?;
    let n = grid_size;
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|c| {
            (0..n)
                .map(|d| {
                    if d <= c {
                        Ok(0.0)
                    } else {
                        model.incremental_covariance(t[c], t[c + 1], t[d], t[d + 1])
                    }
                })
                .collect()
        })
        .collect();
    let g: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let mut max_var = 0.0f64;
    for &ti in &t {
        max_var = max_var.max(model.covariance(ti, ti)?);
    }
    // prefix[a][b] = Σ_{c<a, d<b} G[c][d]
    let mut prefix = vec![vec![0.0; n + 1]; n + 1];
    for a in 0..n {
        for b in 0..n {
            prefix[a + 1][b + 1] = g[a][b] + prefix[a][b + 1] + prefix[a + 1][b] - prefix[a][b];
        }
    }
    let mut worst = f64::NEG_INFINITY;
    for i1 in 0..n {
        for j1 in i1 + 1..=n {
            for i2 in j1..n {
                for j2 in i2 + 1..=n {
                    let v = prefix[j1][j2] - prefix[i1][j2] - prefix[j1][i2] + prefix[i1][i2];
                    let signed = match sign {
                        Sign::Positive => -v,
                        Sign::Negative => v,
                    };
                    worst = worst.max(signed);
                }
            }
        }
    }
    let pass = worst <= TOL_SIGN * max_var;
    let h = model.declared_h().unwrap_or(f64::NAN);
    Ok(QuasiHelixCertificate {
        h1: h,
        h2: h,
        c1_fit: f64::NAN,
        c2_fit: f64::NAN,
        sign: Some(sign),
        max_sign_violation: worst,
        grid_size,
        pass,
    })
}

/// Both checks combined into one certificate.
pub fn certify(
    model: &ProcessModel,
    t0: f64,
    grid_size: usize,
    h1: f64,
    h2: f64,
    sign: Sign,
) -> Result<QuasiHelixCertificate> {
    let env = verify_a1_a2_on(model, t0, grid_size, h1, h2)?;
    let sg = verify_sign_condition_on(model, t0, grid_size, sign)?;
    Ok(QuasiHelixCertificate {
        sign: Some(sign),
        max_sign_violation: sg.max_sign_violation,
        pass: env.pass && sg.pass,
        ..env
    })
}

/// A model with positively (negatively) correlated increments cannot be a
/// quasi-helix with H < 1/2 (H > 1/2).
pub fn sign_consistent_with_h(declared_h: f64, sign: Sign) -> bool {
    match sign {
        Sign::Positive => declared_h >= 0.5,
        Sign::Negative => declared_h <= 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Holds,
    Fails,
    NotClaimed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionOutcome {
    pub status: ConditionStatus,
    /// Worst grid point: (t, s) or (t1, t2, s).
    pub witness: Vec<f64>,
    /// Smallest relative slack; negative when violated.
    pub margin: f64,
}

impl ConditionOutcome {
    fn not_claimed() -> Self {
        Self {
            status: ConditionStatus::NotClaimed,
            witness: vec![],
            margin: f64::NAN,
        }
    }
    pub fn holds(&self) -> bool {
        self.status == ConditionStatus::Holds
    }
}

pub type ConditionReport = BTreeMap<String, ConditionOutcome>;

const KERNEL_TOL: f64 = 1e-9;

struct Tracker {
    margin: f64,
    witness: Vec<f64>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: vec![],
        }
    }
    /// Records slack `rhs − lhs` relative to |rhs|.
    fn upper(&mut self, lhs: f64, rhs: f64, at: &[f64]) {
        let m = (rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE);
        if m < self.margin {
            self.margin = m;
            self.witness = at.to_vec();
        }
    }
    fn finish(self) -> ConditionOutcome {
        let status = if self.margin >= -KERNEL_TOL {
            ConditionStatus::Holds
        } else {
            ConditionStatus::Fails
        };
        ConditionOutcome {
            status,
            witness: self.witness,
            margin: self.margin,
        }
    }
}

/// Checks every condition the kernel declares on the uniform grid i/n.
pub fn kernel_condition_report(kernel: &Kernel, grid_size: usize) -> Result<ConditionReport> {
    if grid_size < 4 {
        return domain("kernel grid must have at least 4 cells");
    }
    let n = grid_size;
    let g: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let s_start = usize::from(kernel.is_singular_at_origin());
    // table[i][j] = K(t_i, s_j) for j ≤ i
    let table: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| kernel.evaluate(g[i], g[j])).collect())
        .collect();
    let c = &kernel.constants;
    let mut report = ConditionReport::new();

    // (B1): non-negative, non-decreasing in t.
    let b1 = if c.monotone {
        let scale = table.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut tr = Tracker::new();
        for i in 0..=n {
            for j in s_start..=i {
                let v = table[i][j];
                let m = v / scale;
                if m < tr.margin {
                    tr.margin = m;
                    tr.witness = vec![g[i], g[j]];
                }
                if i < n {
                    let inc = kernel.increment(g[i + 1], g[i], g[j]);
                    let m = inc / scale;
                    if m < tr.margin {
                        tr.margin = m;
                        tr.witness = vec![g[i], g[i + 1], g[j]];
                    }
                }
            }
        }
        tr.finish()
    } else {
        ConditionOutcome::not_claimed()
    };
    report.insert("B1".into(), b1);

    let diff = |i2: usize, i1: usize, j: usize| -> f64 {
        let k1 = if j <= i1 { table[i1][j] } else { 0.0 };
        (table[i2][j] - k1).abs()
    };

    // (B2)
    let b2 = match (c.d2, c.d3, c.h2, c.r) {
        (Some(d2), Some(d3), Some(h2), Some(r)) => {
            let mut tr = Tracker::new();
            for j in 1..n {
                let sr = g[j].powf(-r);
                for i1 in j + 1..=n {
                    tr.upper(table[i1][j], d3 * (g[i1] - g[j]).powf(h2 - 0.5) * sr, &[g[i1], g[j]]);
                    for i2 in i1 + 1..=n {
                        let rhs = d2 * (g[i2] - g[i1]).powf(h2) * sr;
                        tr.upper(diff(i2, i1, j), rhs, &[g[i1], g[i2], g[j]]);
                    }
                }
            }
            tr.finish()
        }
        _ => ConditionOutcome::not_claimed(),
    };
    report.insert("B2".into(), b2);

    // (B3,a) / (B3,b)
    let (mut b3a, mut b3b) = (ConditionOutcome::not_claimed(), ConditionOutcome::not_claimed());
    if let (Some(d1), Some(h1), Some(r), Some(var)) = (c.d1, c.h1, c.r, c.b3_variant) {
        let mut tr = Tracker::new();
        for j in 1..n {
            let sr = g[j].powf(-r);
            for i1 in j + 1..=n {
                match var {
                    B3Variant::KernelLower => {
                        let lower = d1 * (g[i1] - g[j]).powf(h1 - 0.5) * sr;
                        // slack of lower ≤ K, relative to K
                        tr.upper(lower, table[i1][j], &[g[i1], g[j]]);
                    }
                    B3Variant::IncrementLower => {
                        for i2 in i1 + 1..=n {
                            let lower = d1 * (g[i2] - g[i1]).powf(h1) * sr;
                            tr.upper(lower, diff(i2, i1, j), &[g[i1], g[i2], g[j]]);
                        }
                    }
                }
            }
        }
        match var {
            B3Variant::KernelLower => b3b = tr.finish(),
            B3Variant::IncrementLower => b3a = tr.finish(),
        }
    }
    report.insert("B3a".into(), b3a);
    report.insert("B3b".into(), b3b);

    // (B4)
    let b4 = match (c.k_low, c.k_up) {
        (Some(lo), Some(hi)) => {
            let mut tr = Tracker::new();
            for i in 0..=n {
                for j in s_start..=i {
                    let v = table[i][j];
                    tr.upper(lo, v, &[g[i], g[j]]);
                    tr.upper(v, hi, &[g[i], g[j]]);
                }
            }
            let mut out = tr.finish();
            if lo <= 0.0 {
                out.status = ConditionStatus::Fails;
            }
            out
        }
        _ => ConditionOutcome::not_claimed(),
    };
    report.insert("B4".into(), b4);

    // (B5)
    let b5 = match (c.c5, c.h3) {
        (Some(cc), Some(h3)) => {
            let mut tr = Tracker::new();
            for j in s_start..=n {
                for i1 in j..=n {
                    for i2 in i1 + 1..=n {
                        let rhs = cc * (g[i2] - g[i1]).powf(h3);
                        tr.upper(diff(i2, i1, j), rhs, &[g[i1], g[i2], g[j]]);
                    }
                }
            }
            tr.finish()
        }
        _ => ConditionOutcome::not_claimed(),
    };
    report.insert("B5".into(), b5);
    Ok(report)
}

/// ρ₀ = (1+H2)(H1−H2)/(H2+1−2H1) on the domain 0 < 2H1−1 < H2 ≤ H1.
pub fn rho_zero(h1: f64, h2: f64) -> Result<f64> {
    if 2.0 * h1 - 1.0 <= 0.0 {
        return domain(format!("need 2·H1 − 1 > 0, got H1 = {h1}"));
    }
    if 2.0 * h1 - 1.0 >= h2 {
        return domain(format!("need 2·H1 − 1 < H2, got 2·{h1} − 1 = {} ≥ {h2}", 2.0 * h1 - 1.0));
    }
    if h2 > h1 {
        return domain(format!("need H2 ≤ H1, got H2 = {h2} > H1 = {h1}"));
    }
    Ok((1.0 + h2) * (h1 - h2) / (h2 + 1.0 - 2.0 * h1))
}

/// μ/(λθ) − 1, defined for 0 < θ ≤ μ/λ.
pub fn rho_zero_from_exponents(lambda: f64, mu: f64, theta: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) {
        return domain(format!("need λ > 0 and μ > 0, got λ = {lambda}, μ = {mu}"));
    }
    if !(theta > 0.0) {
        return domain(format!("need θ > 0, got {theta}"));
    }
    let r = mu / lambda;
    if theta > r * (1.0 + 1e-12) {
        return domain(format!("θ = {theta} exceeds μ/λ = {r}"));
    }
    Ok((mu / (lambda * theta) - 1.0).max(0.0))
}

/// H1 < 2H2(H2+1)/(1+3H2).
pub fn same_regularity_check(h1: f64, h2: f64) -> bool {
    h1 < 2.0 * h2 * (h2 + 1.0) / (1.0 + 3.0 * h2)
}
