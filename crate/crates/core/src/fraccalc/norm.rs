//! α-norm and Λ_α.

use super::derivative::check_alpha;
use super::grid_function::GridFunction;
use crate::error::{domain, Result};
use crate::quadrature::{gauss_legendre, graded, Grading};
use statrs::function::gamma::gamma;

/// ∫_{wa}^{wb} (A + m w) w^e dw, with the A-term dropped when wa = 0 (it
/// vanishes there by construction).
#[inline]
fn lin_pow(a: f64, m: f64, wa: f64, wb: f64, e: f64) -> f64 {
    let mut s = 0.0;
    if a != 0.0 && (wa > 0.0 || e > -1.0) {
        s += a * (wb.powf(e + 1.0) - wa.powf(e + 1.0)) / (e + 1.0);
    }
    if m != 0.0 {
        s += m * (wb.powf(e + 2.0) - wa.powf(e + 2.0)) / (e + 2.0);
    }
    s
}

/// ∫_{wa}^{wb} |A + m w| w^e dw, split at the root of the linear factor.
#[inline]
pub(crate) fn abs_lin_pow(a: f64, m: f64, wa: f64, wb: f64, e: f64) -> f64 {
    if m != 0.0 {
        let r = -a / m;
        if r > wa && r < wb {
            return abs_lin_pow(a, m, wa, r, e) + abs_lin_pow(a, m, r, wb, e);
        }
    }
    let mid = a + m * 0.5 * (wa + wb);
    if mid == 0.0 {
        return 0.0;
    }
    mid.signum() * lin_pow(a, m, wa, wb, e)
}

/// ∫_{t_ia}^s |f(s) − f(z)| (s−z)^{−1−α} dz, exact for the linear interpolant.
fn inner_abs(f: &GridFunction, slopes: &[f64], ia: usize, s: f64, alpha: f64) -> f64 {
    let t0 = f.grid.t0;
    let h = f.step();
    let k = f.cell(s).max(ia);
    let tk = t0 + k as f64 * h;
    let fs = f.values[k] + slopes[k] * (s - tk);
    let e = -1.0 - alpha;
    let wk = (s - tk).max(0.0);
    let mut acc = if wk > 0.0 { slopes[k].abs() * wk.powf(1.0 - alpha) / (1.0 - alpha) } else { 0.0 };
    let mut w_near = wk;
    for c in (ia..k).rev() {
        let w_far = s - (t0 + c as f64 * h);
        let m = slopes[c];
        // f(s) − f(z) = A + m w with w = s − z
        let a = fs - f.values[c] - m * w_far;
        acc += if w_near > 0.0 {
            abs_lin_pow(a, m, w_near, w_far, e)
        } else {
            m.abs() * w_far.powf(1.0 - alpha) / (1.0 - alpha)
        };
        w_near = w_far;
    }
    acc
}

/// ∫_a^b |f(s)| (s−a)^{−α} ds, exact for the linear interpolant.
fn first_term(f: &GridFunction, slopes: &[f64], ia: usize, ib: usize, alpha: f64) -> f64 {
    let h = f.step();
    (ia..ib)
        .map(|c| {
            let wa = (c - ia) as f64 * h;
            let m = slopes[c];
            abs_lin_pow(f.values[c] - m * wa, m, wa, wa + h, -alpha)
        })
        .sum()
}

/// ‖f‖_{α,[a,b]} = ∫_a^b [|f(s)|/(s−a)^α + ∫_a^s |f(s)−f(z)|/(s−z)^{1+α} dz] ds.
/// Inner integrals are exact for the linear interpolant; the outer one uses
/// Gauss–Legendre graded toward both ends of every cell.
pub fn alpha_norm(f: &GridFunction, a: f64, b: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let ia = f.node(a, "a")?;
    let ib = f.node(b, "b")?;
    if ib <= ia {
        return domain(format!("empty interval [{a}, {b}]"));
    }
    let slopes = f.slopes();
    let h = f.step();
    let t0 = f.grid.t0;
    let mut total = first_term(f, &slopes, ia, ib, alpha);
    for c in ia..ib {
        let lo = t0 + c as f64 * h;
        total += graded(lo, lo + h, Grading::Both, 8, 6, |s| inner_abs(f, &slopes, ia, s, alpha));
    }
    Ok(total)
}

/// Neighbouring cells handled with exact inner integrals in the tail norm.
const NEAR: usize = 8;

/// ‖f‖_{α,[t_i, end]} for every start index i in `starts`, in one O(n²)
/// sweep. Cell pairs further than `NEAR` cells apart use a midpoint rule
/// (relative error below 0.5% per pair); closer pairs and the first term are
/// exact in the inner variable. Intended for long diagnostic grids where
/// the accurate `alpha_norm` per start would be O(n³).
pub fn alpha_norm_tails(f: &GridFunction, alpha: f64, starts: &[usize]) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let n = f.grid.n;
    if let Some(&bad) = starts.iter().find(|&&i| i >= n) {
        return domain(format!("start index {bad} must be below {n}"));
    }
    let Some(&lo) = starts.iter().min() else {
        return Ok(Vec::new());
    };
    let h = f.step();
    let t0 = f.grid.t0;
    let slopes = f.slopes();
    // row[c]: double-integral contribution of z in cell c, s anywhere after
    let mut row = vec![0.0; n];
    let diag = h.powf(2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha));
    for c in lo..n {
        row[c] = slopes[c].abs() * diag;
    }
    let rule = gauss_legendre(5);
    let e = -1.0 - alpha;
    for d in lo + 1..n {
        let sd = t0 + d as f64 * h;
        let c_min = d.saturating_sub(NEAR).max(lo);
        // s in cell d, z in cells c_min..d (exact in z)
        let mut acc = vec![0.0; d - c_min];
        // the pair with c = d−1 has a (s − t_d)^{1−α} kink at the left end,
        // so cell d is graded toward its left end
        for k in 0..6 {
            let hi = h * 0.5f64.powi(k);
            let lo_ = if k == 5 { 0.0 } else { 0.5 * hi };
            let half = 0.5 * (hi - lo_);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = sd + lo_ + half * (1.0 + x);
                let fs = f.values[d] + slopes[d] * (s - sd);
                for (j, c) in (c_min..d).enumerate() {
                    let m = slopes[c];
                    let w_far = s - (t0 + c as f64 * h);
                    let a = fs - f.values[c] - m * w_far;
                    acc[j] += w * half * abs_lin_pow(a, m, w_far - h, w_far, e);
                }
            }
        }
        for (j, c) in (c_min..d).enumerate() {
            row[c] += acc[j];
        }
    }
    // far pairs by midpoint
    let mids: Vec<f64> = (0..n).map(|c| 0.5 * (f.values[c] + f.values[c + 1])).collect();
    let table: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { h * h * (k as f64 * h).powf(e) }).collect();
    for c in lo..n {
        let mc = mids[c];
        let start = c + NEAR + 1;
        if start >= n {
            continue;
        }
        let s: f64 = mids[start..]
            .iter()
            .zip(&table[NEAR + 1..n - c])
            .map(|(md, w)| (md - mc).abs() * w)
            .sum();
        row[c] += s;
    }
    // suffix sums
    let mut suffix = vec![0.0; n + 1];
    for c in (0..n).rev() {
        suffix[c] = suffix[c + 1] + row[c];
    }
    let mut out = Vec::with_capacity(starts.len());
    for &i in starts {
        let first = first_term(f, &slopes, i, n, alpha);
        out.push(first + suffix[i]);
    }
    Ok(out)
}

/// Result of `lambda_alpha`: the maximizing pair and whether the Hölder
/// hint was missing.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaAlpha {
    pub value: f64,
    pub s: f64,
    pub t: f64,
    pub warning: Option<String>,
}

/// Λ_α = sup over grid pairs s < t of |D^{1−α}_{t−} g_{t−}(s)|, O(n²) via
/// running sums of the exact cell integrals.
pub fn lambda_alpha(g: &GridFunction, alpha: f64) -> Result<LambdaAlpha> {
    check_alpha(alpha)?;
    let warning = match g.holder_hint {
        None => Some("no Hölder hint: finiteness of Λ_α is not certified".to_string()),
        Some(theta) if alpha <= 1.0 - theta => {
            Some(format!("alpha = {alpha} ≤ 1 − θ = {}: Λ_α may diverge under refinement", 1.0 - theta))
        }
        _ => None,
    };
    let n = g.grid.n;
    let h = g.step();
    let slopes = g.slopes();
    let inv_g = 1.0 / gamma(alpha);
    let e1 = alpha - 1.0;
    // node powers (k h)^{α−1} and (k h)^α
    let p1: Vec<f64> = (0..=n).map(|k| (k as f64 * h).powf(e1)).collect();
    let p2: Vec<f64> = (0..=n).map(|k| (k as f64 * h).powf(alpha)).collect();
    let mut best = (0.0f64, 0usize, 0usize);
    for i in 0..n {
        let gi = g.values[i];
        let mut j_acc = 0.0;
        for c in i..n {
            let m = slopes[c];
            let (kn, kf) = (c - i, c - i + 1);
            if c > i {
                let b = g.values[c] - m * kn as f64 * h - gi;
                if b != 0.0 {
                    j_acc += b * (p1[kf] - p1[kn]) / e1;
                }
            }
            if m != 0.0 {
                j_acc += m * (p2[kf] - p2[kn]) / alpha;
            }
            let j = c + 1;
            let v = inv_g * ((g.values[j] - gi) * p2[kf] / (kf as f64 * h) + (1.0 - alpha) * j_acc);
            if v.abs() > best.0 {
                best = (v.abs(), i, j);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(crate::Error::Numeric("Λ_α is not finite".into()));
    }
    Ok(LambdaAlpha {
        value: best.0,
        s: g.grid.time(best.1),
        t: g.grid.time(best.2),
        warning,
    })
}
