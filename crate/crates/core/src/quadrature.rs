//! Gauss–Legendre rules, geometrically graded meshes for endpoint
//! singularities, and a few special functions not covered by `statrs`.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on P_n, started from the Tricomi estimate.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// ∫_a^b f.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_CACHED: usize = 64;

/// Cached rule of order `n` (1..=64).
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = CACHE.get_or_init(|| (1..=MAX_CACHED).map(GaussLegendre::new).collect());
    assert!((1..=MAX_CACHED).contains(&n), "order {n} outside cached range");
    &rules[n - 1]
}

/// Which end(s) of an interval carry the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    Left,
    Right,
    Both,
    None,
}

/// Composite Gauss rule on a geometric mesh (ratio 1/2) graded toward the
/// singular end(s). The innermost cell is integrated with the same rule,
/// whose nodes never touch the endpoint.
pub fn graded<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    grading: Grading,
    levels: usize,
    order: usize,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = gauss_legendre(order);
    match grading {
        Grading::None => rule.integrate(a, b, f),
        Grading::Left => one_side(rule, a, b, true, levels, &mut f),
        Grading::Right => one_side(rule, a, b, false, levels, &mut f),
        Grading::Both => {
            let m = 0.5 * (a + b);
            one_side(rule, a, m, true, levels, &mut f) + one_side(rule, m, b, false, levels, &mut f)
        }
    }
}

fn one_side<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    toward_left: bool,
    levels: usize,
    f: &mut F,
) -> f64 {
    let len = b - a;
    let mut s = 0.0;
    let mut hi = len;
    let anchor = if toward_left { a } else { b };
    for _ in 0..levels {
        let lo = 0.5 * hi;
        if anchor + lo == anchor || anchor - lo == anchor {
            // below floating resolution of the endpoint
            return s;
        }
        s += if toward_left {
            rule.integrate(a + lo, a + hi, &mut *f)
        } else {
            rule.integrate(b - hi, b - lo, &mut *f)
        };
        hi = lo;
    }
    s + if toward_left {
        rule.integrate(a, a + hi, &mut *f)
    } else {
        rule.integrate(b - hi, b, &mut *f)
    }
}

/// Adaptive bisection with a fixed Gauss rule: a panel is accepted once
/// its estimate agrees with the sum over its halves to `abs_tol` (scaled
/// by the panel's share of the interval).
pub fn adaptive<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: usize,
    mut f: F,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let rule = gauss_legendre(16);
    let whole = rule.integrate(a, b, &mut f);
    let mut err_total = 0.0;
    let v = adaptive_rec(rule, a, b, whole, abs_tol, max_depth, &mut f, &mut err_total);
    if err_total > abs_tol.max(1e-300) * 1e3 || !v.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            estimate: v,
            error_bound: err_total,
        });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    f: &mut F,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let l = rule.integrate(a, m, &mut *f);
    let r = rule.integrate(m, b, &mut *f);
    let diff = (l + r - whole).abs();
    if diff <= tol || depth == 0 {
        if diff > tol {
            *err += diff;
        }
        return l + r;
    }
    adaptive_rec(rule, a, m, l, 0.5 * tol, depth - 1, f, err)
        + adaptive_rec(rule, m, b, r, 0.5 * tol, depth - 1, f, err)
}

/// Evaluates `est(level)` for increasing levels until two successive values
/// agree to `rel_tol` (relative, with `abs_floor` guarding zero results).
pub fn refine_until<F: FnMut(usize) -> Result<f64>>(
    rel_tol: f64,
    abs_floor: f64,
    max_level: usize,
    mut est: F,
) -> Result<f64> {
    let mut prev = est(0)?;
    for level in 1..=max_level {
        let cur = est(level)?;
        let diff = (cur - prev).abs();
        if diff <= rel_tol * cur.abs().max(abs_floor) {
            return Ok(cur);
        }
        prev = cur;
        if level == max_level {
            return Err(Error::QuadratureNonConvergence {
                estimate: cur,
                error_bound: diff,
            });
        }
    }
    Ok(prev)
}

/// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (q+k)^{−s} for s > 1, q > 0, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta needs s > 1, q > 0");
    // B_{2j}/(2j)!
    const B: [f64; 7] = [
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 24.0,
        1.0 / 42.0 / 720.0,
        -1.0 / 30.0 / 40320.0,
        5.0 / 66.0 / 3628800.0,
        -691.0 / 2730.0 / 479001600.0,
        7.0 / 6.0 / 87178291200.0,
    ];
    const M: usize = 24;
    let mut sum = 0.0;
    for k in 0..M {
        sum += (q + k as f64).powf(-s);
    }
    let x = q + M as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    let mut poch = s; // s(s+1)…(s+2j−2)
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * poch * xp;
        let k = 2.0 * j as f64;
        poch *= (s + k + 1.0) * (s + k + 2.0);
        xp /= x * x;
    }
    sum
}

/// Riemann zeta for s > 1.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}
