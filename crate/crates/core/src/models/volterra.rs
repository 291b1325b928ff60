//! Quadrature for Volterra covariance forms.
//!
//! Wiener-driven: ∫ f1(z) f2(z) dz.
//! fBm-driven:    H(2H−1) ∫∫ f1(u) f2(v) |u−v|^{2H−2} du dv.
//!
//! Integrands are piecewise smooth between the supplied breakpoints and may
//! carry integrable endpoint singularities, so every panel is graded toward
//! both ends. The diagonal singularity of the fBm form is removed by the
//! substitution |u−v| = y^{1/(2H−1)}.

use crate::error::Result;
use crate::quadrature::{graded, refine_until, Grading};

const REL_TOL: f64 = 1e-8;
const MAX_LEVEL: usize = 4;

fn panels(bps: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut p: Vec<f64> = bps
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .chain([lo, hi])
        .collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    p
}

fn levels(level: usize) -> (usize, usize) {
    (10 + 8 * level, 8)
}

/// ∫_0^T f1 f2 with refinement to the module tolerance.
pub(crate) fn wiener_form<F1, F2>(f1: F1, f2: F2, t_max: f64, bps: &[f64], floor: f64) -> Result<f64>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    let p = panels(bps, 0.0, t_max);
    refine_until(REL_TOL, floor, MAX_LEVEL, |level| {
        let (l, q) = levels(level);
        Ok(p.windows(2)
            .map(|w| graded(w[0], w[1], Grading::Both, l, q, |z| f1(z) * f2(z)))
            .sum())
    })
}

/// H(2H−1) ∫_0^{T1}∫_0^{T2} f1(u) f2(v) |u−v|^{2H−2} dv du.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fbm_form<F1, F2>(
    h: f64,
    f1: F1,
    t1: f64,
    bps1: &[f64],
    f2: F2,
    t2: f64,
    bps2: &[f64],
    floor: f64,
) -> Result<f64>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    let all: Vec<f64> = bps1.iter().chain(bps2).copied().collect();
    let outer = panels(&all, 0.0, t1);
    let inner_bps = panels(bps2, 0.0, t2);
    let c = h * (2.0 * h - 1.0);
    let q = 1.0 / (2.0 * h - 1.0);
    refine_until(REL_TOL, floor, MAX_LEVEL, |level| {
        let (l, order) = levels(level);
        let inner = |u: f64| -> f64 {
            let mut s = 0.0;
            for w in inner_bps.windows(2) {
                let (a, b) = (w[0], w[1]);
                if u <= a {
                    s += singular_side(a, b, u, h, q, l, order, &f2, true);
                } else if u >= b {
                    s += singular_side(a, b, u, h, q, l, order, &f2, false);
                } else {
                    s += singular_side(u, b, u, h, q, l, order, &f2, true);
                    s += singular_side(a, u, u, h, q, l, order, &f2, false);
                }
            }
            s
        };
        let v: f64 = outer
            .windows(2)
            .map(|w| graded(w[0], w[1], Grading::Both, l, order, |u| {
                let a = f1(u);
                if a == 0.0 {
                    0.0
                } else {
                    a * inner(u)
                }
            }))
            .sum();
        Ok(c * v)
    })
}

/// ∫_a^b f(v)|u−v|^{2H−2} dv where u lies at or beyond one end of [a, b].
/// `right` means u ≤ a (the interval lies to the right of u).
#[allow(clippy::too_many_arguments)]
fn singular_side<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    u: f64,
    h: f64,
    q: f64,
    l: usize,
    order: usize,
    f: &F,
    right: bool,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let e = 2.0 * h - 1.0;
    // distances from u to the near and far ends
    let (dn, df) = if right { (a - u, b - u) } else { (u - b, u - a) };
    let point = |d: f64| if right { u + d } else { u - d };
    if dn == 0.0 {
        // y = d^{2H−1}: d^{2H−2} dd = dy/(2H−1)
        let ymax = df.powf(e);
        graded(0.0, ymax, Grading::Both, l, order, |y| f(point(y.powf(q)))) / e
    } else {
        graded(dn, df, Grading::Both, l, order, |d| f(point(d)) * d.powf(e - 1.0))
    }
}
