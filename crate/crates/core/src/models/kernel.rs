//! Volterra kernels K(t, s), 0 ≤ s ≤ t ≤ 1.

use crate::error::{domain, Result};
use crate::quadrature;
use std::fmt;
use std::sync::Arc;

pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Multiplier φ of the fbm-type kernel, with its envelope k ≤ φ ≤ K.
#[derive(Clone)]
pub enum Phi {
    Constant(f64),
    Function { f: ScalarFn, lower: f64, upper: f64 },
}

impl Phi {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Phi::Constant(c) => *c,
            Phi::Function { f, .. } => f(s),
        }
    }

    pub fn envelope(&self) -> (f64, f64) {
        match self {
            Phi::Constant(c) => (*c, *c),
            Phi::Function { lower, upper, .. } => (*lower, *upper),
        }
    }
}

#[derive(Clone)]
pub enum KernelForm {
    ClosedForm { label: String, f: KernelFn },
    /// C_H s^{1/2−H} φ(s) ∫_s^t u^{H−1/2} (u−s)^{H−3/2} du.
    FbmType { h: f64, phi: Phi, c_h: f64 },
    /// e^{a(t−s)}.
    Exponential { a: f64 },
    /// Values on the uniform (n+1)×(n+1) grid of [0,1]², row index t,
    /// bilinear in between.
    Tabulated { n: usize, values: Vec<f64> },
}

/// Constants a kernel claims for the structural conditions. `None` means
/// the corresponding condition is not claimed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KernelConstants {
    pub r: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    /// Which lower bound (B3,a) or (B3,b) the D1/H1 pair refers to.
    pub b3_variant: Option<B3Variant>,
    pub k_low: Option<f64>,
    pub k_up: Option<f64>,
    pub c5: Option<f64>,
    pub h3: Option<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum B3Variant {
    IncrementLower,
    KernelLower,
}

#[derive(Clone)]
pub struct Kernel {
    pub form: KernelForm,
    pub constants: KernelConstants,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({})", self.label())
    }
}

/// Normalisation making the fbm-type kernel with φ ≡ 1 the Molchan–Golosov
/// kernel of standard fBm.
pub fn molchan_golosov_constant(h: f64) -> f64 {
    let b = statrs::function::beta::beta(2.0 - 2.0 * h, h - 0.5);
    (h * (2.0 * h - 1.0) / b).sqrt()
}

impl Kernel {
    pub fn fbm_type(h: f64, phi: Phi) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return domain(format!("fbm-type kernel needs H in (1/2, 1), got {h}"));
        }
        let (lo, hi) = phi.envelope();
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return domain(format!("φ envelope must satisfy 0 < k ≤ K < ∞, got [{lo}, {hi}]"));
        }
        let c_h = molchan_golosov_constant(h);
        let hm = h - 0.5;
        let constants = KernelConstants {
            r: Some(hm),
            d2: Some(c_h * hi / hm),
            d3: Some(c_h * hi / hm),
            h2: Some(hm),
            d1: Some(c_h * lo / (2.0 * h - 1.0)),
            h1: Some(2.0 * h - 0.5),
            b3_variant: Some(B3Variant::KernelLower),
            monotone: true,
            ..Default::default()
        };
        Ok(Self {
            form: KernelForm::FbmType { h, phi, c_h },
            constants,
        })
    }

    pub fn exponential(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return domain("exponential kernel rate must be finite");
        }
        // On [0,1]²: e^{a(t−s)} ∈ [min(1, e^a), max(1, e^a)], Lipschitz in t
        // with constant |a|·max(1, e^a).
        let (lo, hi) = if a >= 0.0 { (1.0, a.exp()) } else { (a.exp(), 1.0) };
        let constants = KernelConstants {
            k_low: Some(lo),
            k_up: Some(hi),
            c5: Some(a.abs() * hi),
            h3: Some(1.0),
            monotone: a >= 0.0,
            ..Default::default()
        };
        Ok(Self {
            form: KernelForm::Exponential { a },
            constants,
        })
    }

    pub fn tabulated(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 1 || values.len() != (n + 1) * (n + 1) {
            return domain(format!(
                "tabulated kernel needs (n+1)² = {} values, got {}",
                (n + 1) * (n + 1),
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("tabulated kernel has non-finite entries");
        }
        Ok(Self {
            form: KernelForm::Tabulated { n, values },
            constants: KernelConstants {
                monotone: true,
                ..Default::default()
            },
        })
    }

    pub fn closed_form(label: impl Into<String>, f: KernelFn, constants: KernelConstants) -> Self {
        Self {
            form: KernelForm::ClosedForm {
                label: label.into(),
                f,
            },
            constants,
        }
    }

    pub fn label(&self) -> String {
        match &self.form {
            KernelForm::ClosedForm { label, .. } => format!("closed:{label}"),
            KernelForm::FbmType { h, phi, .. } => match phi {
                Phi::Constant(c) => format!("fbm_type(H={h},phi={c})"),
                Phi::Function { lower, upper, .. } => {
                    format!("fbm_type(H={h},phi in [{lower},{upper}])")
                }
            },
            KernelForm::Exponential { a } => format!("exponential(a={a})"),
            KernelForm::Tabulated { n, .. } => format!("tabulated(n={n})"),
        }
    }

    /// K(t, s); zero for s > t.
    pub fn evaluate(&self, t: f64, s: f64) -> f64 {
        if s > t {
            return 0.0;
        }
        self.raw(t, s)
    }

    fn raw(&self, t: f64, s: f64) -> f64 {
        match &self.form {
            KernelForm::ClosedForm { f, .. } => f(t, s),
            KernelForm::FbmType { h, phi, c_h } => {
                c_h * s.powf(0.5 - h) * phi.eval(s) * fbm_inner(*h, s, s, t)
            }
            KernelForm::Exponential { a } => (a * (t - s)).exp(),
            KernelForm::Tabulated { n, values } => bilinear(*n, values, t, s),
        }
    }

    /// K(t_hi, s)·1{s<t_hi} − K(t_lo, s)·1{s<t_lo} for t_lo ≤ t_hi, computed
    /// without cancellation where the form allows it.
    pub fn increment(&self, t_hi: f64, t_lo: f64, s: f64) -> f64 {
        if s >= t_hi {
            return 0.0;
        }
        if s >= t_lo {
            return self.evaluate(t_hi, s);
        }
        match &self.form {
            KernelForm::FbmType { h, phi, c_h } => {
                c_h * s.powf(0.5 - h) * phi.eval(s) * fbm_inner(*h, s, t_lo, t_hi)
            }
            KernelForm::Exponential { a } => (a * (t_lo - s)).exp() * (a * (t_hi - t_lo)).exp_m1(),
            _ => self.evaluate(t_hi, s) - self.evaluate(t_lo, s),
        }
    }

    /// Whether K(t, ·) blows up at the origin.
    pub fn is_singular_at_origin(&self) -> bool {
        matches!(self.form, KernelForm::FbmType { .. })
    }
}

/// ∫_lo^hi u^{H−1/2} (u−s)^{H−3/2} du for s ≤ lo ≤ hi, after the substitution
/// v = (u−s)^{H−1/2} which turns it into p∫ (s + v^p)^{H−1/2} dv, p = 1/(H−1/2).
pub(crate) fn fbm_inner(h: f64, s: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let c = h - 0.5;
    let p = 1.0 / c;
    let va = (lo - s).max(0.0).powf(c);
    let vb = (hi - s).powf(c);
    let f = |v: f64| (s + v.powf(p)).powf(c);
    let crude = quadrature::gauss_legendre(16).integrate(va, vb, f);
    let tol = 1e-13 * crude.abs().max(1e-300);
    let v = quadrature::adaptive(va, vb, tol, 40, f).unwrap_or_else(|e| match e {
        crate::error::Error::QuadratureNonConvergence { estimate, .. } => estimate,
        _ => crude,
    });
    p * v
}

fn bilinear(n: usize, values: &[f64], t: f64, s: f64) -> f64 {
    let nf = n as f64;
    let x = (t.clamp(0.0, 1.0) * nf).min(nf);
    let y = (s.clamp(0.0, 1.0) * nf).min(nf);
    let i = (x.floor() as usize).min(n.saturating_sub(1));
    let j = (y.floor() as usize).min(n.saturating_sub(1));
    let fx = x - i as f64;
    let fy = y - j as f64;
    let at = |a: usize, b: usize| values[a * (n + 1) + b];
    (1.0 - fx) * (1.0 - fy) * at(i, j)
        + fx * (1.0 - fy) * at(i + 1, j)
        + (1.0 - fx) * fy * at(i, j + 1)
        + fx * fy * at(i + 1, j + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fbm_inner_matches_closed_form_at_origin() {
        // s = 0: ∫_0^t u^{2H−2} du = t^{2H−1}/(2H−1)
        let h = 0.7;
        let v = fbm_inner(h, 0.0, 0.0, 0.8);
        let exact = 0.8f64.powf(2.0 * h - 1.0) / (2.0 * h - 1.0);
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn fbm_inner_matches_brute_force() {
        let (h, s, t) = (0.65, 0.3, 0.9);
        // subtract the singular part analytically, grade the remainder
        let c = h - 0.5;
        let bf = quadrature::graded(s, t, quadrature::Grading::Left, 60, 20, |u| {
            (u.powf(c) - s.powf(c)) * (u - s).powf(c - 1.0)
        }) + s.powf(c) * (t - s).powf(c) / c;
        let v = fbm_inner(h, s, s, t);
        assert!((v - bf).abs() < 1e-8 * v, "{v} vs {bf}");
    }

    #[test]
    fn increment_is_difference_and_nonnegative() {
        let k = Kernel::fbm_type(0.7, Phi::Constant(1.0)).unwrap();
        for &(hi, lo, s) in &[(0.9, 0.5, 0.2), (0.6, 0.55, 0.54), (1.0, 0.1, 0.05)] {
            let d = k.increment(hi, lo, s);
            let diff = k.evaluate(hi, s) - k.evaluate(lo, s);
            assert!(d >= 0.0);
            assert!((d - diff).abs() < 1e-10 * k.evaluate(hi, s));
        }
        let e = Kernel::exponential(1.0).unwrap();
        let d = e.increment(0.7, 0.4, 0.1);
        assert!((d - (0.6f64.exp() - 0.3f64.exp())).abs() < 1e-14);
    }

    #[test]
    fn tabulated_interpolates_nodes() {
        let n = 4;
        let vals: Vec<f64> = (0..(n + 1) * (n + 1)).map(|k| k as f64).collect();
        let k = Kernel::tabulated(n, vals).unwrap();
        assert_eq!(k.evaluate(1.0, 0.5), (4 * 5 + 2) as f64);
        assert!((k.evaluate(0.375, 0.25) - (1.5 * 5.0 + 1.0)).abs() < 1e-12);
    }
}
