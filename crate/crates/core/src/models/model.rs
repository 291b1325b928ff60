use super::kernel::{Kernel, KernelForm};
use super::volterra;
use crate::error::{domain, Error, Result};

/// Tagged description of a centred Gaussian process on [0, 1] with X₀ = 0.
#[derive(Debug, Clone)]
pub enum ProcessModel {
    Wiener,
    Fbm { h: f64 },
    SubFbm { h: f64 },
    BiFbm { h: f64, k: f64 },
    VolterraWiener { kernel: Kernel },
    VolterraFbm { kernel: Kernel, h: f64 },
    /// ∫_0^t e^{a(t−s)} dB^H_s.
    FracOu { a: f64, h: f64 },
}

/// Relative tolerance of the positive-semidefiniteness check.
pub const TOL_PSD: f64 = 1e-10;
/// Relative tolerance of the increment sign check.
pub const TOL_SIGN: f64 = 1e-12;

fn check_unit(name: &str, v: f64, lo_open: f64, hi: f64, hi_closed: bool) -> Result<()> {
    let ok = v > lo_open && if hi_closed { v <= hi } else { v < hi };
    if ok && v.is_finite() {
        Ok(())
    } else {
        let close = if hi_closed { ']' } else { ')' };
        domain(format!("{name} = {v} outside ({lo_open}, {hi}{close}"))
    }
}

impl ProcessModel {
    pub fn fbm(h: f64) -> Result<Self> {
        let m = Self::Fbm { h };
        m.validate()?;
        Ok(m)
    }
    pub fn sub_fbm(h: f64) -> Result<Self> {
        let m = Self::SubFbm { h };
        m.validate()?;
        Ok(m)
    }
    pub fn bi_fbm(h: f64, k: f64) -> Result<Self> {
        let m = Self::BiFbm { h, k };
        m.validate()?;
        Ok(m)
    }
    pub fn frac_ou(a: f64, h: f64) -> Result<Self> {
        let m = Self::FracOu { a, h };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Wiener | Self::VolterraWiener { .. } => Ok(()),
            Self::Fbm { h } | Self::SubFbm { h } => check_unit("H", *h, 0.0, 1.0, false),
            Self::BiFbm { h, k } => {
                check_unit("H", *h, 0.0, 1.0, false)?;
                check_unit("K", *k, 0.0, 1.0, true)
            }
            Self::VolterraFbm { h, .. } => check_unit("H", *h, 0.5, 1.0, false),
            Self::FracOu { a, h } => {
                if !a.is_finite() {
                    return domain("fractional OU drift must be finite");
                }
                check_unit("H", *h, 0.5, 1.0, false)
            }
        }
    }

    /// Stable human-readable identifier, used in manifests and dumps.
    pub fn id(&self) -> String {
        match self {
            Self::Wiener => "wiener".into(),
            Self::Fbm { h } => format!("fbm(H={h})"),
            Self::SubFbm { h } => format!("subfbm(H={h})"),
            Self::BiFbm { h, k } => format!("bifbm(H={h},K={k})"),
            Self::VolterraWiener { kernel } => format!("volterra_wiener({})", kernel.label()),
            Self::VolterraFbm { kernel, h } => format!("volterra_fbm(H={h},{})", kernel.label()),
            Self::FracOu { a, h } => format!("frac_ou(a={a},H={h})"),
        }
    }

    /// Nominal self-similarity / regularity index, where the family has one.
    pub fn declared_h(&self) -> Option<f64> {
        match self {
            Self::Wiener => Some(0.5),
            Self::Fbm { h } | Self::SubFbm { h } | Self::FracOu { h, .. } => Some(*h),
            Self::BiFbm { h, k } => Some(h * k),
            Self::VolterraWiener { kernel } => match kernel.form {
                KernelForm::FbmType { h, .. } => Some(h),
                _ => None,
            },
            Self::VolterraFbm { h, .. } => Some(*h),
        }
    }

    pub fn has_stationary_increments(&self) -> bool {
        matches!(self, Self::Wiener | Self::Fbm { .. })
    }

    /// E[Y_1 Y_{1+lag}] for the increments Y_k = X_{k dt} − X_{(k−1) dt} of a
    /// stationary-increment model.
    pub fn increment_autocovariance(&self, dt: f64, lag: usize) -> Option<f64> {
        match self {
            Self::Wiener => Some(if lag == 0 { dt } else { 0.0 }),
            Self::Fbm { h } => {
                let h2 = 2.0 * h;
                let k = lag as f64;
                let v = if lag == 0 {
                    1.0
                } else {
                    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).powf(h2))
                };
                Some(v * dt.powf(h2))
            }
            _ => None,
        }
    }

    fn volterra_kernel(&self) -> Option<(Kernel, Option<f64>)> {
        match self {
            Self::VolterraWiener { kernel } => Some((kernel.clone(), None)),
            Self::VolterraFbm { kernel, h } => Some((kernel.clone(), Some(*h))),
            Self::FracOu { a, h } => Some((Kernel::exponential(*a).ok()?, Some(*h))),
            _ => None,
        }
    }

    /// R(s, t).
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        check_time(s)?;
        check_time(t)?;
        Ok(match self {
            Self::Wiener => s.min(t),
            Self::Fbm { h } => {
                let e = 2.0 * h;
                0.5 * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
            }
            Self::SubFbm { h } => {
                let e = 2.0 * h;
                s.powf(e) + t.powf(e) - 0.5 * ((s + t).powf(e) + (t - s).abs().powf(e))
            }
            Self::BiFbm { h, k } => {
                let e = 2.0 * h;
                0.5f64.powf(*k) * ((s.powf(e) + t.powf(e)).powf(*k) - (t - s).abs().powf(e * k))
            }
            _ => {
                let (kernel, hb) = self.volterra_kernel().expect("volterra variant");
                if s == 0.0 || t == 0.0 {
                    return Ok(0.0);
                }
                let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
                let f1 = |z: f64| kernel.evaluate(lo, z);
                let f2 = |z: f64| kernel.evaluate(hi, z);
                match hb {
                    None => volterra::wiener_form(f1, f2, lo, &[], 1e-300)?,
                    Some(h) => volterra::fbm_form(h, f1, lo, &[], f2, hi, &[lo], 1e-300)?,
                }
            }
        })
    }

    /// E(X_t − X_s)² for s ≤ t.
    pub fn incremental_variance(&self, s: f64, t: f64) -> Result<f64> {
        check_time(s)?;
        check_time(t)?;
        if s > t {
            return domain(format!("incremental_variance needs s ≤ t, got s={s}, t={t}"));
        }
        if s == t {
            return Ok(0.0);
        }
        match self {
            Self::Wiener => Ok(t - s),
            Self::Fbm { h } => Ok((t - s).powf(2.0 * h)),
            Self::SubFbm { .. } | Self::BiFbm { .. } => {
                let rtt = self.covariance(t, t)?;
                let rss = self.covariance(s, s)?;
                let v = rtt - 2.0 * self.covariance(s, t)? + rss;
                clamp_psd(v, rtt.max(rss))
            }
            _ => {
                let (kernel, hb) = self.volterra_kernel().expect("volterra variant");
                let d = |z: f64| kernel.increment(t, s, z);
                let v = match hb {
                    None => volterra::wiener_form(d, d, t, &[s], 1e-300)?,
                    Some(h) => volterra::fbm_form(h, d, t, &[s], d, t, &[s], 1e-300)?,
                };
                clamp_psd(v, v.abs())
            }
        }
    }

    /// E(X_{t1} − X_{s1})(X_{t2} − X_{s2}) for s1 ≤ t1 and s2 ≤ t2.
    pub fn incremental_covariance(&self, s1: f64, t1: f64, s2: f64, t2: f64) -> Result<f64> {
        for v in [s1, t1, s2, t2] {
            check_time(v)?;
        }
        if s1 > t1 || s2 > t2 {
            return domain(format!(
                "incremental_covariance needs s1 ≤ t1, s2 ≤ t2, got ({s1}, {t1}, {s2}, {t2})"
            ));
        }
        match self {
            Self::Wiener => Ok((t1.min(t2) - s1.max(s2)).max(0.0)),
            Self::Fbm { h } => {
                let e = 2.0 * h;
                let p = |x: f64| x.abs().powf(e);
                Ok(0.5 * (p(t2 - s1) + p(s2 - t1) - p(t2 - t1) - p(s2 - s1)))
            }
            Self::SubFbm { .. } | Self::BiFbm { .. } => Ok(self.covariance(t1, t2)?
                - self.covariance(t1, s2)?
                - self.covariance(s1, t2)?
                + self.covariance(s1, s2)?),
            _ => {
                let (kernel, hb) = self.volterra_kernel().expect("volterra variant");
                let d1 = |z: f64| kernel.increment(t1, s1, z);
                let d2 = |z: f64| kernel.increment(t2, s2, z);
                match hb {
                    None => volterra::wiener_form(d1, d2, t1.min(t2), &[s1, s2], 1e-300),
                    Some(h) => volterra::fbm_form(h, d1, t1, &[s1], d2, t2, &[s2], 1e-300),
                }
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        domain(format!("time {t} outside [0, 1]"))
    }
}

fn clamp_psd(v: f64, scale: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -TOL_PSD * scale.max(f64::MIN_POSITIVE) {
        Ok(0.0)
    } else {
        Err(Error::ModelInconsistency(format!(
            "negative incremental variance {v:e} (scale {scale:e})"
        )))
    }
}

pub fn covariance(model: &ProcessModel, s: f64, t: f64) -> Result<f64> {
    model.covariance(s, t)
}

pub fn incremental_variance(model: &ProcessModel, s: f64, t: f64) -> Result<f64> {
    model.incremental_variance(s, t)
}

pub fn incremental_covariance(model: &ProcessModel, s1: f64, t1: f64, s2: f64, t2: f64) -> Result<f64> {
    model.incremental_covariance(s1, t1, s2, t2)
}
