use crate::error::{Error, Result};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    /// max − min over the window.
    Range,
    /// Largest deviation from the window's first value.
    Anchored,
}

impl StatKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatKind::Range => "range",
            StatKind::Anchored => "anchored",
        }
    }
}

impl std::str::FromStr for StatKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(StatKind::Range),
            "anchored" => Ok(StatKind::Anchored),
            _ => Err(Error::Domain(format!("unknown statistic '{s}' (expected range|anchored)"))),
        }
    }
}

pub fn path_statistic(path: &[f64], i0: usize, i1: usize, kind: StatKind) -> Result<f64> {
    if i0 > i1 || i1 >= path.len() {
        return Err(Error::EmptyWindow {
            i0,
            i1,
            len: path.len(),
        });
    }
    let w = &path[i0..=i1];
    Ok(match kind {
        StatKind::Range => {
            let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            hi - lo
        }
        StatKind::Anchored => {
            let x0 = w[0];
            w.iter().fold(0.0f64, |m, &x| m.max((x - x0).abs()))
        }
    })
}

/// Kolmogorov–Smirnov distance between the sample and N(0, 1).
pub fn ks_statistic_standard_normal(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let norm = Normal::standard();
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = norm.cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Asymptotic KS critical value at significance `level`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
