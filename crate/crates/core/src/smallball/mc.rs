//! Monte-Carlo small-ball probabilities.

use crate::error::{domain, Result};
use crate::models::ProcessModel;
use crate::sampler::{path_statistic, RngSpec, Sampler, StatKind, TimeGrid};
use serde::Serialize;

/// How the supremum over the window is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitoring {
    /// Supremum over grid points: biased upward as a probability.
    Grid,
    /// Wiener only: each path is weighted by the exact probability that the
    /// Brownian bridges between grid points stay inside the band, giving an
    /// unbiased estimate of the continuous-time probability.
    BrownianBridge,
}

impl std::str::FromStr for Monitoring {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Monitoring::Grid),
            "bridge" | "brownian_bridge" => Ok(Monitoring::BrownianBridge),
            _ => domain(format!("unknown monitoring '{s}' (expected grid|bridge)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSettings {
    pub n_grid: usize,
    pub m_paths: usize,
    pub seed: u64,
    pub monitoring: Monitoring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub eps: f64,
    pub estimate: f64,
    /// 95% halfwidth (1.96 standard errors).
    pub halfwidth: f64,
}

impl McEstimate {
    pub fn std_error(&self) -> f64 {
        self.halfwidth / 1.96
    }
}

pub const Z95: f64 = 1.96;

fn check_settings(n_grid: usize, m: usize) -> Result<()> {
    if n_grid < 128 {
        return domain(format!("n_grid = {n_grid} < 128 gives uncontrolled discretization bias"));
    }
    if m < 1000 {
        return domain(format!("m_paths = {m} < 1000"));
    }
    Ok(())
}

/// Probability that a Brownian bridge of duration h from x to y stays in
/// (lo, hi), by the method of images.
pub fn bridge_survival(x: f64, y: f64, lo: f64, hi: f64, h: f64) -> f64 {
    if !(x > lo && x < hi && y > lo && y < hi) {
        return 0.0;
    }
    let w = hi - lo;
    let d = y - x;
    // images of x across lo, shifted by multiples of 2w
    let s = y + x - 2.0 * lo;
    let mut p = 1.0;
    // terms decay like exp(−2k²w²/h); stop once negligible
    let kmax = 1 + (40.0 * h).sqrt().div_euclid(w) as i64 + 1;
    for k in -kmax..=kmax {
        let kw = k as f64 * w;
        if k != 0 {
            p += (-2.0 * kw * (kw - d) / h).exp();
        }
        let e = s - 2.0 * kw;
        p -= (-(e * e - d * d) / (2.0 * h)).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Product of bridge survival probabilities for the band x0 ± eps.
fn bridge_weight(path: &[f64], x0: f64, eps: f64, h: f64) -> f64 {
    let (lo, hi) = (x0 - eps, x0 + eps);
    let mut wgt = 1.0;
    for s in path.windows(2) {
        let (x, y) = (s[0], s[1]);
        let near = (x - lo).min(hi - x) * (y - lo).min(hi - y);
        // both single-barrier terms below e^{−60}: survival is 1 to roundoff
        if near > 30.0 * h {
            continue;
        }
        wgt *= bridge_survival(x, y, lo, hi, h);
        if wgt == 0.0 {
            break;
        }
    }
    wgt
}

fn window_grid(window: (f64, f64), n_grid: usize) -> Result<TimeGrid> {
    TimeGrid::new(window.0, window.1, n_grid)
}

/// Estimates P{statistic over the window ≤ ε} for every ε in one pass over
/// the paths.
pub fn mc_curve(
    model: &ProcessModel,
    eps_list: &[f64],
    window: (f64, f64),
    kind: StatKind,
    settings: &McSettings,
) -> Result<Vec<McEstimate>> {
    curve_with_rng(model, eps_list, window, kind, settings, RngSpec::new(settings.seed))
}

fn curve_with_rng(
    model: &ProcessModel,
    eps_list: &[f64],
    window: (f64, f64),
    kind: StatKind,
    settings: &McSettings,
    rng: RngSpec,
) -> Result<Vec<McEstimate>> {
    check_settings(settings.n_grid, settings.m_paths)?;
    let grid = window_grid(window, settings.n_grid)?;
    let sampler = Sampler::new(model, grid)?;
    let m = settings.m_paths;
    match settings.monitoring {
        Monitoring::Grid => {
            let stats = sampler.map_paths(m, rng, |_, p| path_statistic(p, 0, p.len() - 1, kind))?;
            let stats: Vec<f64> = stats.into_iter().collect::<Result<_>>()?;
            Ok(eps_list
                .iter()
                .map(|&eps| {
                    let hits = stats.iter().filter(|&&s| s <= eps).count();
                    let p = hits as f64 / m as f64;
                    McEstimate {
                        eps,
                        estimate: p,
                        halfwidth: Z95 * (p * (1.0 - p) / m as f64).sqrt(),
                    }
                })
                .collect())
        }
        Monitoring::BrownianBridge => {
            if !matches!(model, ProcessModel::Wiener) || kind != StatKind::Anchored {
                return domain("bridge monitoring is exact only for the anchored Wiener statistic");
            }
            let h = grid.step();
            let weights = sampler.map_paths(m, rng, |_, p| {
                let stat = path_statistic(p, 0, p.len() - 1, StatKind::Anchored).unwrap_or(f64::INFINITY);
                eps_list
                    .iter()
                    .map(|&eps| if stat >= eps { 0.0 } else { bridge_weight(p, p[0], eps, h) })
                    .collect::<Vec<f64>>()
            })?;
            Ok(eps_list
                .iter()
                .enumerate()
                .map(|(k, &eps)| {
                    let (mut s, mut s2) = (0.0, 0.0);
                    for w in &weights {
                        s += w[k];
                        s2 += w[k] * w[k];
                    }
                    let mean = s / m as f64;
                    let var = ((s2 - m as f64 * mean * mean) / (m as f64 - 1.0)).max(0.0);
                    McEstimate {
                        eps,
                        estimate: mean,
                        halfwidth: Z95 * (var / m as f64).sqrt(),
                    }
                })
                .collect())
        }
    }
}

/// Grid-monitored estimate of P{statistic over the window ≤ ε}.
pub fn mc_estimate(
    model: &ProcessModel,
    eps: f64,
    window: (f64, f64),
    kind: StatKind,
    n_grid: usize,
    m_paths: usize,
    rng: RngSpec,
) -> Result<McEstimate> {
    let settings = McSettings {
        n_grid,
        m_paths,
        seed: rng.master_seed,
        monitoring: Monitoring::Grid,
    };
    Ok(curve_with_rng(model, &[eps], window, kind, &settings, rng)?[0])
}

/// Least-squares slope of log(−log p) against log(1/ε) over estimates with
/// 0 < p < 1; None with fewer than two usable points.
pub fn fit_decay_slope(points: &[(f64, f64)]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, p)| *p > 0.0 && *p < 1.0)
        .map(|&(eps, p)| ((1.0 / eps).ln(), (-p.ln()).ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
