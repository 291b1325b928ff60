use super::clamp::SmoothClamp;
use super::params::{check_constraints, ReplicationParams};
use super::schedule::{make_schedule, ScheduleKind};
use crate::error::{domain, Error, Result};
use crate::quadrature::zeta;
use crate::sampler::TimeGrid;
use serde::Serialize;

/// Minimum grid steps per block of the standalone run.
pub const MIN_BLOCK_POINTS: usize = 8;
/// Inner sub-blocks shorter than this are merged into one.
pub const MIN_SUB_BLOCK_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// First grid node where |X − X_start| ≥ k^{−β}.
    GridIndex,
    /// As `GridIndex`, but the contribution is taken at the linearly
    /// interpolated crossing, i.e. without overshoot.
    Interpolated,
}

impl std::str::FromStr for StopRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(StopRule::GridIndex),
            "interpolated" => Ok(StopRule::Interpolated),
            _ => Err(Error::Domain(format!("unknown stop rule '{s}' (expected grid|interpolated)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaConfig {
    pub beta: f64,
    pub gamma: f64,
    pub n_blocks: usize,
    pub stop_rule: StopRule,
}

impl LemmaConfig {
    pub fn from_params(p: &ReplicationParams, n_blocks: usize) -> Self {
        Self {
            beta: p.beta,
            gamma: p.gamma,
            n_blocks,
            stop_rule: StopRule::GridIndex,
        }
    }

    /// β and γ checked against the constraints that involve them.
    pub fn validate(&self, p: &ReplicationParams) -> Result<()> {
        let bad: Vec<String> = check_constraints(
            p.theta,
            p.alpha,
            p.kappa,
            p.rho,
            self.beta,
            self.gamma,
            p.exponents.lambda,
            p.exponents.mu,
        )
        .into_iter()
        .filter(|s| s.starts_with("β") || s.contains("γ"))
        .collect();
        if !bad.is_empty() {
            return domain(format!("infeasible lemma parameters: {}", bad.join("; ")));
        }
        if self.n_blocks == 0 {
            return domain("need at least one block");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRun {
    /// k^{β−1} g_k(X_{τ_k} − X_{t_{k−1}}) per block.
    pub contributions: Vec<f64>,
    /// τ_k < t_k.
    pub success: Vec<bool>,
    pub tau_index: Vec<usize>,
    pub cumulative: Vec<f64>,
    pub hit: bool,
    /// First block (1-based) after which the cumulative sum exceeds the level.
    pub hit_block: Option<usize>,
}

/// A sub-block [start, end] of grid indices with its label k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SubBlock {
    pub k: usize,
    pub start: usize,
    pub end: usize,
}

#[inline]
pub(crate) fn clamp_for(k: usize) -> SmoothClamp {
    SmoothClamp::new(0.5f64.powi(k.min(1000) as i32))
}

/// Outcome of walking the lemma integrand over consecutive sub-blocks.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Walk {
    pub contributions: Vec<f64>,
    pub success: Vec<bool>,
    pub tau_index: Vec<usize>,
    /// Node at which the running integral reached the target, with the
    /// multiplicative truncation applied to the last contribution.
    pub stop: Option<(usize, f64)>,
    /// Running integral at the end of the walk.
    pub total: f64,
}

/// Walks φ = Σ k^{β−1} g′_k(s·(X − X_{start_k})) sub-block by sub-block.
/// `scale` maps path increments to the unit-scale lemma. With a target T,
/// the walk stops at the first node where the running integral reaches T
/// and the last contribution is scaled down to land on T exactly. When
/// `psi` is given, the integrand values (in path units) are written into it
/// at the active nodes, multiplied by `sign`.
pub(crate) fn walk(
    x: &[f64],
    blocks: &[SubBlock],
    beta: f64,
    scale: f64,
    stop_rule: StopRule,
    target: Option<f64>,
    sign: f64,
    mut psi: Option<&mut [f64]>,
) -> Walk {
    let mut w = Walk {
        contributions: Vec::with_capacity(blocks.len()),
        success: Vec::with_capacity(blocks.len()),
        tau_index: Vec::with_capacity(blocks.len()),
        stop: None,
        total: 0.0,
    };
    if target == Some(0.0) {
        return Walk {
            stop: blocks.first().map(|b| (b.start, 1.0)),
            ..w
        };
    }
    for b in blocks {
        let kf = b.k as f64;
        let weight = kf.powf(beta - 1.0);
        let thr = kf.powf(-beta);
        let g = clamp_for(b.k);
        let x0 = x[b.start];
        let mut tau = b.end;
        let mut hit_thr = false;
        let mut c = 0.0;
        let mut j_stop = None;
        for j in b.start..=b.end {
            let y = scale * (x[j] - x0);
            let crossed = j > b.start && y.abs() >= thr;
            let y_eff = if crossed && stop_rule == StopRule::Interpolated {
                // land on the crossing of the linear interpolant
                thr.copysign(y)
            } else {
                y
            };
            if let Some(p) = psi.as_deref_mut() {
                p[j] = sign * scale * weight * g.dg(y_eff);
            }
            c = weight * g.g(y_eff);
            if let Some(t) = target {
                if w.total + c >= t {
                    j_stop = Some(j);
                    break;
                }
            }
            if crossed {
                tau = j;
                hit_thr = j < b.end;
                break;
            }
        }
        if let (Some(j), Some(t)) = (j_stop, target) {
            let factor = if c > 0.0 { (t - w.total) / c } else { 1.0 };
            if let Some(p) = psi.as_deref_mut() {
                for v in &mut p[b.start..=j] {
                    *v *= factor;
                }
            }
            w.contributions.push(t - w.total);
            w.success.push(true);
            w.tau_index.push(j);
            w.total = t;
            w.stop = Some((j, factor));
            return w;
        }
        w.contributions.push(c);
        w.success.push(hit_thr);
        w.tau_index.push(tau);
        w.total += c;
        if let Some(p) = psi.as_deref_mut() {
            for v in &mut p[tau + 1..=b.end] {
                *v = 0.0;
            }
        }
    }
    w
}

/// Runs the diverging integrand on one path over a power schedule of
/// `cfg.n_blocks` blocks on [0, 1].
pub fn run_diverging_integrand(
    path: &[f64],
    grid: &TimeGrid,
    params: &ReplicationParams,
    cfg: &LemmaConfig,
    level: f64,
) -> Result<LemmaRun> {
    cfg.validate(params)?;
    if path.len() != grid.len() {
        return domain(format!("path has {} values, grid has {}", path.len(), grid.len()));
    }
    if grid.t0 != 0.0 || (grid.end() - 1.0).abs() > 1e-12 {
        return domain("the diverging integrand runs on a grid of [0, 1]");
    }
    let schedule = make_schedule(ScheduleKind::Power { gamma: cfg.gamma }, cfg.n_blocks)?;
    let idx = schedule.grid_indices(grid, MIN_BLOCK_POINTS)?;
    let blocks: Vec<SubBlock> = idx
        .windows(2)
        .enumerate()
        .map(|(i, w)| SubBlock {
            k: i + 1,
            start: w[0],
            end: w[1],
        })
        .collect();
    let wk = walk(path, &blocks, cfg.beta, 1.0, cfg.stop_rule, None, 1.0, None);
    let mut cumulative = Vec::with_capacity(wk.contributions.len());
    let mut acc = 0.0;
    let mut hit_block = None;
    for (i, c) in wk.contributions.iter().enumerate() {
        acc += c;
        cumulative.push(acc);
        if hit_block.is_none() && acc > level {
            hit_block = Some(i + 1);
        }
    }
    Ok(LemmaRun {
        contributions: wk.contributions,
        success: wk.success,
        tau_index: wk.tau_index,
        cumulative,
        hit: hit_block.is_some(),
        hit_block,
    })
}

/// Power sub-partition of [start, end] (grid indices): the normalised
/// schedule K k^{−γ} rescaled to the block, with the tail merged into one
/// sub-block once pieces drop below `MIN_SUB_BLOCK_POINTS` steps.
pub(crate) fn inner_sub_blocks(start: usize, end: usize, gamma: f64) -> Vec<SubBlock> {
    let len = (end - start) as f64;
    let kk = 1.0 / zeta(gamma);
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut s = start;
    let mut k = 1usize;
    loop {
        t += kk * (k as f64).powf(-gamma);
        let e = (start + (len * t).round() as usize).min(end);
        let remaining = end - s;
        if e - s < MIN_SUB_BLOCK_POINTS || end - e < MIN_SUB_BLOCK_POINTS || remaining < 2 * MIN_SUB_BLOCK_POINTS {
            out.push(SubBlock { k, start: s, end });
            return out;
        }
        out.push(SubBlock { k, start: s, end: e });
        s = e;
        k += 1;
    }
}
