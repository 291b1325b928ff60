use super::clamp::SmoothClamp;
use super::lemma::{clamp_for, inner_sub_blocks, walk, StopRule};
use super::params::ReplicationParams;
use super::schedule::BlockSchedule;
use crate::error::{domain, Error, Result};
use crate::fraccalc::GridFunction;
use serde::Serialize;

/// Decides whether block n+1 is a catch-up (Case 1) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CatchUpTrigger {
    /// Catch up after any block that missed its target.
    Missed,
    /// B_n ∩ {sup_{[t_{n−1},t_n]} |X − X_{t_{n−1}}| ≤ δ_n/σ_n + ν_n}, taken
    /// literally; a failed catch-up block is not retried.
    Envelope,
}

impl std::str::FromStr for CatchUpTrigger {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "missed" => Ok(CatchUpTrigger::Missed),
            "envelope" => Ok(CatchUpTrigger::Envelope),
            _ => Err(Error::Domain(format!("unknown trigger '{s}' (expected missed|envelope)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockCase {
    /// Case 1: offset the accumulated gap with the diverging integrand.
    CatchUp,
    /// Case 2: follow the increment ξ_n − ξ_{n−1} with the clamp tracker.
    Tracking,
}

impl BlockCase {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockCase::CatchUp => "catch-up",
            BlockCase::Tracking => "tracking",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    /// Block [t_n, t_{n+1}], n ≥ 1.
    pub n: usize,
    pub case: BlockCase,
    pub start_index: usize,
    pub end_index: usize,
    pub tau_index: usize,
    /// ξ_n − V(t_n) for catch-up blocks, ξ_n − ξ_{n−1} for tracking blocks.
    pub block_target: f64,
    /// V(t_{n+1}) − V(t_n).
    pub achieved: f64,
    pub v_at_tn: f64,
    pub z_at_tn_minus_1: f64,
    /// The block ran as Case 1.
    pub event_a: bool,
    /// Target reached inside the block.
    pub reached: bool,
    /// Factor applied to the last catch-up contribution.
    pub truncation: Option<f64>,
    /// |achieved| − |block_target| for tracking blocks that reached it.
    pub overshoot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationTrace {
    pub psi: GridFunction,
    pub v: GridFunction,
    pub target: GridFunction,
    pub blocks: Vec<BlockRecord>,
    /// Grid index of t_0..t_N.
    pub block_index: Vec<usize>,
    pub terminal_error: f64,
}

impl ReplicationTrace {
    pub fn failures(&self) -> usize {
        self.blocks.iter().filter(|b| !b.reached).count()
    }

    pub fn last_catch_up(&self) -> Option<usize> {
        self.blocks.iter().rev().find(|b| b.event_a).map(|b| b.n)
    }
}

/// Block scheme driving V = ∫ψ dX towards the lagged target: after block
/// n, V(t_{n+1}) = Z(t_n) up to grid effects. ψ vanishes on [0, t_1] and
/// after t_N.
pub fn run_replication(
    path: &GridFunction,
    z: &GridFunction,
    params: &ReplicationParams,
    schedule: &BlockSchedule,
    trigger: CatchUpTrigger,
) -> Result<ReplicationTrace> {
    if path.grid != z.grid {
        return domain("Z must be tabulated on the path's grid");
    }
    let grid = path.grid;
    if grid.t0 != 0.0 || (grid.end() - 1.0).abs() > 1e-12 {
        return domain("replication runs on a grid of [0, 1]");
    }
    let bad = params.violations();
    if !bad.is_empty() {
        return domain(format!("infeasible parameters: {}", bad.join("; ")));
    }
    if let Some(h) = z.holder_hint {
        if h + 1e-12 < params.rho {
            return domain(format!("Z has Hölder hint {h} below ρ = {}", params.rho));
        }
    }
    let idx = schedule.grid_indices(&grid, 1)?;
    let x = &path.values;
    let zv = &z.values;
    let len = grid.len();
    let mut psi = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut blocks = Vec::with_capacity(schedule.n_blocks.saturating_sub(1));
    let r = params.mu_over_lambda();
    let mut catch_up = true; // A_1 = Ω
    let mut v_now = 0.0;

    for n in 1..schedule.n_blocks {
        let (a, b) = (idx[n], idx[n + 1]);
        let delta_n = schedule.t[n + 1] - schedule.t[n];
        let xi = zv[a];
        let xi_prev = zv[idx[n - 1]];
        let v_at_tn = v_now;
        let sigma = params.sigma(n, delta_n);
        let nu = params.nu(n, delta_n);
        let record = if catch_up {
            let block_target = xi - v_now;
            let sign = if block_target < 0.0 { -1.0 } else { 1.0 };
            let scale = delta_n.powf(-r);
            let subs = inner_sub_blocks(a, b, params.gamma);
            let wk = walk(
                x,
                &subs,
                params.beta,
                scale,
                StopRule::GridIndex,
                Some(block_target.abs()),
                sign,
                Some(&mut psi),
            );
            // running integral on the block, in closed form per sub-block
            let mut acc = 0.0;
            let stop = wk.stop.map_or(b, |s| s.0);
            let n_done = wk.contributions.len();
            for (i, (sb, (&c, &tau))) in subs.iter().zip(wk.contributions.iter().zip(&wk.tau_index)).enumerate() {
                let weight = (sb.k as f64).powf(params.beta - 1.0);
                let g = clamp_for(sb.k);
                let factor = match wk.stop {
                    Some((_, f)) if i + 1 == n_done => f,
                    _ => 1.0,
                };
                for j in sb.start..=sb.end {
                    let inc = if j <= tau {
                        factor * weight * g.g(scale * (x[j] - x[sb.start]))
                    } else {
                        c
                    };
                    v[j] = v_at_tn + sign * (acc + inc);
                }
                acc += c;
            }
            let reached = wk.stop.is_some();
            let tau_index = if reached { stop } else { b };
            for j in tau_index + 1..=b {
                psi[j] = 0.0;
                v[j] = v_at_tn + sign * wk.total;
            }
            v_now = v_at_tn + sign * wk.total;
            if reached {
                // exact landing; remove roundoff
                v_now = xi;
                v[tau_index..=b].iter_mut().for_each(|e| *e = xi);
            }
            BlockRecord {
                n,
                case: BlockCase::CatchUp,
                start_index: a,
                end_index: b,
                tau_index,
                block_target,
                achieved: v_now - v_at_tn,
                v_at_tn,
                z_at_tn_minus_1: xi_prev,
                event_a: true,
                reached,
                truncation: wk.stop.map(|s| s.1),
                overshoot: 0.0,
            }
        } else {
            let block_target = xi - xi_prev;
            let delta = block_target.abs();
            let sign = if block_target < 0.0 { -1.0 } else { 1.0 };
            let g = SmoothClamp::new(nu);
            let mut tau = b;
            let mut reached = false;
            for j in a..=b {
                let y = x[j] - x[a];
                let gy = sigma * g.g(y);
                psi[j] = sign * sigma * g.dg(y);
                v[j] = v_at_tn + sign * gy;
                if gy >= delta {
                    tau = j;
                    reached = true;
                    break;
                }
            }
            let inc = v[tau] - v_at_tn;
            for j in tau + 1..=b {
                psi[j] = 0.0;
                v[j] = v[tau];
            }
            if delta == 0.0 {
                psi[a] = 0.0;
            }
            v_now = v_at_tn + inc;
            BlockRecord {
                n,
                case: BlockCase::Tracking,
                start_index: a,
                end_index: b,
                tau_index: tau,
                block_target,
                achieved: inc,
                v_at_tn,
                z_at_tn_minus_1: xi_prev,
                event_a: false,
                reached,
                truncation: None,
                overshoot: if reached { inc.abs() - delta } else { 0.0 },
            }
        };
        catch_up = match trigger {
            CatchUpTrigger::Missed => !record.reached,
            CatchUpTrigger::Envelope => {
                if record.event_a {
                    false
                } else {
                    let (p0, p1) = (idx[n - 1], idx[n]);
                    let sup = x[p0..=p1].iter().fold(0.0f64, |m, &e| m.max((e - x[p0]).abs()));
                    sup <= record.block_target.abs() / sigma + nu
                }
            }
        };
        blocks.push(record);
    }
    let last = idx[schedule.n_blocks];
    for j in last + 1..len {
        v[j] = v_now;
    }
    let terminal_error = (v[last] - zv[idx[schedule.n_blocks - 1]]).abs();
    if !terminal_error.is_finite() {
        return Err(Error::Numeric("non-finite replication error".into()));
    }
    Ok(ReplicationTrace {
        psi: GridFunction::new(grid, psi, None)?,
        v: GridFunction::new(grid, v, None)?,
        target: z.clone(),
        blocks,
        block_index: idx,
        terminal_error,
    })
}
