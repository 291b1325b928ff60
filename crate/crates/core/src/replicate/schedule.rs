use crate::error::{domain, Result};
use crate::quadrature::{hurwitz_zeta, zeta};
use crate::sampler::TimeGrid;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ScheduleKind {
    /// Δ_k = K k^{−γ}, K = 1/ζ(γ).
    Power { gamma: f64 },
    /// Δ_k = 2^{−k}.
    Dyadic,
}

/// Block times t_0 = 0 < t_1 < … < t_N < 1 with Δ_k = t_k − t_{k−1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSchedule {
    pub kind: ScheduleKind,
    pub n_blocks: usize,
    pub t: Vec<f64>,
    pub deltas: Vec<f64>,
}

pub fn make_schedule(kind: ScheduleKind, n_blocks: usize) -> Result<BlockSchedule> {
    if n_blocks == 0 {
        return domain("schedule needs at least one block");
    }
    let deltas: Vec<f64> = match kind {
        ScheduleKind::Power { gamma } => {
            if !(gamma > 1.0) || !gamma.is_finite() {
                return domain(format!("power schedule needs γ > 1, got {gamma}"));
            }
            let k = 1.0 / zeta(gamma);
            (1..=n_blocks).map(|i| k * (i as f64).powf(-gamma)).collect()
        }
        ScheduleKind::Dyadic => {
            if n_blocks < 2 {
                return domain("dyadic schedule needs N ≥ 2");
            }
            (1..=n_blocks).map(|i| 0.5f64.powi(i as i32)).collect()
        }
    };
    let mut t = Vec::with_capacity(n_blocks + 1);
    t.push(0.0);
    match kind {
        // 1 − 2^{−n} is exact in binary
        ScheduleKind::Dyadic => t.extend((1..=n_blocks).map(|i| 1.0 - 0.5f64.powi(i as i32))),
        ScheduleKind::Power { gamma } => {
            // t_n = 1 − K ζ(γ, n+1) keeps the partial sums consistent with the tail
            let k = 1.0 / zeta(gamma);
            let mut acc = 0.0;
            for (i, d) in deltas.iter().enumerate() {
                acc += d;
                let from_tail = 1.0 - k * hurwitz_zeta(gamma, (i + 2) as f64);
                t.push(if (acc - from_tail).abs() < 1e-12 { acc } else { from_tail });
            }
        }
    }
    Ok(BlockSchedule {
        kind,
        n_blocks,
        t,
        deltas,
    })
}

impl BlockSchedule {
    /// Remainder 1 − t_N.
    pub fn remainder(&self) -> f64 {
        1.0 - self.t[self.n_blocks]
    }

    /// Tail Σ_{k>N} Δ_k from the closed form.
    pub fn tail(&self) -> f64 {
        match self.kind {
            ScheduleKind::Power { gamma } => hurwitz_zeta(gamma, (self.n_blocks + 1) as f64) / zeta(gamma),
            ScheduleKind::Dyadic => 0.5f64.powi(self.n_blocks as i32),
        }
    }

    /// Grid index of every block time (nearest node); blocks must contain
    /// at least `min_points` grid steps.
    pub fn grid_indices(&self, grid: &TimeGrid, min_points: usize) -> Result<Vec<usize>> {
        let h = grid.step();
        let idx: Vec<usize> = self
            .t
            .iter()
            .map(|&t| (((t - grid.t0) / h).round().max(0.0) as usize).min(grid.n))
            .collect();
        for (k, w) in idx.windows(2).enumerate() {
            if w[1] < w[0] + min_points {
                return domain(format!(
                    "block {} spans {} grid steps, fewer than {min_points}: refine the grid or use fewer blocks",
                    k + 1,
                    w[1].saturating_sub(w[0])
                ));
            }
        }
        Ok(idx)
    }
}
