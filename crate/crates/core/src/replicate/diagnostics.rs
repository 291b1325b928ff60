use super::scheme::{BlockCase, ReplicationTrace};
use crate::error::{Error, Result};
use crate::fraccalc::alpha_norm_tails;
use crate::numfmt::fmt_f64;
use serde::Serialize;
use std::io::Write;

pub const TRACE_HEADER: [&str; 8] = [
    "n",
    "case",
    "tau_index",
    "block_target",
    "achieved",
    "V_at_tn",
    "Z_at_tn_minus_1",
    "alpha_norm_tail",
];

pub const SUMMARY_HEADER: [&str; 6] = [
    "path",
    "terminal_error",
    "catch_up_blocks",
    "failed_blocks",
    "last_catch_up",
    "min_truncation",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub n: usize,
    /// |V(t_n) − Z(t_{n−1})|.
    pub error: f64,
    /// ‖ψ‖_{α,[t_n,1]}.
    pub alpha_norm_tail: f64,
    /// Catch-up blocks with index > n.
    pub catch_up_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDiagnostics {
    /// n = 1..=N.
    pub rows: Vec<DiagnosticRow>,
    pub failures: usize,
    pub last_catch_up: Option<usize>,
}

impl TraceDiagnostics {
    /// Tail norms strictly decrease for n past the last catch-up block
    /// (ties allowed only at zero).
    pub fn tail_decreasing_after_last_catch_up(&self) -> bool {
        let from = self.last_catch_up.unwrap_or(0) + 1;
        let tails: Vec<f64> = self.rows.iter().filter(|r| r.n >= from).map(|r| r.alpha_norm_tail).collect();
        tails.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
    }

    pub fn catch_up_after(&self, n: usize) -> usize {
        self.rows.iter().find(|r| r.n == n).map_or(0, |r| r.catch_up_after)
    }
}

/// Per-n tracking errors, tail α-norms of ψ (one O(n²) sweep), and the
/// census of catch-up blocks.
pub fn trace_diagnostics(trace: &ReplicationTrace, alpha: f64) -> Result<TraceDiagnostics> {
    let idx = &trace.block_index;
    let n_blocks = idx.len() - 1;
    let tails = alpha_norm_tails(&trace.psi, alpha, &idx[1..=n_blocks])?;
    let rows = (1..=n_blocks)
        .map(|n| DiagnosticRow {
            n,
            error: (trace.v.values[idx[n]] - trace.target.values[idx[n - 1]]).abs(),
            alpha_norm_tail: tails[n - 1],
            catch_up_after: trace.blocks.iter().filter(|b| b.event_a && b.n > n).count(),
        })
        .collect();
    Ok(TraceDiagnostics {
        rows,
        failures: trace.failures(),
        last_catch_up: trace.last_catch_up(),
    })
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per block.
pub fn write_trace_csv<W: Write>(trace: &ReplicationTrace, diag: &TraceDiagnostics, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRACE_HEADER).map_err(io)?;
    for b in &trace.blocks {
        let case = match b.case {
            BlockCase::CatchUp => "1",
            BlockCase::Tracking => "2",
        };
        wr.write_record([
            b.n.to_string(),
            case.to_string(),
            b.tau_index.to_string(),
            fmt_f64(b.block_target),
            fmt_f64(b.achieved),
            fmt_f64(b.v_at_tn),
            fmt_f64(b.z_at_tn_minus_1),
            fmt_f64(diag.rows[b.n - 1].alpha_norm_tail),
        ])
        .map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

/// Per-path totals written to the summary CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSummary {
    pub terminal_error: f64,
    pub catch_up_blocks: usize,
    pub failed_blocks: usize,
    pub last_catch_up: Option<usize>,
    pub min_truncation: Option<f64>,
}

impl TraceSummary {
    pub fn of(t: &ReplicationTrace) -> Self {
        Self {
            terminal_error: t.terminal_error,
            catch_up_blocks: t.blocks.iter().filter(|b| b.event_a).count(),
            failed_blocks: t.failures(),
            last_catch_up: t.last_catch_up(),
            min_truncation: t.blocks.iter().filter_map(|b| b.truncation).reduce(f64::min),
        }
    }
}

/// One row per path.
pub fn write_summary_csv<W: Write>(rows: &[TraceSummary], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SUMMARY_HEADER).map_err(io)?;
    for (p, s) in rows.iter().enumerate() {
        wr.write_record([
            p.to_string(),
            fmt_f64(s.terminal_error),
            s.catch_up_blocks.to_string(),
            s.failed_blocks.to_string(),
            s.last_catch_up.map_or(String::new(), |n| n.to_string()),
            s.min_truncation.map_or(String::new(), fmt_f64),
        ])
        .map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}
