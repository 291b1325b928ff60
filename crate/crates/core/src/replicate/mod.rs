//! Adapted integrands: the diverging block integrand and the block scheme
//! whose integral tracks a lagged target path.

mod clamp;
mod diagnostics;
mod lemma;
mod params;
mod schedule;
mod scheme;

pub use clamp::{smooth_clamp, SmoothClamp};
pub use diagnostics::{
    trace_diagnostics, write_summary_csv, write_trace_csv, DiagnosticRow, TraceDiagnostics, TraceSummary, SUMMARY_HEADER,
    TRACE_HEADER,
};
pub use lemma::{run_diverging_integrand, LemmaConfig, LemmaRun, StopRule, MIN_BLOCK_POINTS, MIN_SUB_BLOCK_POINTS};
pub use params::{
    check_constraints, select_parameters, ReplicationParams, RhoThresholds, DEFAULT_BETA_MARGIN, DEFAULT_EPS_GAP,
};
pub use schedule::{make_schedule, BlockSchedule, ScheduleKind};
pub use scheme::{run_replication, BlockCase, BlockRecord, CatchUpTrigger, ReplicationTrace};
