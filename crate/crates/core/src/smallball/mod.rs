//! Small-ball constants, bounds, and Monte-Carlo comparison.

mod bounds;
mod mc;
mod report;

pub use bounds::{
    anchored_bound, anchored_exponents, bound_is_useful, derive_constants, theoretical_bound,
    theoretical_bound_by_scaling, wiener_sup_abs_probability, HelixInput, SmallBallConstants, SmallBallExponents,
};
pub use mc::{bridge_survival, fit_decay_slope, mc_curve, mc_estimate, McEstimate, McSettings, Monitoring, Z95};
pub use report::{check_declared_helix, verify_bound, ReportRow, SmallBallReport, PRECHECK_GRID, REPORT_HEADER};
