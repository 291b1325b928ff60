//! Bound-versus-Monte-Carlo report.

use super::bounds::{anchored_bound, derive_constants, theoretical_bound, HelixInput, SmallBallConstants, SmallBallExponents};
use super::mc::{mc_curve, McSettings, Monitoring};
use crate::error::{Error, Result};
use crate::models::{verify_a1_a2, verify_sign_condition, ProcessModel};
use crate::numfmt::fmt_f64;
use crate::sampler::StatKind;
use serde::Serialize;
use std::io::Write;

pub const REPORT_HEADER: [&str; 7] = ["eps", "delta", "kind", "mc_estimate", "mc_halfwidth", "bound", "pass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub eps: f64,
    pub delta: f64,
    pub kind: StatKind,
    pub mc_estimate: f64,
    pub mc_halfwidth: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallReport {
    pub rows: Vec<ReportRow>,
    pub constants: SmallBallConstants,
    pub exponents: SmallBallExponents,
    pub settings: McSettings,
}

impl SmallBallReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(REPORT_HEADER).map_err(io)?;
        for r in &self.rows {
            wr.write_record([
                fmt_f64(r.eps),
                fmt_f64(r.delta),
                r.kind.as_str().to_string(),
                fmt_f64(r.mc_estimate),
                fmt_f64(r.mc_halfwidth),
                fmt_f64(r.bound),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Grid used to confirm the declared helix before any sampling.
pub const PRECHECK_GRID: usize = 32;

/// Checks that the model satisfies the declared envelopes (declared C1 not
/// above the fitted lower constant, C2 not below the fitted upper one) and
/// the declared sign condition.
pub fn check_declared_helix(model: &ProcessModel, helix: &HelixInput) -> Result<()> {
    let cert = verify_a1_a2(model, PRECHECK_GRID, helix.h1, helix.h2)?;
    let slack = 1e-9;
    if !cert.pass || helix.c1 > cert.c1_fit * (1.0 + slack) || helix.c2 < cert.c2_fit * (1.0 - slack) {
        return Err(Error::ModelInconsistency(format!(
            "{} does not satisfy the declared envelopes: fitted C1 = {}, C2 = {} vs declared {}, {}",
            model.id(),
            cert.c1_fit,
            cert.c2_fit,
            helix.c1,
            helix.c2
        )));
    }
    let sign = verify_sign_condition(model, PRECHECK_GRID, helix.sign)?;
    if !sign.pass {
        return Err(Error::ModelInconsistency(format!(
            "{} violates the {} sign condition by {}",
            model.id(),
            helix.sign.as_str(),
            sign.max_sign_violation
        )));
    }
    Ok(())
}

/// Range rows are checked against the window bound; anchored rows against
/// the bound for the anchored statistic. Bridge monitoring, when requested,
/// applies to the anchored Wiener rows only.
pub fn verify_bound(
    model: &ProcessModel,
    helix: &HelixInput,
    eps_list: &[f64],
    delta_list: &[f64],
    settings: &McSettings,
) -> Result<SmallBallReport> {
    let (c, e) = derive_constants(helix)?;
    check_declared_helix(model, helix)?;
    let mut rows = Vec::new();
    for &delta in delta_list {
        let window = (0.0, delta);
        let grid_only = McSettings {
            monitoring: Monitoring::Grid,
            ..*settings
        };
        let anchored_settings = if matches!(model, ProcessModel::Wiener) { *settings } else { grid_only };
        for (kind, s) in [(StatKind::Range, grid_only), (StatKind::Anchored, anchored_settings)] {
            let est = mc_curve(model, eps_list, window, kind, &s)?;
            for m in est {
                let bound = match kind {
                    StatKind::Range => theoretical_bound(&c, &e, m.eps, delta),
                    StatKind::Anchored => anchored_bound(&c, &e, m.eps, delta),
                };
                rows.push(ReportRow {
                    eps: m.eps,
                    delta,
                    kind,
                    mc_estimate: m.estimate,
                    mc_halfwidth: m.halfwidth,
                    bound,
                    pass: m.estimate - m.halfwidth <= bound,
                });
            }
        }
    }
    Ok(SmallBallReport {
        rows,
        constants: c,
        exponents: e,
        settings: *settings,
    })
}
