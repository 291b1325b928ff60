use super::config::{Command, ExperimentConfig, HelixSpec, TargetSpec};
use crate::error::{domain, Error, Result};
use crate::fraccalc::{alpha_norm, gls_integral, lambda_alpha, rs_oracle, FracParams, GridFunction};
use crate::models::{certify, kernel_condition_report, rho_zero, same_regularity_check, ProcessModel, Sign};
use crate::numfmt::fmt_f64;
use crate::replicate::{
    make_schedule, run_diverging_integrand, run_replication, select_parameters, trace_diagnostics, write_summary_csv,
    write_trace_csv, LemmaConfig, TraceSummary,
};
use crate::sampler::{RngSpec, Sampler, TimeGrid};
use crate::smallball::{verify_bound, HelixInput, McSettings};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const CODE_VERSION: &str = concat!("qhlab ", env!("CARGO_PKG_VERSION"));

/// Files and a short summary produced by one command, before anything is
/// written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<(String, String)>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// 2 for numerical failures, 1 for everything a user can fix in the config.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Numeric(_)
        | Error::QuadratureNonConvergence { .. }
        | Error::NotPositiveSemidefinite { .. }
        | Error::Io(_) => 2,
        _ => 1,
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code_for(&e),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub command: Option<Command>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub resolved: BTreeMap<String, String>,
    pub seed: u64,
    pub code_version: String,
    pub threads: Option<usize>,
    pub started_unix: u64,
    pub wall_clock_seconds: Option<f64>,
    pub status: String,
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Vec<(String, String)>,
}

pub fn resolve_command(config: &ExperimentConfig, cli: Option<Command>) -> std::result::Result<Command, RunError> {
    match (config.command, cli) {
        (Some(a), Some(b)) if a != b => Err(RunError {
            code: 1,
            message: format!("config sets command = {a} but {b} was requested"),
        }),
        (_, Some(c)) | (Some(c), None) => Ok(c),
        (None, None) => Err(RunError {
            code: 1,
            message: "no command given".into(),
        }),
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Runs one command: creates `<out>/<command>-<unixtime>-<seed>`, writes the
/// manifest, executes, writes the CSVs, and finalises the manifest. On
/// failure every output except the manifest is removed.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> std::result::Result<RunOutcome, RunError> {
    let command = resolve_command(config, opts.command)?;
    let mut config = config.clone();
    if let Some(s) = opts.seed {
        config.seed = s;
        config.resolved.insert("mc.seed".into(), s.to_string());
    }
    config.resolved.insert("command".into(), command.to_string());
    let started = unix_now();
    let base = format!("{command}-{started}-{}", config.seed);
    let mut dir = opts.out_dir.join(&base);
    let mut k = 1;
    while dir.exists() {
        dir = opts.out_dir.join(format!("{base}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let mut manifest = RunManifest {
        command: command.to_string(),
        config: config.given.clone(),
        resolved: config.resolved.clone(),
        seed: config.seed,
        code_version: CODE_VERSION.into(),
        threads: opts.threads,
        started_unix: started,
        wall_clock_seconds: None,
        status: "running".into(),
        error: None,
        outputs: vec![],
        flags: vec![],
    };
    write_manifest(&dir, &manifest)?;
    let clock = Instant::now();
    let result = with_threads(opts.threads, || execute(&config, command));
    let result = result.and_then(|out| {
        let mut written = Vec::new();
        for (name, bytes) in &out.files {
            if let Err(e) = std::fs::write(dir.join(name), bytes) {
                for w in &written {
                    let _ = std::fs::remove_file(dir.join(w));
                }
                return Err(Error::from(e));
            }
            written.push(name.clone());
        }
        Ok((out, written))
    });
    manifest.wall_clock_seconds = Some(clock.elapsed().as_secs_f64());
    match result {
        Ok((out, written)) => {
            manifest.status = "ok".into();
            manifest.outputs = written.clone();
            manifest.flags = out.flags.clone();
            write_manifest(&dir, &manifest)?;
            Ok(RunOutcome {
                dir,
                files: written,
                summary: out.summary,
            })
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            let _ = write_manifest(&dir, &manifest);
            Err(RunError::from(e))
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
            pool.install(f)
        }
        None => f(),
    }
}

/// Executes a command in memory. Output bytes depend only on the config.
pub fn execute(config: &ExperimentConfig, command: Command) -> Result<CommandOutput> {
    match command {
        Command::Simulate => simulate(config),
        Command::CheckConditions => check_conditions(config),
        Command::SmallBall => smallball(config),
        Command::FracCheck => frac_check(config),
        Command::Replicate => replicate(config),
        Command::LemmaDivergence => lemma_divergence(config),
    }
}

fn grid_of(c: &ExperimentConfig) -> Result<TimeGrid> {
    TimeGrid::new(c.grid_t0, c.grid_delta, c.grid_n)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(header).map_err(io)?;
    for r in rows {
        wr.write_record(r).map_err(io)?;
    }
    wr.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn opt(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        fmt_f64(x)
    }
}

fn declared_h(model: &ProcessModel, what: &str) -> Result<f64> {
    model
        .declared_h()
        .ok_or_else(|| Error::Domain(format!("{what}: model {} has no declared H; set the exponents explicitly", model.id())))
}

fn default_sign(h: f64) -> Sign {
    if h >= 0.5 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

fn helix_exponents(model: &ProcessModel, spec: &HelixSpec, what: &str) -> Result<(f64, f64, Sign)> {
    let (h1, h2) = match (spec.h1, spec.h2) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let h = declared_h(model, what)?;
            (a.unwrap_or(h), b.unwrap_or(h))
        }
    };
    Ok((h1, h2, spec.sign.unwrap_or(default_sign(h1))))
}

fn simulate(c: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = grid_of(c)?;
    let batch = Sampler::new(&c.model, grid)?.sample(c.m_paths, RngSpec::new(c.seed))?;
    let times = grid.times();
    let keep = c.write_paths.min(c.m_paths);
    let paths = csv_bytes(
        &["path", "i", "t", "value"],
        (0..keep).flat_map(|p| {
            let row = batch.path(p);
            let times = &times;
            (0..grid.len()).map(move |i| vec![p.to_string(), i.to_string(), fmt_f64(times[i]), fmt_f64(row[i])])
        }),
    )?;
    let m = c.m_paths as f64;
    let mut stats = Vec::with_capacity(grid.len());
    for (i, &t) in times.iter().enumerate() {
        let mean = batch.paths().map(|p| p[i]).sum::<f64>() / m;
        let var = batch.paths().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        let model_var = c.model.covariance(t, t)?;
        stats.push(vec![i.to_string(), fmt_f64(t), fmt_f64(mean), fmt_f64(var), fmt_f64(model_var)]);
    }
    let stats = csv_bytes(&["i", "t", "mean", "variance", "model_variance"], stats)?;
    let mut files = vec![("paths.csv".to_string(), paths), ("path_stats.csv".to_string(), stats)];
    if c.dump {
        let mut buf = Vec::new();
        batch.write_dump(&mut buf)?;
        files.push(("paths.qhlx".into(), buf));
    }
    Ok(CommandOutput {
        files,
        summary: vec![
            ("model".into(), c.model.id()),
            ("paths".into(), c.m_paths.to_string()),
            ("grid steps".into(), grid.n.to_string()),
        ],
        flags: vec![],
    })
}

fn check_conditions(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (h1, h2, sign) = helix_exponents(&c.model, &c.conditions, "check-conditions")?;
    let cert = certify(&c.model, c.grid_t0, c.conditions_grid, h1, h2, sign)?;
    let mut rows = vec![
        vec!["H1".into(), fmt_f64(h1), String::new()],
        vec!["H2".into(), fmt_f64(h2), String::new()],
        vec!["C1_fit".into(), opt(cert.c1_fit), String::new()],
        vec!["C2_fit".into(), opt(cert.c2_fit), String::new()],
        vec![format!("sign_{}", sign.as_str()), fmt_f64(cert.max_sign_violation), String::new()],
        vec!["quasi_helix".into(), String::new(), cert.pass.to_string()],
    ];
    if let Ok(r) = rho_zero(h1, h2) {
        rows.push(vec!["rho_zero".into(), fmt_f64(r), String::new()]);
        rows.push(vec![
            "same_regularity".into(),
            String::new(),
            same_regularity_check(h1, h2).to_string(),
        ]);
    }
    let kernel = match &c.model {
        ProcessModel::VolterraWiener { kernel } | ProcessModel::VolterraFbm { kernel, .. } => Some(kernel),
        _ => None,
    };
    if let Some(k) = kernel {
        for (name, outcome) in kernel_condition_report(k, c.conditions_grid)? {
            let status = format!("{:?}", outcome.status).to_lowercase();
            rows.push(vec![format!("kernel_{name}"), opt(outcome.margin), status]);
        }
    }
    Ok(CommandOutput {
        files: vec![("conditions.csv".into(), csv_bytes(&["check", "value", "status"], rows)?)],
        summary: vec![
            ("model".into(), c.model.id()),
            ("C1 fit".into(), format!("{:.6}", cert.c1_fit)),
            ("C2 fit".into(), format!("{:.6}", cert.c2_fit)),
            ("max sign violation".into(), format!("{:.3e}", cert.max_sign_violation)),
            ("pass".into(), cert.pass.to_string()),
        ],
        flags: vec![],
    })
}

fn smallball(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (h1, h2, sign) = helix_exponents(&c.model, &c.helix, "smallball")?;
    let helix = HelixInput::new(c.helix.c1, c.helix.c2, h1, h2, sign)?;
    let settings = McSettings {
        n_grid: c.grid_n,
        m_paths: c.m_paths,
        seed: c.seed,
        monitoring: c.monitoring,
    };
    let report = verify_bound(&c.model, &helix, &c.eps_list, &c.delta_list, &settings)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    Ok(CommandOutput {
        files: vec![("smallball_report.csv".into(), buf)],
        summary: vec![
            ("model".into(), c.model.id()),
            ("rows".into(), report.rows.len().to_string()),
            ("rows violating the bound".into(), failed.to_string()),
            ("lambda".into(), format!("{:.6}", report.exponents.lambda)),
            ("mu".into(), format!("{:.6}", report.exponents.mu)),
            ("C3".into(), format!("{:.6e}", report.constants.c3)),
        ],
        flags: vec![
            "C3 = C0^(-1/2)·4^(-H1), the largest ε with a(ε) ≤ 1/4".into(),
            "C4 uses C0^((H2+1)/H1), from substituting a(ε) into the exponent".into(),
        ],
    })
}

fn frac_check(c: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = grid_of(c)?;
    let hint = match c.frac_hint {
        Some(h) => h,
        None => declared_h(&c.model, "frac-check")? - 0.01,
    };
    let alpha = match c.frac_alpha {
        Some(a) => FracParams::new(a)?.alpha,
        None => FracParams::for_holder(hint)?.alpha,
    };
    if alpha <= 1.0 - hint {
        return domain(format!("α = {alpha} must exceed 1 − hint = {}", 1.0 - hint));
    }
    let (a, b) = (grid.t0, grid.end());
    let n_refine = c.n_refine;
    let sampler = Sampler::new(&c.model, grid)?;
    let results = sampler.map_paths(c.m_paths, RngSpec::new(c.seed), |p, x| -> Result<(Vec<Vec<String>>, usize, Vec<String>)> {
        let path = GridFunction::new(grid, x.to_vec(), Some(hint))?;
        let lam = lambda_alpha(&path, alpha)?;
        let one = GridFunction::constant(grid, 1.0);
        let ident = GridFunction::from_fn(grid, |t| t, Some(1.0))?;
        let xa = path.values[0];
        let xb = *path.values.last().unwrap();
        let cases: [(&str, &GridFunction, f64); 3] = [
            ("one", &one, xb - xa),
            ("identity", &ident, f64::NAN),
            ("self", &path, 0.5 * (xb * xb - xa * xa)),
        ];
        let mut rows = Vec::new();
        let mut violations = 0;
        for (name, f, closed) in cases {
            let gls = gls_integral(f, &path, a, b, alpha)?;
            let oracle = rs_oracle(f, &path, a, b, n_refine)?;
            let norm = alpha_norm(f, a, b, alpha)?;
            let bound = lam.value * norm;
            let ok = gls.abs() <= bound * (1.0 + 1e-12);
            violations += usize::from(!ok);
            rows.push(vec![
                p.to_string(),
                name.to_string(),
                fmt_f64(gls),
                fmt_f64(oracle.value),
                fmt_f64(oracle.error_estimate),
                opt(closed),
                fmt_f64(lam.value),
                fmt_f64(norm),
                fmt_f64(bound),
                ok.to_string(),
            ]);
        }
        Ok((rows, violations, lam.warning.into_iter().collect()))
    })?;
    let mut rows = Vec::new();
    let mut violations = 0;
    let mut flags: Vec<String> = Vec::new();
    for r in results {
        let (r, v, w) = r?;
        rows.extend(r);
        violations += v;
        for w in w {
            if !flags.contains(&w) {
                flags.push(w);
            }
        }
    }
    let header = [
        "path",
        "integrand",
        "gls",
        "oracle",
        "oracle_error",
        "closed_form",
        "lambda_alpha",
        "alpha_norm",
        "bound",
        "bound_ok",
    ];
    Ok(CommandOutput {
        files: vec![("frac_check.csv".into(), csv_bytes(&header, rows)?)],
        summary: vec![
            ("model".into(), c.model.id()),
            ("alpha".into(), format!("{alpha:.6}")),
            ("hint".into(), format!("{hint:.6}")),
            ("bound violations".into(), violations.to_string()),
        ],
        flags,
    })
}

fn unit_grid(c: &ExperimentConfig, what: &str) -> Result<TimeGrid> {
    if c.grid_t0 != 0.0 || c.grid_delta != 1.0 {
        return domain(format!("{what} runs on [0, 1]: set grid.t0 = 0 and grid.delta = 1"));
    }
    TimeGrid::unit(c.grid_n)
}

fn replicate(c: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = unit_grid(c, "replicate")?;
    let h = declared_h(&c.model, "replicate")?;
    let mut params = select_parameters(h, h, c.rho)?;
    if c.lemma_override.0.is_some() || c.lemma_override.1.is_some() {
        params = params.with_lemma_exponents(
            c.lemma_override.0.unwrap_or(params.beta),
            c.lemma_override.1.unwrap_or(params.gamma),
        )?;
    }
    let schedule = make_schedule(c.schedule, c.n_blocks)?;
    let hint = c.frac_hint.unwrap_or(params.theta);
    let sampler = Sampler::new(&c.model, grid)?;
    let trace_paths = c.trace_paths;
    let per_path = sampler.map_paths(c.m_paths, RngSpec::new(c.seed), |p, x| -> Result<_> {
        let path = GridFunction::new(grid, x.to_vec(), Some(hint))?;
        let z = match c.target {
            TargetSpec::Scaled(s) => GridFunction::new(grid, x.iter().map(|v| s * v).collect(), Some(c.rho))?,
            TargetSpec::Zero => GridFunction::constant(grid, 0.0),
            TargetSpec::Constant(v) => GridFunction::constant(grid, v),
        };
        let trace = run_replication(&path, &z, &params, &schedule, c.trigger)?;
        let diag = trace_diagnostics(&trace, params.alpha)?;
        let csv = if p < trace_paths {
            let mut buf = Vec::new();
            write_trace_csv(&trace, &diag, &mut buf)?;
            Some(buf)
        } else {
            None
        };
        Ok((
            TraceSummary::of(&trace),
            diag.tail_decreasing_after_last_catch_up(),
            diag.catch_up_after(6.min(c.n_blocks)) > 0,
            csv,
        ))
    })?;
    let mut summaries = Vec::with_capacity(per_path.len());
    let mut files = Vec::new();
    let (mut decreasing, mut late) = (0usize, 0usize);
    for (p, r) in per_path.into_iter().enumerate() {
        let (s, dec, lt, csv) = r?;
        summaries.push(s);
        decreasing += usize::from(dec);
        late += usize::from(lt);
        if let Some(b) = csv {
            files.push((format!("replicate_trace_{p:04}.csv"), b));
        }
    }
    let mut buf = Vec::new();
    write_summary_csv(&summaries, &mut buf)?;
    files.insert(0, ("replicate_summary.csv".into(), buf));
    let mut errs: Vec<f64> = summaries.iter().map(|s| s.terminal_error).collect();
    errs.sort_by(f64::total_cmp);
    let m = errs.len() as f64;
    Ok(CommandOutput {
        files,
        summary: vec![
            ("model".into(), c.model.id()),
            ("theta, alpha, kappa".into(), format!("{:.4}, {:.4}, {:.4}", params.theta, params.alpha, params.kappa)),
            ("beta, gamma".into(), format!("{:.4}, {:.4}", params.beta, params.gamma)),
            ("median terminal error".into(), format!("{:.3e}", errs[errs.len() / 2])),
            ("tail norm decreasing".into(), format!("{:.1}%", 100.0 * decreasing as f64 / m)),
            ("catch-up after n=6".into(), format!("{:.1}%", 100.0 * late as f64 / m)),
        ],
        flags: vec![
            format!(
                "rho thresholds: closed form {}, mu/(lambda theta) - 1 = {} at theta = {}",
                fmt_f64(params.thresholds.closed_form),
                fmt_f64(params.thresholds.at_theta),
                fmt_f64(params.theta)
            ),
            "catch-up blocks aim at xi_n - V(t_n) (sign of the printed v_n reversed)".into(),
        ],
    })
}

fn lemma_divergence(c: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = unit_grid(c, "lemma-divergence")?;
    let h = declared_h(&c.model, "lemma-divergence")?;
    let params = select_parameters(h, h, c.lemma_rho)?;
    let cfg = LemmaConfig {
        beta: c.lemma_beta,
        gamma: c.lemma_gamma,
        n_blocks: c.lemma_blocks,
        stop_rule: c.lemma_stop,
    };
    let sampler = Sampler::new(&c.model, grid)?;
    let runs = sampler.map_paths(c.m_paths, RngSpec::new(c.seed), |_, x| {
        run_diverging_integrand(x, &grid, &params, &cfg, c.lemma_level)
    })?;
    let mut blocks = Vec::new();
    let mut summary = Vec::new();
    let (mut hits, mut late_ok, mut late_total) = (0usize, 0usize, 0usize);
    for (p, r) in runs.into_iter().enumerate() {
        let r = r?;
        for (i, (&cv, &ok)) in r.contributions.iter().zip(&r.success).enumerate() {
            blocks.push(vec![
                p.to_string(),
                (i + 1).to_string(),
                r.tau_index[i].to_string(),
                fmt_f64(cv),
                ok.to_string(),
                fmt_f64(r.cumulative[i]),
            ]);
            if i + 1 >= 10 {
                late_total += 1;
                late_ok += usize::from(ok);
            }
        }
        hits += usize::from(r.hit);
        summary.push(vec![
            p.to_string(),
            r.hit.to_string(),
            r.hit_block.map_or(String::new(), |b| b.to_string()),
            fmt_f64(*r.cumulative.last().unwrap_or(&0.0)),
        ]);
    }
    let m = c.m_paths as f64;
    Ok(CommandOutput {
        files: vec![
            (
                "lemma_blocks.csv".into(),
                csv_bytes(&["path", "k", "tau_index", "contribution", "success", "cumulative"], blocks)?,
            ),
            (
                "lemma_summary.csv".into(),
                csv_bytes(&["path", "hit", "hit_block", "final_cumulative"], summary)?,
            ),
        ],
        summary: vec![
            ("model".into(), c.model.id()),
            ("beta, gamma".into(), format!("{}, {}", c.lemma_beta, c.lemma_gamma)),
            ("hit rate".into(), format!("{:.1}%", 100.0 * hits as f64 / m)),
            (
                "block success k >= 10".into(),
                if late_total > 0 {
                    format!("{:.1}%", 100.0 * late_ok as f64 / late_total as f64)
                } else {
                    "n/a".into()
                },
            ),
        ],
        flags: vec![],
    })
}
