use crate::models::{Kernel, Phi, ProcessModel, Sign};
use crate::replicate::{CatchUpTrigger, ScheduleKind, StopRule};
use crate::smallball::Monitoring;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Simulate,
    CheckConditions,
    SmallBall,
    FracCheck,
    Replicate,
    LemmaDivergence,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::CheckConditions,
        Command::SmallBall,
        Command::FracCheck,
        Command::Replicate,
        Command::LemmaDivergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::CheckConditions => "check-conditions",
            Command::SmallBall => "smallball",
            Command::FracCheck => "frac-check",
            Command::Replicate => "replicate",
            Command::LemmaDivergence => "lemma-divergence",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every accepted key with its default ("" = unset) and a one-line help.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("command", "", "simulate | check-conditions | smallball | frac-check | replicate | lemma-divergence"),
    ("model.variant", "fbm", "wiener | fbm | subfbm | bifbm | fracou | volterra-wiener | volterra-fbm"),
    ("model.H", "0.75", "Hurst index (fbm, subfbm, bifbm, fracou driver, volterra kernel/driver)"),
    ("model.K", "1", "bifbm second index, (0, 1]"),
    ("model.a", "1", "fracou rate / volterra-fbm exponential kernel rate"),
    ("model.phi", "1", "volterra-wiener constant kernel multiplier φ > 0"),
    ("grid.n", "1024", "grid steps"),
    ("grid.t0", "0", "grid start"),
    ("grid.delta", "1", "grid length (t0 + delta ≤ 1)"),
    ("mc.m_paths", "1000", "number of sampled paths"),
    ("mc.seed", "0", "master seed (overridden by --seed)"),
    ("simulate.write_paths", "10", "paths written to paths.csv"),
    ("simulate.dump", "false", "also write the binary dump paths.qhlx"),
    ("conditions.H1", "", "lower envelope exponent (default: model H)"),
    ("conditions.H2", "", "upper envelope exponent (default: model H)"),
    ("conditions.sign", "", "positive | negative (default: by H ≥ 1/2)"),
    ("conditions.grid_size", "64", "grid for the envelope and sign checks"),
    ("smallball.eps_list", "0.3,0.4,0.5,0.6,0.7,0.8", "comma-separated ε values"),
    ("smallball.delta_list", "1", "comma-separated window lengths Δ"),
    ("smallball.monitoring", "grid", "grid | bridge (bridge: Wiener anchored rows only)"),
    ("smallball.C1", "1", "declared lower envelope constant"),
    ("smallball.C2", "1", "declared upper envelope constant"),
    ("smallball.H1", "", "declared lower exponent (default: model H)"),
    ("smallball.H2", "", "declared upper exponent (default: model H)"),
    ("smallball.sign", "", "positive | negative (default: by H ≥ 1/2)"),
    ("frac.alpha", "", "fractional order (default: midpoint of (1−hint, 1/2))"),
    ("frac.hint", "", "Hölder exponent claimed for the paths (default: model H − 0.01)"),
    ("frac.n_refine", "6", "Riemann–Stieltjes oracle refinement levels"),
    ("replicate.rho", "0.25", "Hölder exponent of the target Z"),
    ("replicate.N_blocks", "10", "number of blocks"),
    ("replicate.schedule", "dyadic", "dyadic | power"),
    ("replicate.schedule_gamma", "2", "γ of the power schedule"),
    ("replicate.target", "half", "half (Z = scale·X) | zero | constant"),
    ("replicate.target_scale", "0.5", "scale for target = half"),
    ("replicate.constant", "0", "value for target = constant"),
    ("replicate.trigger", "missed", "missed | envelope"),
    ("replicate.beta", "", "catch-up lemma β (default: μ/λ + 0.1)"),
    ("replicate.gamma", "", "catch-up lemma γ (default: midpoint of its range)"),
    ("replicate.trace_paths", "1", "paths whose block trace is written"),
    ("lemma.beta", "2", "β of the diverging integrand"),
    ("lemma.gamma", "1.3", "γ of the power schedule"),
    ("lemma.n_blocks", "60", "number of blocks"),
    ("lemma.level", "3", "level M the cumulative sum must exceed"),
    ("lemma.stop", "grid", "grid | interpolated"),
    ("lemma.rho", "0.25", "ρ used to fix θ, α, κ for the feasibility check"),
];

/// Help text listing every key with its default.
pub fn keys_help() -> String {
    let mut s = String::new();
    for (k, d, h) in KEYS {
        let d = if d.is_empty() { "(unset)" } else { d };
        s.push_str(&format!("  {k:<26} {d:<26} {h}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 0 when the offending value is a default.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelixSpec {
    pub c1: f64,
    pub c2: f64,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub sign: Option<Sign>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSpec {
    Scaled(f64),
    Zero,
    Constant(f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub model: ProcessModel,
    pub grid_n: usize,
    pub grid_t0: f64,
    pub grid_delta: f64,
    pub m_paths: usize,
    pub seed: u64,
    pub write_paths: usize,
    pub dump: bool,
    pub conditions: HelixSpec,
    pub conditions_grid: usize,
    pub eps_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub monitoring: Monitoring,
    pub helix: HelixSpec,
    pub frac_alpha: Option<f64>,
    pub frac_hint: Option<f64>,
    pub n_refine: usize,
    pub rho: f64,
    pub n_blocks: usize,
    pub schedule: ScheduleKind,
    pub target: TargetSpec,
    pub trigger: CatchUpTrigger,
    pub lemma_override: (Option<f64>, Option<f64>),
    pub trace_paths: usize,
    pub lemma_beta: f64,
    pub lemma_gamma: f64,
    pub lemma_blocks: usize,
    pub lemma_level: f64,
    pub lemma_stop: StopRule,
    pub lemma_rho: f64,
    /// Keys as given in the file.
    pub given: BTreeMap<String, String>,
    /// Every key with its effective value.
    pub resolved: BTreeMap<String, String>,
}

struct Reader {
    values: BTreeMap<String, (String, usize)>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn raw(&self, key: &str) -> (&str, usize) {
        let (v, l) = &self.values[key];
        (v.as_str(), *l)
    }

    fn err(&mut self, line: usize, msg: String) {
        self.errors.push(ConfigError { line, message: msg });
    }

    fn parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let (v, line) = self.raw(key);
        if v.is_empty() {
            return None;
        }
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                let msg = format!("{key}: expected {what}, got '{v}'");
                self.err(line, msg);
                None
            }
        }
    }

    fn real(&mut self, key: &str, ok: impl Fn(f64) -> bool, range: &str) -> Option<f64> {
        let x: f64 = self.parsed(key, "a real number")?;
        if !x.is_finite() || !ok(x) {
            let line = self.raw(key).1;
            self.err(line, format!("{key} = {x} out of range: need {range}"));
            return None;
        }
        Some(x)
    }

    fn count(&mut self, key: &str, min: usize) -> usize {
        match self.parsed::<usize>(key, "a non-negative integer") {
            Some(n) if n >= min => n,
            Some(n) => {
                let line = self.raw(key).1;
                self.err(line, format!("{key} = {n} out of range: need ≥ {min}"));
                min
            }
            None => min,
        }
    }

    fn word<T: FromStr>(&mut self, key: &str, choices: &str) -> Option<T> {
        self.parsed(key, choices)
    }

    fn list(&mut self, key: &str, ok: impl Fn(f64) -> bool, range: &str) -> Vec<f64> {
        let (v, line) = self.raw(key);
        let v = v.to_string();
        if v.trim().is_empty() {
            self.err(line, format!("{key}: empty list"));
            return Vec::new();
        }
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse::<f64>() {
                Ok(x) if x.is_finite() && ok(x) => out.push(x),
                Ok(x) => self.err(line, format!("{key}: entry {x} out of range: need {range}")),
                Err(_) => self.err(line, format!("{key}: expected comma-separated reals, got '{}'", part.trim())),
            }
        }
        out
    }
}

fn unit_open(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// Parses the flat `section.key = value` format ('#' starts a comment).
/// All problems are reported, each with its line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut given: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(ConfigError {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(key, _, _)| *key == k) {
            errors.push(ConfigError {
                line,
                message: format!("unknown key '{k}'"),
            });
            continue;
        }
        if let Some((_, first)) = given.get(k) {
            errors.push(ConfigError {
                line,
                message: format!("duplicate key '{k}' (first set on line {first})"),
            });
            continue;
        }
        given.insert(k.to_string(), (v.to_string(), line));
    }
    let mut values: BTreeMap<String, (String, usize)> =
        KEYS.iter().map(|(k, d, _)| (k.to_string(), (d.to_string(), 0))).collect();
    values.extend(given.clone());
    let mut r = Reader { values, errors };

    let command = r.word::<Command>("command", "a command name");
    let variant = r.raw("model.variant").0.to_string();
    let model_line = r.raw("model.variant").1;
    let h = r.real("model.H", unit_open, "0 < H < 1");
    let k = r.real("model.K", |x| x > 0.0 && x <= 1.0, "0 < K ≤ 1");
    let a = r.real("model.a", |_| true, "a finite number");
    let phi = r.real("model.phi", |x| x > 0.0, "φ > 0");
    let h_line = r.raw("model.H").1;
    let built: Option<crate::Result<ProcessModel>> = match (variant.as_str(), h) {
        ("wiener", _) => Some(Ok(ProcessModel::Wiener)),
        ("fbm", Some(h)) => Some(ProcessModel::fbm(h)),
        ("subfbm", Some(h)) => Some(ProcessModel::sub_fbm(h)),
        ("bifbm", Some(h)) => k.map(|k| ProcessModel::bi_fbm(h, k)),
        ("fracou", Some(h)) => a.map(|a| ProcessModel::frac_ou(a, h)),
        ("volterra-wiener", Some(h)) => {
            phi.map(|p| Kernel::fbm_type(h, Phi::Constant(p)).map(|kernel| ProcessModel::VolterraWiener { kernel }))
        }
        ("volterra-fbm", Some(h)) => a.map(|a| {
            let m = ProcessModel::VolterraFbm {
                kernel: Kernel::exponential(a)?,
                h,
            };
            m.validate()?;
            Ok(m)
        }),
        ("fbm" | "subfbm" | "bifbm" | "fracou" | "volterra-wiener" | "volterra-fbm", None) => None,
        (other, _) => {
            r.err(
                model_line,
                format!("model.variant: unknown variant '{other}' (expected wiener|fbm|subfbm|bifbm|fracou|volterra-wiener|volterra-fbm)"),
            );
            None
        }
    };
    let model = match built {
        Some(Ok(m)) => Some(m),
        Some(Err(e)) => {
            r.err(h_line.max(model_line), format!("model: {e}"));
            None
        }
        None => None,
    };

    let grid_n = r.count("grid.n", 2);
    let grid_t0 = r.real("grid.t0", |x| (0.0..1.0).contains(&x), "0 ≤ t0 < 1").unwrap_or(0.0);
    let grid_delta = r.real("grid.delta", |x| x > 0.0 && x <= 1.0, "0 < delta ≤ 1").unwrap_or(1.0);
    if grid_t0 + grid_delta > 1.0 + 1e-15 {
        let line = r.raw("grid.delta").1.max(r.raw("grid.t0").1);
        r.err(line, format!("grid: t0 + delta = {} exceeds 1", grid_t0 + grid_delta));
    }
    let m_paths = r.count("mc.m_paths", 1);
    let seed = r.parsed::<u64>("mc.seed", "a non-negative integer").unwrap_or(0);
    let write_paths = r.count("simulate.write_paths", 0);
    let dump = r.parsed::<bool>("simulate.dump", "true|false").unwrap_or(false);

    let helix = |r: &mut Reader, sec: &str| HelixSpec {
        c1: if sec == "smallball" {
            r.real("smallball.C1", |x| x > 0.0, "C1 > 0").unwrap_or(1.0)
        } else {
            1.0
        },
        c2: if sec == "smallball" {
            r.real("smallball.C2", |x| x > 0.0, "C2 > 0").unwrap_or(1.0)
        } else {
            1.0
        },
        h1: r.real(&format!("{sec}.H1"), unit_open, "0 < H1 < 1"),
        h2: r.real(&format!("{sec}.H2"), unit_open, "0 < H2 < 1"),
        sign: r.word::<Sign>(&format!("{sec}.sign"), "positive|negative"),
    };
    let conditions = helix(&mut r, "conditions");
    let smallball_helix = helix(&mut r, "smallball");
    let conditions_grid = r.count("conditions.grid_size", 8);
    let eps_list = r.list("smallball.eps_list", |x| x > 0.0, "ε > 0");
    let delta_list = r.list("smallball.delta_list", |x| x > 0.0 && x <= 1.0, "0 < Δ ≤ 1");
    let monitoring = r.word::<Monitoring>("smallball.monitoring", "grid|bridge").unwrap_or(Monitoring::Grid);

    let frac_alpha = r.real("frac.alpha", |x| x > 0.0 && x < 0.5, "0 < α < 1/2");
    let frac_hint = r.real("frac.hint", |x| x > 0.0 && x <= 1.0, "0 < hint ≤ 1");
    let n_refine = r.count("frac.n_refine", 1);

    let rho = r.real("replicate.rho", |x| x > 0.0 && x <= 1.0, "0 < ρ ≤ 1").unwrap_or(0.25);
    let n_blocks = r.count("replicate.N_blocks", 2);
    let sched_word = r.raw("replicate.schedule").0.to_string();
    let sched_gamma = r.real("replicate.schedule_gamma", |x| x > 1.0, "γ > 1").unwrap_or(2.0);
    let schedule = match sched_word.as_str() {
        "dyadic" => ScheduleKind::Dyadic,
        "power" => ScheduleKind::Power { gamma: sched_gamma },
        other => {
            let line = r.raw("replicate.schedule").1;
            r.err(line, format!("replicate.schedule: expected dyadic|power, got '{other}'"));
            ScheduleKind::Dyadic
        }
    };
    let target_word = r.raw("replicate.target").0.to_string();
    let scale = r.real("replicate.target_scale", |_| true, "a finite number").unwrap_or(0.5);
    let constant = r.real("replicate.constant", |_| true, "a finite number").unwrap_or(0.0);
    let target = match target_word.as_str() {
        "half" => TargetSpec::Scaled(scale),
        "zero" => TargetSpec::Zero,
        "constant" => TargetSpec::Constant(constant),
        other => {
            let line = r.raw("replicate.target").1;
            r.err(line, format!("replicate.target: expected half|zero|constant, got '{other}'"));
            TargetSpec::Zero
        }
    };
    let trigger = r.word::<CatchUpTrigger>("replicate.trigger", "missed|envelope").unwrap_or(CatchUpTrigger::Missed);
    let lemma_override = (
        r.real("replicate.beta", |x| x > 0.0, "β > 0"),
        r.real("replicate.gamma", |x| x > 1.0, "γ > 1"),
    );
    let trace_paths = r.count("replicate.trace_paths", 0);

    let lemma_beta = r.real("lemma.beta", |x| x > 0.0, "β > 0").unwrap_or(2.0);
    let lemma_gamma = r.real("lemma.gamma", |x| x > 1.0, "γ > 1").unwrap_or(1.3);
    let lemma_blocks = r.count("lemma.n_blocks", 1);
    let lemma_level = r.real("lemma.level", |x| x > 0.0, "M > 0").unwrap_or(3.0);
    let lemma_stop = r.word::<StopRule>("lemma.stop", "grid|interpolated").unwrap_or(StopRule::GridIndex);
    let lemma_rho = r.real("lemma.rho", |x| x > 0.0 && x <= 1.0, "0 < ρ ≤ 1").unwrap_or(0.25);

    let mut errors = r.errors;
    if !errors.is_empty() || model.is_none() {
        if errors.is_empty() {
            errors.push(ConfigError {
                line: h_line,
                message: "model could not be built".into(),
            });
        }
        errors.sort_by_key(|e| e.line);
        return Err(errors);
    }
    Ok(ExperimentConfig {
        command,
        model: model.unwrap(),
        grid_n,
        grid_t0,
        grid_delta,
        m_paths,
        seed,
        write_paths,
        dump,
        conditions,
        conditions_grid,
        eps_list,
        delta_list,
        monitoring,
        helix: smallball_helix,
        frac_alpha,
        frac_hint,
        n_refine,
        rho,
        n_blocks,
        schedule,
        target,
        trigger,
        lemma_override,
        trace_paths,
        lemma_beta,
        lemma_gamma,
        lemma_blocks,
        lemma_level,
        lemma_stop,
        lemma_rho,
        given: given.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect(),
        resolved: r.values.into_iter().map(|(k, (v, _))| (k, v)).collect(),
    })
}
