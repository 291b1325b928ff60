use clap::Parser;
use qhlab_core::harness::{keys_help, parse_config, run, Command, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse()
}

fn after_help() -> String {
    format!(
        "Exit codes: 0 success, 1 invalid configuration or inputs, 2 numerical failure.\n\n\
         Config keys (flat `section.key = value`, '#' comments) and defaults:\n{}",
        keys_help()
    )
}

/// Experiments on Gaussian quasi-helices: simulation, structural checks,
/// small-ball bounds, fractional calculus, and adapted replication.
#[derive(Parser, Debug)]
#[command(name = "qhlab", version, after_long_help = after_help())]
struct Cli {
    /// simulate | check-conditions | smallball | frac-check | replicate | lemma-divergence
    #[arg(value_parser = parse_command)]
    command: Command,

    /// Configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Master seed; overrides mc.seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Directory in which the run directory is created.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, env = "QHLAB_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            for e in errors {
                eprintln!("{}: {e}", cli.config.display());
            }
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        command: Some(cli.command),
        out_dir: cli.out,
        seed: cli.seed,
        threads: cli.threads,
    };
    match run(&config, &opts) {
        Ok(out) => {
            println!("{} -> {}", cli.command, out.dir.display());
            let width = out.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &out.summary {
                println!("  {k:<width$}  {v}");
            }
            for f in &out.files {
                println!("  wrote {f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
