use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use esr_core::EsrError;
use secrecy_esr::{emit_csv, exit, load_spec, run_sweep, selftest, Overrides, SpecError, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "secrecy-esr", version, about = "Ergodic secrecy rate sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Monte Carlo (and jitter) seed; overrides the spec.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Perturb the eavesdropper rates by ~1e-7 so equal a_k become distinct.
    #[arg(long, global = true)]
    jitter: bool,

    /// Monte Carlo replications; overrides the spec.
    #[arg(long, global = true)]
    reps: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every requested method over the grid and print CSV.
    Sweep { spec: PathBuf },
    /// Parse and validate a spec without evaluating it.
    Validate { spec: PathBuf },
    /// Run the built-in invariant checks.
    Selftest,
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write to stdout: {e}")),
    }
}

fn load(path: &Path, o: &Overrides) -> Result<SweepSpec, ExitCode> {
    load_spec(path, o).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        if matches!(e, SpecError::Model(EsrError::DegenerateProducts(_))) {
            eprintln!("hint: equal or near-equal a_k need --jitter (or the iid method)");
        }
        ExitCode::from(if e.is_numerical_guard() {
            exit::NUMERICAL
        } else {
            exit::VALIDATION
        })
    })
}

fn describe(spec: &SweepSpec) -> String {
    let methods: Vec<&str> = spec.methods.iter().map(|m| m.name()).collect();
    format!(
        "ok: K={} N={} grid_points={} ({} to {} dB) methods={}\n",
        spec.num_sources(),
        spec.base.num_eavesdroppers,
        spec.inv_beta_db.len(),
        spec.inv_beta_db[0],
        spec.inv_beta_db[spec.inv_beta_db.len() - 1],
        methods.join(",")
    )
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let overrides = Overrides {
        seed: cli.seed,
        replications: cli.reps,
        jitter: cli.jitter,
    };
    let out = cli.out.as_deref();
    let text = match &cli.command {
        Command::Sweep { spec } => {
            let s = load(spec, &overrides)?;
            let rows = run_sweep(&s).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(if e.is_numerical_guard() {
                    exit::NUMERICAL
                } else {
                    exit::VALIDATION
                })
            })?;
            emit_csv(&rows, &s.methods, s.seed())
        }
        Command::Validate { spec } => describe(&load(spec, &overrides)?),
        Command::Selftest => {
            let checks = selftest();
            let mut report = String::new();
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                report.push_str(&format!("[{tag}] {}: {}\n", c.name, c.detail));
            }
            write_out(out, &report).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(exit::VALIDATION)
            })?;
            if checks.iter().all(|c| c.passed) {
                return Ok(());
            }
            return Err(ExitCode::from(exit::NUMERICAL));
        }
    };
    write_out(out, &text).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit::VALIDATION)
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(code) => code,
    }
}
