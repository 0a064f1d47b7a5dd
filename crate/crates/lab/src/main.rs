use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nonlocal_lab::report::Format;
use nonlocal_lab::run::{execute, Command, RunOptions};

/// Certificates, solves and regularity probes for nonlocal operators with
/// weakly scaling kernels.
#[derive(Debug, Parser)]
#[command(name = "nonlocal-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Seed of the randomized sample sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies every check tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let opts = RunOptions {
        command: cli.command,
        config: cli.config,
        out_dir: cli.out_dir,
        format: cli.format,
        seed: cli.seed,
        tolerance_scale: cli.tolerance_scale,
    };
    match execute(&opts) {
        Ok(outcome) => {
            // a closed pipe (`| head`) is not an error of the run
            let mut out = std::io::stdout().lock();
            for r in &outcome.output.records {
                let inputs: Vec<String> = r.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let status = if r.pass { "ok  " } else { "FAIL" };
                if r.lhs == r.rhs && r.margin == 0.0 {
                    let _ = writeln!(out, "{status} {} = {} [{}]", r.check, r.lhs, inputs.join(", "));
                } else {
                    let _ = writeln!(out, "{status} {}: {} <= {} (margin {:e}) [{}]", r.check, r.lhs, r.rhs, r.margin, inputs.join(", "));
                }
            }
            if let Some(w) = outcome.output.failures().next() {
                eprintln!("witness: {} lhs={} rhs={} inputs={:?}", w.check, w.lhs, w.rhs, w.inputs);
            }
            let m = &outcome.manifest;
            let _ = writeln!(out, "{}: {} passed, {} failed", m.command, m.checks_passed, m.checks_failed);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
