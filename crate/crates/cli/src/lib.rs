//! The `transgress` command line: list, verify, sweep and run all shipped
//! scenarios.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
//! configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use transgress_core::harness::{self, load_scenario, Report, RunConfig};
use transgress_core::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "TRANSGRESS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "transgress", version, about = "Verify transgression-form identities by quadrature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// Gauss-Legendre points per cell.
    #[arg(long)]
    order: Option<usize>,
    /// Cells per axis.
    #[arg(long)]
    subdiv: Option<usize>,
    /// Finite-difference step.
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,
}

impl Overrides {
    fn config(&self) -> RunConfig {
        RunConfig { order: self.order, subdivision: self.subdiv, fd_step: self.fd_step }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List shipped scenarios.
    List,
    /// Run one scenario and emit its JSON report.
    Verify {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence table `order,value,error_estimate` for one scenario.
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        orders: Vec<usize>,
        #[arg(long = "fd-step")]
        fd_step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every shipped scenario.
    All {
        #[command(flatten)]
        overrides: Overrides,
        /// Write all reports as a JSON array.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Caps the global rayon pool from `TRANSGRESS_THREADS`. Unset means rayon's default.
pub fn configure_threads(value: Option<&str>) -> Result<(), String> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_VAR} must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err(format!("{THREADS_VAR} must be positive"));
    }
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn status(r: &Report) -> i32 {
    if r.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn summary(r: &Report, err: &mut dyn Write) {
    for c in &r.checks {
        let verdict = if c.pass {
            "PASS"
        } else if c.inconclusive {
            "INCONCLUSIVE"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            err,
            "{verdict:<12} {}/{}: lhs {:.12e} rhs {:.12e} |err| {:.3e} tol {:.1e}",
            r.scenario, c.check_id, c.lhs, c.rhs, c.abs_err, c.tolerance
        );
    }
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match out {
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => EXIT_PASS,
            Err(e) => {
                let _ = writeln!(stderr, "cannot write {}: {e}", path.display());
                EXIT_CONFIG
            }
        },
        None => {
            let _ = stdout.write_all(text.as_bytes());
            EXIT_PASS
        }
    }
}

fn config_error(e: Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "configuration error: {e}");
    EXIT_CONFIG
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match cli.command {
        Command::List => {
            for name in harness::scenario_names() {
                match load_scenario(name) {
                    Ok(s) => {
                        let _ = writeln!(stdout, "{name}\t{}", s.description);
                    }
                    Err(e) => return config_error(e, stderr),
                }
            }
            EXIT_PASS
        }
        Command::Verify { scenario, overrides, out } => match harness::run_named(&scenario, &overrides.config()) {
            Ok(report) => {
                summary(&report, stderr);
                let written = emit(&(report.to_json() + "\n"), out.as_ref(), stdout, stderr);
                if written != EXIT_PASS {
                    written
                } else {
                    status(&report)
                }
            }
            Err(e) => config_error(e, stderr),
        },
        Command::Sweep { scenario, orders, fd_step, out } => {
            let config = RunConfig { fd_step, ..RunConfig::default() };
            match harness::sweep(&scenario, &orders, &config) {
                Ok(csv) => emit(&csv, out.as_ref(), stdout, stderr),
                Err(e) => config_error(e, stderr),
            }
        }
        Command::All { overrides, out } => {
            let config = overrides.config();
            let mut reports = Vec::new();
            for name in harness::scenario_names() {
                let started = std::time::Instant::now();
                match harness::run_named(name, &config) {
                    Ok(r) => {
                        let _ = writeln!(
                            stderr,
                            "{} {name} ({:.2} s)",
                            if r.passed { "PASS" } else { "FAIL" },
                            started.elapsed().as_secs_f64()
                        );
                        if !r.passed {
                            summary(&r, stderr);
                        }
                        reports.push(r);
                    }
                    Err(e) => return config_error(e, stderr),
                }
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            let _ = writeln!(stderr, "{} scenarios, {failed} failed", reports.len());
            if let Some(path) = out.as_ref() {
                let json = serde_json::to_string_pretty(&reports).expect("reports serialise") + "\n";
                let written = emit(&json, Some(path), stdout, stderr);
                if written != EXIT_PASS {
                    return written;
                }
            }
            if failed == 0 {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
    }
}
