//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::crypto::vectors::render_vectors;
use crate::scenario::{
    catalog, catalog_names, default_seed, emit_trace, find_scenario, load_scenario, render_report,
    report_json, run_scenario_with, RunOptions, RunReport, Scenario,
};

#[derive(Parser, Debug)]
#[command(
    name = "aka-lab",
    about = "AKA protocol simulator with a scripted network adversary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List shipped scenarios.
    List,
    /// Run one scenario by catalog name or file path.
    Run {
        scenario: String,
        /// Defaults to $AKA_LAB_SEED, then 1.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
        /// Write the trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        trace_format: String,
        /// Write a hex dump of every core-network frame to this file.
        #[arg(long)]
        wire: Option<PathBuf>,
        /// Force a duplicate transaction id on every link.
        #[arg(long)]
        force_collision: bool,
    },
    /// Run the whole catalog.
    RunAll {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Print the reference crypto test vectors.
    Vectors,
}

fn resolve(name: &str) -> Result<Scenario, String> {
    if let Some(s) = find_scenario(name) {
        return s.map_err(|e| e.to_string());
    }
    if Path::new(name).is_file() {
        return load_scenario(name).map_err(|e| e.to_string());
    }
    Err(format!("unknown scenario {name:?}; try `aka-lab list`"))
}

/// Runs the CLI and returns the process exit code: 0 when every executed
/// scenario conforms, 1 when one does not or a run fails, 2 on usage errors.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match cli.command {
        Command::List => {
            match catalog() {
                Ok(all) => {
                    for s in all {
                        let _ = writeln!(out, "{:<32} {}", s.name, s.description);
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    return 1;
                }
            }
            0
        }
        Command::Vectors => {
            let _ = write!(out, "{}", render_vectors());
            0
        }
        Command::Run {
            scenario,
            seed,
            json,
            trace,
            trace_format,
            wire,
            force_collision,
        } => {
            let scenario = match resolve(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return 2;
                }
            };
            let opts = RunOptions {
                seed: seed.unwrap_or_else(default_seed),
                force_collision,
            };
            let report = match run_scenario_with(&scenario, opts) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(err, "error: {}: {e}", scenario.name);
                    return 1;
                }
            };
            if let Some(path) = trace {
                let bytes = match emit_trace(&report, &trace_format) {
                    Ok(b) => b,
                    Err(e) => {
                        let _ = writeln!(err, "error: {e}");
                        return 2;
                    }
                };
                if let Err(e) = std::fs::write(&path, bytes) {
                    let _ = writeln!(err, "error: {}: {e}", path.display());
                    return 1;
                }
            }
            if let Some(path) = wire {
                let mut text = report.wire_log.join("\n");
                text.push('\n');
                if let Err(e) = std::fs::write(&path, text) {
                    let _ = writeln!(err, "error: {}: {e}", path.display());
                    return 1;
                }
            }
            print_report(out, &report, json);
            i32::from(!report.conforms)
        }
        Command::RunAll { seed, json } => {
            let seed = seed.unwrap_or_else(default_seed);
            let scenarios = match catalog() {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    return 1;
                }
            };
            let opts = RunOptions {
                seed,
                force_collision: false,
            };
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|s| scope.spawn(move || run_scenario_with(s, opts)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("scenario thread panicked"))
                    .collect()
            });
            let mut all_ok = true;
            let mut json_reports = Vec::new();
            for (s, r) in scenarios.iter().zip(results) {
                match r {
                    Ok(report) => {
                        all_ok &= report.conforms;
                        if json {
                            json_reports.push(report_json(&report));
                        } else {
                            let _ = writeln!(
                                out,
                                "{:<32} {}",
                                report.scenario,
                                if report.conforms {
                                    "conforms"
                                } else {
                                    "DOES NOT CONFORM"
                                }
                            );
                        }
                    }
                    Err(e) => {
                        all_ok = false;
                        let _ = writeln!(err, "error: {}: {e}", s.name);
                    }
                }
            }
            if json {
                let _ = writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&json_reports).expect("json")
                );
            } else {
                let _ = writeln!(
                    out,
                    "{} scenarios, seed {seed}: {}",
                    catalog_names().len(),
                    if all_ok { "all conform" } else { "FAILURES" }
                );
            }
            i32::from(!all_ok)
        }
    }
}

fn print_report(out: &mut dyn Write, report: &RunReport, json: bool) {
    if json {
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&report_json(report)).expect("json")
        );
    } else {
        let _ = write!(out, "{}", render_report(report));
    }
}
