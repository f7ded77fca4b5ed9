//! `cpkit` command-line front end. Reports go to stdout as JSON,
//! diagnostics to stderr.
//!
//! Exit codes: 0 success or affirmative verdict, 1 negative verdict,
//! 2 invalid input, 3 inconclusive.

mod commands;
mod demo;
mod doc;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use cpkit::{QuasiPurityOptions, Tolerance};
use serde_json::{json, Value};

use commands::{Failure, Outcome, Route};

#[derive(Parser)]
#[command(
    name = "cpkit",
    version,
    about = "Analyze completely positive maps between matrix algebras"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_rank: f64,
    /// Slack on the smallest eigenvalue in positivity tests.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_psd: f64,
    /// Max-entry slack for operator equality.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_eq: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random draws allowed in the quasi-purity search.
    #[arg(long, global = true, default_value_t = 2000)]
    budget: usize,
    /// Report a randomized search without counterexample as inconclusive.
    /// `--strict=false` accepts it as quasi-pure.
    #[arg(long, global = true, default_value_t = true, num_args = 0..=1,
          default_missing_value = "true", require_equals = true, action = ArgAction::Set)]
    strict: bool,
    /// Add wall-clock time to the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a map and print its Choi spectrum.
    Analyze { map: PathBuf },
    /// Decide quasi-purity.
    Quasipure { map: PathBuf },
    /// Minimal CP completion of a map known through X -> phi(X)R.
    Complete {
        /// Partial map (`blocks`) or a full map document to restrict.
        beta: PathBuf,
        /// Operator document holding R.
        r: PathBuf,
        #[arg(long, value_enum, default_value_t = Route::Both)]
        route: Route,
    },
    /// Equivalence on R or almost everywhere for a reference map.
    Aeq {
        phi: PathBuf,
        psi: PathBuf,
        #[arg(long, conflicts_with = "xi", required_unless_present = "xi")]
        r: Option<PathBuf>,
        #[arg(long)]
        xi: Option<PathBuf>,
    },
    /// Run the worked examples.
    Demo {
        /// Print example names without running them.
        #[arg(long)]
        list: bool,
        /// Print the JSON report of one example.
        #[arg(long, value_name = "NAME")]
        export: Option<String>,
    },
}

/// Writes one line to stdout. A closed pipe is not an error.
fn out(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json(v: &Value) {
    out(&serde_json::to_string_pretty(v).expect("serializable"));
}

fn run_demo(
    list: bool,
    export: Option<String>,
    tol: &Tolerance,
    seed: u64,
) -> Result<Outcome, Failure> {
    if list {
        for ex in demo::EXAMPLES {
            out(&format!("{:<24} {}", ex.name, ex.summary));
        }
        return Ok(Outcome {
            report: Value::Null,
            exit: 0,
        });
    }
    if let Some(name) = export {
        let ex =
            demo::find(&name).ok_or_else(|| Failure::Input(format!("unknown example `{name}`")))?;
        let (pass, mut report) = demo::export(ex, tol, seed);
        report["seed"] = json!(seed);
        report["tolerances"] = doc::tolerance_value(tol);
        return Ok(Outcome {
            report,
            exit: if pass { 0 } else { 1 },
        });
    }
    let mut all = true;
    for ex in demo::EXAMPLES {
        let (pass, _) = ex.run(tol, seed);
        all &= pass;
        out(&format!(
            "{:<24} {}  {}",
            ex.name,
            if pass { "PASS" } else { "FAIL" },
            ex.summary
        ));
    }
    Ok(Outcome {
        report: Value::Null,
        exit: if all { 0 } else { 1 },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let tol = match Tolerance::new(g.tol_rank, g.tol_psd, g.tol_eq) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = QuasiPurityOptions {
        budget: g.budget,
        seed: g.seed,
        strict: g.strict,
    };
    let start = Instant::now();
    let result = match cli.command {
        Command::Analyze { map } => commands::analyze(&map, &tol),
        Command::Quasipure { map } => commands::quasipure(&map, &tol, &opts),
        Command::Complete { beta, r, route } => commands::complete(&beta, &r, route, &tol),
        Command::Aeq { phi, psi, r, xi } => {
            commands::aeq(&phi, &psi, r.as_deref(), xi.as_deref(), &tol)
        }
        Command::Demo { list, export } => run_demo(list, export, &tol, g.seed),
    };
    match result {
        Ok(Outcome { mut report, exit }) => {
            if let Value::Object(map) = &mut report {
                map.entry("tolerances")
                    .or_insert_with(|| doc::tolerance_value(&tol));
                map.entry("seed").or_insert(json!(g.seed));
                if g.timing {
                    map.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
                }
                print_json(&report);
            }
            ExitCode::from(exit as u8)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Negative(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
