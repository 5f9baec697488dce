//! Problem-file driven command line for constrained Gaussian analysis.
//!
//! Every subcommand reads one or more problem JSON files and writes a
//! machine-readable JSON report to standard output (an array of
//! {input, report} objects in input order when several files are given).
//! Exit codes: 0 success, 2 validation failure, 3 numerical-consistency
//! failure, 4 infeasible problem.

mod commands;
mod problem;
mod report;

use clap::Parser;
use serde_json::{json, Value};

use commands::{exit_code, run, Flags};
use problem::Problem;

#[derive(Parser, Debug)]
#[command(
    name = "germflow",
    about = "Constrained Gaussian states: norms, projections, transport, spectra",
    version
)]
struct Cli {
    /// Subcommand: validate | gauge | germ | norm | project | evolve |
    /// stability | spectrum | oracle-compare
    command: String,

    /// Problem file(s); repeat the flag for batch runs.
    #[arg(long = "input", required = true, num_args = 1..)]
    input: Vec<String>,

    /// Validation tolerance for germ and mode checks.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    /// Occupation cap for spectrum enumeration (and analysis depth).
    #[arg(long, default_value_t = 3)]
    levels: usize,

    /// Evolution time; overrides the problem file's time block.
    #[arg(long)]
    t: Option<f64>,

    /// Pretty-print the JSON report.
    #[arg(long, default_value_t = false)]
    pretty: bool,

    /// Run batch inputs on this many worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

const KNOWN_COMMANDS: &[&str] = &[
    "validate",
    "gauge",
    "germ",
    "norm",
    "project",
    "evolve",
    "stability",
    "spectrum",
    "oracle-compare",
];

fn run_one(command: &str, path: &str, flags: &Flags) -> Result<Value, (i32, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (2, format!("{path}: cannot read problem file: {e}")))?;
    let problem = Problem::from_json(&text).map_err(|e| (2, format!("{path}: {e}")))?;
    let rep = run(command, &problem, flags).map_err(|e| (exit_code(&e), format!("{path}: {e}")))?;
    report::validate_report(command, &rep)
        .map_err(|e| (1, format!("{path}: malformed report: {e}")))?;
    Ok(rep)
}

fn main() {
    let cli = Cli::parse();
    if !KNOWN_COMMANDS.contains(&cli.command.as_str()) {
        eprintln!(
            "unknown subcommand '{}'; expected one of {}",
            cli.command,
            KNOWN_COMMANDS.join(", ")
        );
        std::process::exit(2);
    }
    let flags = Flags {
        tol: cli.tol,
        levels: cli.levels,
        t: cli.t,
    };

    if cli.input.len() == 1 {
        match run_one(&cli.command, &cli.input[0], &flags) {
            Ok(rep) => println!("{}", report::render(&rep, cli.pretty)),
            Err((code, msg)) => {
                eprintln!("{msg}");
                std::process::exit(code);
            }
        }
        return;
    }

    // Batch mode: independent problems, concurrently when --jobs > 1,
    // reported in input order.
    let results: Vec<Result<Value, (i32, String)>> = if cli.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            use rayon::prelude::*;
            cli.input
                .par_iter()
                .map(|path| run_one(&cli.command, path, &flags))
                .collect()
        })
    } else {
        cli.input
            .iter()
            .map(|path| run_one(&cli.command, path, &flags))
            .collect()
    };

    let mut exit = 0;
    let mut array = Vec::new();
    for (path, result) in cli.input.iter().zip(results) {
        match result {
            Ok(rep) => array.push(json!({"input": path, "report": rep})),
            Err((code, msg)) => {
                eprintln!("{msg}");
                if exit == 0 {
                    exit = code;
                }
                array.push(json!({"input": path, "error": msg, "exit_code": code}));
            }
        }
    }
    println!("{}", report::render(&Value::Array(array), cli.pretty));
    std::process::exit(exit);
}
