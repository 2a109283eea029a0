use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use lattice_wh::scenario::{
    benchmark, invariant_suite, run, write_benchmark_csv, write_outputs, ScenarioConfig, DEFAULT_SEED,
};
use lattice_wh::Error;
use serde::Serialize;

/// Diffraction of a lattice plane wave by collinear cracks.
#[derive(Debug, Parser)]
#[command(name = "lattice-wh", version)]
struct Args {
    /// Scenario file (JSON). Without it the single-crack baseline is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV, JSON and PNG outputs.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Also run the invariant suite and fail if any check fails.
    #[arg(long)]
    seed_check: bool,
    /// Comma-separated crack lengths; times the solver and the oracle instead
    /// of running the scenario.
    #[arg(long, value_name = "L1,L2,...")]
    benchmark: Option<String>,
}

#[derive(Debug, Serialize)]
struct ErrorEntry {
    kind: String,
    message: String,
}

#[derive(Debug, Serialize)]
struct ErrorReport {
    status: &'static str,
    kind: String,
    message: String,
    errors: Vec<ErrorEntry>,
}

const EXIT_NUMERICAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn entry(e: &Error) -> ErrorEntry {
    ErrorEntry { kind: e.kind().into(), message: e.to_string() }
}

fn fail(out_dir: &Path, code: u8, errors: Vec<ErrorEntry>) -> ExitCode {
    let first = errors.first().map(|e| (e.kind.clone(), e.message.clone())).unwrap_or_default();
    let report = ErrorReport { status: "error", kind: first.0, message: first.1, errors };
    let text = serde_json::to_string_pretty(&report).expect("plain data serializes");
    println!("{text}");
    if std::fs::create_dir_all(out_dir).is_ok() {
        let _ = std::fs::write(out_dir.join("error.json"), format!("{text}\n"));
    }
    ExitCode::from(code)
}

fn fail_with(out_dir: &Path, e: &Error) -> ExitCode {
    let code = if e.is_config_error() { EXIT_CONFIG } else { EXIT_NUMERICAL };
    fail(out_dir, code, vec![entry(e)])
}

fn io_failure(out_dir: &Path, what: &str, e: impl std::fmt::Display) -> ExitCode {
    fail(out_dir, EXIT_NUMERICAL, vec![ErrorEntry { kind: "Io".into(), message: format!("{what}: {e}") }])
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, ErrorEntry> {
    let Some(path) = path else {
        return Ok(ScenarioConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ErrorEntry { kind: "ConfigRead".into(), message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text)
        .map_err(|e| ErrorEntry { kind: "ConfigParse".into(), message: format!("{}: {e}", path.display()) })
}

fn parse_lengths(list: &str) -> Result<Vec<i64>, ErrorEntry> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<i64>()
                .map_err(|e| ErrorEntry { kind: "InvalidParameter".into(), message: format!("benchmark length {s:?}: {e}") })
        })
        .collect()
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out_dir = args.out_dir.as_path();
    let config = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(out_dir, EXIT_CONFIG, vec![e]),
    };

    if let Some(list) = &args.benchmark {
        let lengths = match parse_lengths(list) {
            Ok(l) => l,
            Err(e) => return fail(out_dir, EXIT_CONFIG, vec![e]),
        };
        let rows = match benchmark(&config, &lengths) {
            Ok(r) => r,
            Err(e) => return fail_with(out_dir, &e),
        };
        let written = std::fs::create_dir_all(out_dir)
            .and_then(|_| File::create(out_dir.join("benchmark.csv")))
            .and_then(|f| write_benchmark_csv(&rows, BufWriter::new(f)));
        if let Err(e) = written {
            return io_failure(out_dir, "benchmark.csv", e);
        }
        let _ = write_benchmark_csv(&rows, std::io::stdout().lock());
        return ExitCode::SUCCESS;
    }

    let prepared = match config.prepare() {
        Ok(p) => p,
        Err(errs) => return fail(out_dir, EXIT_CONFIG, errs.0.iter().map(entry).collect()),
    };
    let outcome = match run(&prepared) {
        Ok(o) => o,
        Err(e) => return fail_with(out_dir, &e),
    };
    if let Err(e) = write_outputs(&prepared, &outcome, out_dir) {
        return io_failure(out_dir, "writing outputs", e);
    }
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("plain data serializes"));

    if args.seed_check {
        let seed = config.seed.unwrap_or(DEFAULT_SEED);
        let checks = match invariant_suite(&prepared, &outcome, seed) {
            Ok(c) => c,
            Err(e) => return fail_with(out_dir, &e),
        };
        let text = serde_json::to_string_pretty(&checks).expect("plain data serializes");
        if let Err(e) = std::fs::write(out_dir.join("checks.json"), format!("{text}\n")) {
            return io_failure(out_dir, "checks.json", e);
        }
        for c in &checks {
            eprintln!("{} {} {:e} (tol {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tol);
        }
        if checks.iter().any(|c| !c.passed) {
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }
    ExitCode::SUCCESS
}
