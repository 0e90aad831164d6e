use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spraymetric::harness::{
    self, example_scenario, grid_dump, list_examples, load_scenario, ReconstructMode, RunError, RunOptions,
    RunReport, Scenario,
};
use spraymetric::par::Execution;

#[derive(Parser)]
#[command(name = "spraymetric", version, about = "Metrizability tests and Finsler reconstruction for sprays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a spray without reconstructing.
    Check(Target),
    /// Classify, then reconstruct F and compare with the expected values.
    Reconstruct(Target),
    /// Run a built-in example.
    Example {
        name: String,
        #[arg(long)]
        variant: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// List the built-in examples.
    Examples {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Dump the diagnostic grid as CSV.
    Grid(Target),
}

#[derive(Args)]
struct Target {
    /// Scenario JSON file.
    #[arg(required_unless_present = "example", conflicts_with = "example")]
    scenario: Option<PathBuf>,
    /// Use a built-in example instead of a file.
    #[arg(long)]
    example: Option<String>,
    #[arg(long, requires = "example")]
    variant: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Overrides every residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; defaults to the scenario's `outputs` entry, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn options(&self, reconstruct: ReconstructMode) -> RunOptions {
        RunOptions {
            reconstruct,
            timings: self.timings,
            execution: if self.sequential { Execution::Sequential } else { Execution::Parallel },
            seed: self.seed,
            samples: self.samples,
            tol: self.tol,
        }
    }
}

impl Target {
    fn load(&self) -> Result<Scenario, RunError> {
        match (&self.scenario, &self.example) {
            (Some(path), _) => Ok(load_scenario(path)?),
            (None, Some(name)) => Ok(example_scenario(name, self.variant.as_deref())?),
            (None, None) => unreachable!("clap requires one of them"),
        }
    }
}

fn open_out(out: Option<&PathBuf>, fallback: Option<&str>) -> Result<Box<dyn Write>, RunError> {
    match out.map(|p| p.as_path()).or(fallback.map(std::path::Path::new)) {
        Some(p) => {
            let f = File::create(p).map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit(report: &RunReport, common: &Common) -> Result<i32, RunError> {
    let mut w = open_out(common.out.as_ref(), report.scenario.outputs.report.as_deref())?;
    writeln!(w, "{}", report.to_json())?;
    w.flush()?;
    let label = if report.scenario.name.is_empty() { "scenario" } else { report.scenario.name.as_str() };
    let status = if report.matches { "ok" } else { "MISMATCH" };
    eprintln!("{label}: {} [{status}]", report.verdict);
    for m in &report.mismatches {
        eprintln!("  {m}");
    }
    Ok(report.exit_code())
}

fn run_target(t: &Target, mode: ReconstructMode) -> Result<i32, RunError> {
    let sc = t.load()?;
    let report = harness::run(&sc, &t.common.options(mode))?;
    emit(&report, &t.common)
}

fn execute(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Check(t) => run_target(&t, ReconstructMode::Never),
        Command::Reconstruct(t) => run_target(&t, ReconstructMode::Required),
        Command::Example { name, variant, common } => {
            let sc = example_scenario(&name, variant.as_deref())?;
            let report = harness::run(&sc, &common.options(ReconstructMode::IfAvailable))?;
            emit(&report, &common)
        }
        Command::Examples { json } => {
            let rows = list_examples();
            let mut out = io::stdout().lock();
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
            } else {
                for r in rows {
                    writeln!(out, "{:<16} {:<8} n={} {:<10} {:<24} {}", r.name, r.variant, r.n, r.mode, r.expected, r.summary)?;
                }
            }
            Ok(0)
        }
        Command::Grid(t) => {
            let sc = t.load()?;
            let fallback = sc.spec.outputs.grid.as_ref().and_then(|g| g.path.clone());
            let w = open_out(t.common.out.as_ref(), fallback.as_deref())?;
            let rows = grid_dump(&sc, w, &t.common.options(ReconstructMode::IfAvailable))?;
            eprintln!("grid: {rows} rows");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
