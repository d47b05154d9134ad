use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use ctsched::compare::compare_traces;
use ctsched::config::{BenchConfig, ConfigError, Overrides, RunConfig};
use ctsched::hartstone::{self, PhTestKind};
use ctsched::policy::{table2_policies, PolicyConfig};
use ctsched::trace_io::{self, RunSummary, TraceTable};
use ctsched::{run_simulation, SimError};

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

#[derive(Parser)]
#[command(name = "ctsched", version, about = "Round-based scheduling simulator and Hartstone PH benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write its trace and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured policy, e.g. `edf`, `rr:5`, `cascade:1000`.
        #[arg(long)]
        policy: Option<String>,
        /// Output directory; defaults to the configured `out_dir`, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Accepted for symmetry; a single run is always sequential.
        #[arg(long, action = ArgAction::Set, default_value_t = false)]
        parallel: bool,
    },
    /// Run Hartstone PH series and write a comparison table.
    Bench {
        /// JSON file with a `bench` block (tests, policies, hyperperiods, iteration_cap).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these policies (repeatable).
        #[arg(long)]
        policy: Vec<String>,
        /// Restrict to these tests, e.g. `--tests I,IV`.
        #[arg(long, value_delimiter = ',')]
        tests: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Benchmarks are deterministic; the seed is recorded only.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        parallel: bool,
    },
    /// Per-round differences between two trace CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the report to DIR/compare.json as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Range(_) => Failure::Config(e.to_string()),
            SimError::Policy { .. } | SimError::Invariant { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<trace_io::IoError> for Failure {
    fn from(e: trace_io::IoError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_run(config: &Path, policy: Option<&str>, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let text = read_config(config)?;
    let overrides = Overrides {
        policy: policy.map(PolicyConfig::parse).transpose()?,
        seed,
        out_dir: out,
    };
    let cfg = RunConfig::from_json_str(&text, &overrides)?;
    let mut sched = cfg.policy.build(&cfg.tasks)?;
    let trace = run_simulation(&cfg.tasks, sched.as_mut(), &cfg.sim)?;
    let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    trace_io::write_trace(&TraceTable::from(&trace), create(&out, "trace.csv")?)?;
    let summary = RunSummary::from_trace(&trace);
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join("summary.json"), format!("{json}\n"))?;
    emit(&format!("{json}\n"));
    Ok(())
}

fn cmd_bench(
    config: Option<&Path>,
    policies: &[String],
    tests: &[String],
    out: &Path,
    parallel: bool,
) -> Result<(), Failure> {
    let bench = match config {
        Some(p) => BenchConfig::from_json_str(&read_config(p)?)?,
        None => BenchConfig {
            tests: None,
            policies: None,
            hyperperiods: None,
            iteration_cap: None,
        },
    };
    let policies = if policies.is_empty() {
        bench.policies.clone().unwrap_or_else(table2_policies)
    } else {
        policies
            .iter()
            .map(|p| PolicyConfig::parse(p))
            .collect::<Result<Vec<_>, _>>()?
    };
    let kinds = if tests.is_empty() {
        bench.tests.clone().unwrap_or_else(|| PhTestKind::ALL.to_vec())
    } else {
        tests
            .iter()
            .map(|t| t.parse::<PhTestKind>())
            .collect::<Result<Vec<_>, _>>()?
    };
    if policies.is_empty() || kinds.is_empty() {
        return Err(Failure::Config("nothing to run: no policies or tests selected".into()));
    }
    let results = hartstone::run_grid(&policies, &kinds, &bench.options(), parallel)?;
    trace_io::write_bench(&results, create(out, "bench.csv")?)?;
    let table = hartstone::format_table(&results);
    fs::write(out.join("bench.txt"), &table)?;
    emit(&table);
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let load = |p: &Path| -> Result<TraceTable, Failure> {
        let f = File::open(p).map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?;
        trace_io::read_trace(f).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
    };
    let (ta, tb) = (load(a)?, load(b)?);
    if ta.n != tb.n {
        return Err(Failure::Config(format!("traces have {} and {} tasks", ta.n, tb.n)));
    }
    let diff = compare_traces(&ta.records, &tb.records)?;
    let json = serde_json::to_string_pretty(&diff)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("compare.json"), format!("{json}\n"))?;
    }
    emit(&format!("{json}\n"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            policy,
            out,
            seed,
            parallel: _,
        } => cmd_run(&config, policy.as_deref(), out, seed),
        Command::Bench {
            config,
            policy,
            tests,
            out,
            seed: _,
            parallel,
        } => cmd_bench(config.as_deref(), &policy, &tests, &out, parallel),
        Command::Compare { a, b, out } => cmd_compare(&a, &b, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
