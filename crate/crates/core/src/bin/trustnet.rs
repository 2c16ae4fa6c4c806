use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trustnet::harness::{
    builtin_scenario_seeded, emit_report, load_scenario, to_json, write_csv, Builtin,
    HarnessError, ReportFormat, Schedule, Simulation, DEFAULT_SEED,
};
use trustnet::Scenario64;

#[derive(Parser)]
#[command(name = "trustnet", version, about = "Trust-based malicious controller detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in configuration.
    Builtin {
        name: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List built-in configuration names.
    List,
}

#[derive(Args)]
struct RunOpts {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every board message as JSON lines.
    #[arg(long)]
    audit_log: Option<PathBuf>,
    /// Include wall-clock timings in JSON output.
    #[arg(long)]
    timing: bool,
    /// Run policy-checker sweeps concurrently.
    #[arg(long)]
    parallel: bool,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

fn run(scenario: Scenario64, opts: &RunOpts) -> Result<(), HarnessError> {
    let mut scenario = scenario;
    if let Some(rounds) = opts.rounds {
        scenario.rounds = rounds;
    }
    let schedule = if opts.parallel {
        Schedule::Parallel
    } else {
        Schedule::Sequential
    };
    let mut sim = Simulation::new(scenario)?.with_schedule(schedule);
    let report = sim.run()?;

    if let Some(path) = &opts.audit_log {
        let io_err = |source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        sim.board().write_audit_log(BufWriter::new(file))?;
    }

    match &opts.out {
        Some(path) => emit_report(&report, opts.format, path, opts.timing),
        None => {
            let stdout = io::stdout();
            let io_err = |source| HarnessError::Io {
                path: "<stdout>".into(),
                source,
            };
            match opts.format {
                ReportFormat::Json => {
                    let text = to_json(&report, opts.timing)?;
                    writeln!(stdout.lock(), "{text}").map_err(io_err)
                }
                ReportFormat::Csv => write_csv(std::slice::from_ref(&report), stdout.lock()).map_err(io_err),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, opts } => load_scenario(config).and_then(|mut s: Scenario64| {
            if let Some(seed) = opts.seed {
                s.seed = seed;
            }
            run(s, opts)
        }),
        Command::Builtin { name, opts } => {
            builtin_scenario_seeded(name, opts.seed.unwrap_or(DEFAULT_SEED)).and_then(|s| run(s, opts))
        }
        Command::List => {
            for b in Builtin::ALL {
                println!("{b}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trustnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
