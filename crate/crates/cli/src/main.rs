use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::thread;

use clap::{Parser, Subcommand};
use offpolicy::config::SweepConfig;
use offpolicy::harness::{run_sweep, Progress};
use offpolicy::report::{write_report, ReportKind, ReportOptions};
use offpolicy::{verify, Error};

const USAGE_ERROR: u8 = 1;
const VERIFY_FAILED: u8 = 2;
const IO_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "offpolicy",
    version,
    about = "Off-policy TD prediction sweeps on the Collision task"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a parameter sweep and write summary.csv, config.json and reruns.
    Sweep {
        /// JSON config; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads. Defaults to the config value, then to all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory. Defaults to the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the config with every default filled in and exit.
        #[arg(long)]
        print_config: bool,
        /// Accept grid values outside the standard grids.
        #[arg(long)]
        allow_custom_grid: bool,
    },
    /// Derive a CSV table from a sweep directory.
    Report {
        /// sensitivity, learning-curve, waterfall, emphatic-beta or gradient-eta.
        #[arg(long)]
        kind: ReportKind,
        /// Sweep output directory.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only one λ (ζ for ABTD).
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run the built-in self-checks.
    Verify,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Csv { .. } | Error::Format { .. } => IO_ERROR,
        _ => USAGE_ERROR,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn sweep(
    config: Option<PathBuf>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    print_config: bool,
    allow_custom_grid: bool,
) -> Result<(), Error> {
    let mut cfg = match &config {
        Some(path) => SweepConfig::load(path)?,
        None if print_config => SweepConfig::default(),
        None => return Err(Error::Config("--config is required".into())),
    };
    if workers.is_some() {
        cfg.workers = workers;
    }
    if out.is_some() {
        cfg.out = out;
    }
    cfg.validate(allow_custom_grid)?;
    if print_config {
        println!("{}", cfg.resolved().to_json());
        return Ok(());
    }
    let dir = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `out`".into()))?;
    let workers = cfg
        .workers
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()));

    let (tx, rx) = mpsc::channel();
    let reporter = thread::spawn(move || {
        for p in rx {
            match p {
                Progress::Instances { done, total } => eprintln!("instances {done}/{total}"),
                Progress::Reruns { done, total } => eprintln!("reruns {done}/{total}"),
            }
        }
    });
    eprintln!(
        "sweeping {} instances on {workers} workers",
        cfg.instance_count()
    );
    let result = run_sweep(&cfg, workers, Some(&dir), Some(&tx));
    drop(tx);
    let _ = reporter.join();
    let output = result?;
    eprintln!(
        "wrote {} summary rows to {}",
        output.summary.len(),
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Sweep {
            config,
            workers,
            out,
            print_config,
            allow_custom_grid,
        } => match sweep(config, workers, out, print_config, allow_custom_grid) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
        Command::Report {
            kind,
            input,
            out,
            lambda,
        } => match write_report(kind, &input, &out, &ReportOptions { lambda }) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
        Command::Verify => {
            let checks = verify::run_all();
            for c in &checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark} {}: {}", c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(VERIFY_FAILED)
            }
        }
    }
}
