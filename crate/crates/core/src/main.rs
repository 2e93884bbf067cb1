use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qeh::harness::{
    default_experiment, load_experiment, load_toml, run, sweep, write_run, write_sweep, HarnessError, SweepConfig,
};

#[derive(Parser)]
#[command(name = "qeh", version, about = "Level-tests of the classical and quantum ergodic hierarchies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with the experiment parameters; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for report.txt and series/*.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Jobs run in parallel by `sweep`; single runs use one thread.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Classical level-tests of a map on a family of base sets.
    ClassifyMap(Common),
    /// Quantum level-tests on a finite-dimensional trajectory.
    QehTest(Common),
    /// Time averages, localization and level-tests of the kicked rotator.
    KickedRotator(Common),
    /// Cesaro decay of interference terms and the quasi-continuous limit.
    Dephasing(Common),
    /// Weyl-Wigner pairing, round trip and set-versus-operator correlations.
    WignerCheck(Common),
    /// Several experiments from one config, run in parallel.
    Sweep(Common),
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    let (name, common) = match &cli.command {
        Command::ClassifyMap(c) => ("classify-map", c),
        Command::QehTest(c) => ("qeh-test", c),
        Command::KickedRotator(c) => ("kicked-rotator", c),
        Command::Dephasing(c) => ("dephasing", c),
        Command::WignerCheck(c) => ("wigner-check", c),
        Command::Sweep(c) => ("sweep", c),
    };
    if name == "sweep" {
        let Some(path) = &common.config else {
            return Err(HarnessError::Config {
                path: "--config".into(),
                message: "sweep needs a config file".into(),
            });
        };
        let configs = load_toml::<SweepConfig>(path)?.expand();
        let results = sweep(&configs, common.seed, common.workers);
        let report = write_sweep(&common.out, &configs, common.seed, &results)?;
        for job in &report.jobs {
            let status = if job.ok { "ok".to_string() } else { format!("failed: {}", job.error) };
            println!("{:03} {:<16} {} {status}", job.index, job.subcommand, job.label);
        }
        println!("wrote {}", common.out.display());
        return Ok(report.jobs.iter().all(|j| j.ok));
    }
    let cfg = match &common.config {
        Some(path) => load_experiment(path, name)?,
        None => default_experiment(name).expect("known subcommand"),
    };
    let out = run(&cfg, common.seed)?;
    write_run(&common.out, &out)?;
    for v in &out.report.verdicts {
        println!("{v}");
    }
    for note in &out.report.notes {
        println!("note: {note}");
    }
    println!("wrote {}", common.out.display());
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
