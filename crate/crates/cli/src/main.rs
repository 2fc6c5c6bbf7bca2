use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use toric_cli::config::{Config, Suite};
use toric_cli::render::{render, Drawing};
use toric_cli::report::Report;
use toric_cli::suites::{self, exit_code};

#[derive(Debug, Parser)]
#[command(name = "toric", version, about = "Exact verification harness for cone algebras of the planar toric code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `out_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a configuration, then print it with defaults filled in.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run verification suites and write `report.json` to the output directory.
    Run {
        #[command(flatten)]
        common: Common,
        /// Overrides `suites`.
        #[arg(long, value_delimiter = ',', value_name = "NAME[,NAME...]")]
        suite: Vec<Suite>,
        /// Record wall time per suite (the report is then no longer reproducible byte for byte).
        #[arg(long)]
        timings: bool,
    },
    /// Write an SVG drawing to the output directory.
    Render {
        what: Drawing,
        #[command(flatten)]
        common: Common,
    },
    /// Print the scaffold, the size of its group and the dimension it spans.
    H0 {
        #[command(flatten)]
        common: Common,
    },
}

const CONFIG_ERROR: u8 = 2;

fn load(common: &Common) -> anyhow::Result<Config> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(trials) = common.trials {
        config.trials = trials;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn summary(report: &Report) {
    for s in &report.suites {
        println!("{:<16} {}", s.name, s.status.as_str());
    }
    println!("{:<16} {}", "overall", report.status.as_str());
}

fn execute(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Validate { common } => {
            let config = load(&common)?;
            println!("{}", serde_json::to_string_pretty(&config)?);
            Ok(0)
        }
        Command::Run { common, suite, timings } => {
            let mut config = load(&common)?;
            if !suite.is_empty() {
                config.suites = suite;
            }
            let report = suites::run(&config, timings)?;
            let path = write(&config.out_dir, "report.json", &report.to_json())?;
            summary(&report);
            println!("report written to {}", path.display());
            Ok(exit_code(&report))
        }
        Command::Render { what, common } => {
            let config = load(&common)?;
            let svg = render(&config, what)?;
            let path = write(&config.out_dir, what.file_name(), &svg)?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::H0 { common } => {
            let config = load(&common)?;
            let section = suites::h0_section(&config);
            println!("{}", serde_json::to_string_pretty(&section)?);
            Ok(if section.status == toric_cli::report::Status::Pass { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
