use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use egbsm::experiments::{run, Command, Execution};
use egbsm::load_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    RcsCdf,
    XlCorr,
    RisSnr,
    SparsityGini,
    GenCir,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::RcsCdf => Command::RcsCdf,
            Sub::XlCorr => Command::XlCorr,
            Sub::RisSnr => Command::RisSnr,
            Sub::SparsityGini => Command::SparsityGini,
            Sub::GenCir => Command::GenCir,
        }
    }
}

/// Extended GBSM channel simulator.
#[derive(Debug, Parser)]
#[command(name = "egbsm", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<u64>,
    /// Table set name or file; a comma-separated list for sparsity-gini.
    #[arg(long)]
    tables: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generate drops on one thread.
    #[arg(long)]
    serial: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(d) = cli.drops {
        config.drops = d;
    }
    let command = Command::from(cli.command);
    if let Some(t) = &cli.tables {
        if command == Command::SparsityGini {
            config.sparsity_gini.table_sets = t.split(',').map(str::to_owned).collect();
        } else {
            config.tables = t.clone();
        }
    }
    if let Err(e) = config.validate() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let exec = if cli.serial { Execution::Serial } else { Execution::Parallel };
    match run(command, &config, &out, exec) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
