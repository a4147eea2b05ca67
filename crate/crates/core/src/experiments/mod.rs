//! Experiment subcommands. Each returns its output tables so tests can use
//! them without touching the file system.

mod gen_cir;
mod rcs_cdf;
mod ris_snr;
mod sparsity_gini;
mod xl_corr;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

pub use gen_cir::{gen_cir, CirOutput};
pub use rcs_cdf::{rcs_cdf, rcs_samples};
pub use ris_snr::{ris_snr, RisSnrPoint};
pub use sparsity_gini::{sparsity_gini, GiniPoint};
pub use xl_corr::{xl_corr, XlCorrPoint};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::output::{provenance_line, write_binary, DumpEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RcsCdf,
    XlCorr,
    RisSnr,
    SparsityGini,
    GenCir,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::RcsCdf,
        Command::XlCorr,
        Command::RisSnr,
        Command::SparsityGini,
        Command::GenCir,
    ];

    /// Name used in schemas and file names.
    pub fn name(self) -> &'static str {
        match self {
            Command::RcsCdf => "rcs_cdf",
            Command::XlCorr => "xl_corr",
            Command::RisSnr => "ris_snr",
            Command::SparsityGini => "sparsity_gini",
            Command::GenCir => "gen_cir",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Command::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command `{s}`")))
    }
}

/// Whether drops are spread over threads. Outputs are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

impl Execution {
    /// `f(0..n)` in order.
    pub fn map<T: Send>(self, n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        match self {
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            Execution::Serial => (0..n).map(f).collect(),
        }
    }
}

/// Run `command` and write its files into `out_dir`. Returns the paths
/// written.
pub fn run(command: Command, config: &ScenarioConfig, out_dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let provenance = provenance_line(command.name(), config);
    let csv = out_dir.join(format!("{}.csv", command.name()));
    let table = match command {
        Command::RcsCdf => rcs_cdf(config, exec)?,
        Command::XlCorr => xl_corr::table(&xl_corr(config, exec)?),
        Command::RisSnr => ris_snr::table(&ris_snr(config, exec)?),
        Command::SparsityGini => sparsity_gini::table(&sparsity_gini(config, exec)?),
        Command::GenCir => {
            let out = gen_cir(config, exec)?;
            let mut written = Vec::new();
            if config.gen_cir.csv {
                out.table().write(&csv, &provenance)?;
                written.push(csv);
            }
            if config.gen_cir.binary {
                let bin = out_dir.join("gen_cir.bin");
                let entries: Vec<DumpEntry> = out
                    .drops
                    .iter()
                    .flat_map(|d| d.realizations().into_iter().map(move |r| DumpEntry { drop: d.drop, realization: r }))
                    .collect();
                write_binary(&bin, config, &entries)?;
                written.push(bin);
            }
            return Ok(written);
        }
    };
    table.write(&csv, &provenance)?;
    Ok(vec![csv])
}
