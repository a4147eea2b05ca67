//! CSV tables with a provenance line, and the binary path dump.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "EGBSMCIR"
//! version  u32      1
//! seed     u64
//! hash     32 bytes SHA-256 of the canonical configuration
//! count    u32      number of realizations
//! per realization:
//!   drop u64, label (u16 length + UTF-8), carrier_hz f64,
//!   delay_mode u8 (0 relative, 1 absolute), n_tx u32, n_rx u32,
//!   per link (tx-major): path count u32, then per path
//!     cluster u32, ray u32, delay_s f64, re f64, im f64,
//!     aod, zod, aoa, zoa (deg) f64, doppler_hz f64, shared u8
//! ```

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::channel::{ChannelRealization, DelayMode};
use crate::config::ScenarioConfig;
use crate::error::Result;

pub const BINARY_MAGIC: &[u8; 8] = b"EGBSMCIR";
pub const BINARY_VERSION: u32 = 1;

pub fn config_digest(config: &ScenarioConfig) -> [u8; 32] {
    Sha256::digest(config.to_json().as_bytes()).into()
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    hex::encode(config_digest(config))
}

pub fn schema(command: &str) -> String {
    format!("egbsm.{command}.v1")
}

/// First line of every CSV output.
pub fn provenance_line(command: &str, config: &ScenarioConfig) -> String {
    format!("# schema={} seed={} config_hash={}", schema(command), config.seed, config_hash(config))
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Parsed numeric values of one column.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[i].parse().ok()).collect()
    }

    pub fn render(&self, provenance: &str) -> String {
        let mut s = String::new();
        s.push_str(provenance);
        s.push('\n');
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, provenance: &str) -> Result<()> {
        std::fs::write(path, self.render(provenance))?;
        Ok(())
    }
}

/// Format a value for CSV output.
pub fn cell(v: impl Display) -> String {
    v.to_string()
}

/// One realization of the binary dump, with the drop it belongs to.
pub struct DumpEntry<'a> {
    pub drop: u64,
    pub realization: &'a ChannelRealization,
}

pub fn encode_binary(config: &ScenarioConfig, entries: &[DumpEntry]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(BINARY_MAGIC);
    b.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    b.extend_from_slice(&config.seed.to_le_bytes());
    b.extend_from_slice(&config_digest(config));
    b.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in entries {
        let r = e.realization;
        b.extend_from_slice(&e.drop.to_le_bytes());
        b.extend_from_slice(&(r.label.len() as u16).to_le_bytes());
        b.extend_from_slice(r.label.as_bytes());
        b.extend_from_slice(&r.carrier_frequency.to_le_bytes());
        b.push(match r.delay_mode {
            DelayMode::Relative => 0,
            DelayMode::Absolute => 1,
        });
        b.extend_from_slice(&(r.n_tx as u32).to_le_bytes());
        b.extend_from_slice(&(r.n_rx as u32).to_le_bytes());
        for paths in &r.links {
            b.extend_from_slice(&(paths.len() as u32).to_le_bytes());
            for p in paths {
                b.extend_from_slice(&(p.cluster as u32).to_le_bytes());
                b.extend_from_slice(&(p.ray as u32).to_le_bytes());
                for v in [
                    p.delay,
                    p.amplitude.re,
                    p.amplitude.im,
                    p.departure.azimuth.to_degrees(),
                    p.departure.zenith.to_degrees(),
                    p.arrival.azimuth.to_degrees(),
                    p.arrival.zenith.to_degrees(),
                    p.doppler,
                ] {
                    b.extend_from_slice(&v.to_le_bytes());
                }
                b.push(is_shared(r, p.cluster) as u8);
            }
        }
    }
    b
}

pub fn write_binary(path: &Path, config: &ScenarioConfig, entries: &[DumpEntry]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode_binary(config, entries))?;
    f.flush()?;
    Ok(())
}

pub fn is_shared(r: &ChannelRealization, cluster: usize) -> bool {
    r.cluster(cluster).is_some_and(|c| c.shared_with.is_some())
}
