//! Frequency-dependent sparsity: cluster counts per band and intra-cluster
//! power concentration (ICK).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::Stream;
use crate::scenario::{LinkState, Scenario, TableSet};

/// Gaussian ICK statistics for clusters of `rays` rays, clipped to `[1/M, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IckParams {
    pub mean: f64,
    pub std: f64,
    pub rays: usize,
}

impl IckParams {
    pub fn new(mean: f64, std: f64, rays: usize) -> Result<Self> {
        let p = Self { mean, std, rays };
        p.validate()?;
        Ok(p)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (1.0 / self.rays as f64, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rays == 0 {
            return Err(Error::InvalidArgument("ICK needs at least one ray".into()));
        }
        let (lo, hi) = self.bounds();
        if !(lo..=hi).contains(&self.mean) || !(self.std >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ICK mean {} must lie in [{lo}, {hi}] with std >= 0 (got std {})",
                self.mean, self.std
            )));
        }
        Ok(())
    }
}

/// Cluster count N1 of the band that covers `frequency_hz`.
pub fn frequency_cluster_count(set: &TableSet, scenario: Scenario, state: LinkState, frequency_hz: f64) -> Result<usize> {
    Ok(crate::scenario::lookup_table(set, scenario, state, frequency_hz)?.clusters)
}

/// Give the strongest ray (lowest index on ties) `ick·P` and split the rest
/// evenly over the other rays. A uniform input with `ick = 1/M` is returned
/// untouched.
pub fn apply_ick(powers: &[f64], ick: f64) -> Result<Vec<f64>> {
    let m = powers.len();
    if m == 0 {
        return Err(Error::InvalidArgument("apply_ick on an empty cluster".into()));
    }
    let lo = 1.0 / m as f64;
    if !(ick >= lo - 1e-12 && ick <= 1.0) {
        return Err(Error::InvalidArgument(format!("ICK {ick} outside [{lo}, 1]")));
    }
    if m == 1 {
        return Ok(powers.to_vec());
    }
    if ick == lo && powers.iter().all(|&p| p == powers[0]) {
        return Ok(powers.to_vec());
    }
    let total: f64 = powers.iter().sum();
    let dominant = powers
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > powers[best] { i } else { best });
    let rest = (1.0 - ick) * total / (m - 1) as f64;
    Ok((0..m).map(|i| if i == dominant { ick * total } else { rest }).collect())
}

pub fn draw_ick(params: &IckParams, stream: &mut Stream) -> f64 {
    let (lo, hi) = params.bounds();
    stream.clipped_normal(params.mean, params.std, lo, hi)
}
