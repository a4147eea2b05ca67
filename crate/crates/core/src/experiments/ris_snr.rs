use crate::config::ScenarioConfig;
use crate::engine::{drop_seeds, PreparedScenario};
use crate::error::{Error, Result};
use crate::metrics::{mean, received_snr, thermal_noise_dbm};
use crate::output::{cell, Table};
use crate::ris::{concatenate_ris, prune_pair, ris_sublinks, CodebookKind};

use super::Execution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisSnrPoint {
    pub side: usize,
    pub elements: usize,
    pub codebook: CodebookKind,
    /// Mean over drops of the SNR in dB.
    pub mean_snr_db: f64,
}

/// Mean received SNR for every panel size and codebook. Sub-links are drawn
/// once per drop and shared by all panel configurations.
pub fn ris_snr(config: &ScenarioConfig, exec: Execution) -> Result<Vec<RisSnrPoint>> {
    let ris = config
        .ris
        .clone()
        .ok_or_else(|| Error::InvalidArgument("ris-snr needs a `ris` panel".into()))?;
    let prep = PreparedScenario::new(config)?;
    let settings = &config.ris_snr;
    let noise = settings
        .noise_power_dbm
        .unwrap_or_else(|| thermal_noise_dbm(config.bandwidth_hz, settings.noise_figure_db));
    let lambda = crate::geometry::wavelength(config.carrier_frequency_hz);
    let combos: Vec<(usize, CodebookKind)> = settings
        .sides
        .iter()
        .flat_map(|&s| settings.codebooks.iter().map(move |&c| (s, c)))
        .collect();
    let per_drop = exec.map(config.drops, |d| {
        let (a, b) = ris_sublinks(&prep, &ris, &drop_seeds(config.seed, d))?;
        let (pa, pb) = prune_pair(&a, &b, &config.prune);
        combos
            .iter()
            .map(|&(side, kind)| {
                let panel = ris.panel(side, side, lambda)?;
                let spec = ris.codebook_spec(kind, prep.tx.position, prep.rx.position);
                let r = concatenate_ris(&pa, &pb, panel, &spec, config.carrier_frequency_hz)?;
                Ok(received_snr(&r, settings.tx_power_dbm, noise, settings.combining))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(combos
        .iter()
        .enumerate()
        .map(|(i, &(side, codebook))| {
            let v: Vec<f64> = per_drop.iter().map(|d| d[i]).collect();
            RisSnrPoint {
                side,
                elements: side * side,
                codebook,
                mean_snr_db: mean(&v),
            }
        })
        .collect())
}

pub(super) fn table(points: &[RisSnrPoint]) -> Table {
    let mut t = Table::new(&["side", "elements", "codebook", "mean_snr_db"]);
    for p in points {
        t.push(vec![
            cell(p.side),
            cell(p.elements),
            p.codebook.as_str().to_owned(),
            cell(p.mean_snr_db),
        ]);
    }
    t
}
