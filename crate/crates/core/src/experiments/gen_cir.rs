use crate::config::ScenarioConfig;
use crate::engine::{DropOutput, PreparedScenario};
use crate::error::Result;
use crate::output::{cell, is_shared, Table};

use super::Execution;

pub struct CirOutput {
    pub drops: Vec<DropOutput>,
}

/// Every realization of every drop.
pub fn gen_cir(config: &ScenarioConfig, exec: Execution) -> Result<CirOutput> {
    let prep = PreparedScenario::new(config)?;
    Ok(CirOutput {
        drops: exec.map(config.drops, |d| prep.run_drop(d))?,
    })
}

impl CirOutput {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "drop", "link", "tx", "rx", "cluster", "ray", "delay_s", "amp_re", "amp_im", "aod_deg", "zod_deg",
            "aoa_deg", "zoa_deg", "doppler_hz", "shared",
        ]);
        for d in &self.drops {
            for r in d.realizations() {
                for tx in 0..r.n_tx {
                    for rx in 0..r.n_rx {
                        for p in r.link(tx, rx) {
                            t.push(vec![
                                cell(d.drop),
                                r.label.clone(),
                                cell(tx),
                                cell(rx),
                                cell(p.cluster),
                                cell(p.ray),
                                cell(p.delay),
                                cell(p.amplitude.re),
                                cell(p.amplitude.im),
                                cell(p.departure.azimuth.to_degrees()),
                                cell(p.departure.zenith.to_degrees()),
                                cell(p.arrival.azimuth.to_degrees()),
                                cell(p.arrival.zenith.to_degrees()),
                                cell(p.doppler),
                                cell(is_shared(r, p.cluster) as u8),
                            ]);
                        }
                    }
                }
            }
        }
        t
    }
}
