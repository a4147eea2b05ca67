use crate::config::ScenarioConfig;
use crate::engine::PreparedScenario;
use crate::error::{Error, Result};
use crate::metrics::{mean, realization_gini};
use crate::output::{cell, Table};

use super::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct GiniPoint {
    pub frequency_hz: f64,
    pub table_set: String,
    pub mean_gini: f64,
    pub drops: u64,
}

/// Mean Gini index of the communication link per (table set, frequency).
pub fn sparsity_gini(config: &ScenarioConfig, exec: Execution) -> Result<Vec<GiniPoint>> {
    let mut out = Vec::new();
    for set in &config.sparsity_gini.table_sets {
        for &f in &config.sparsity_gini.frequencies_hz {
            let mut c = config.clone();
            c.tables = set.clone();
            c.carrier_frequency_hz = f;
            c.target = None;
            c.ris = None;
            c.extensions.isac = false;
            c.extensions.ris = false;
            let prep = PreparedScenario::new(&c)?;
            let g = exec.map(c.drops, |d| {
                let (r, _) = prep
                    .communication_drop(d)?
                    .ok_or_else(|| Error::InvalidArgument("sparsity-gini needs distinct tx and rx".into()))?;
                Ok(realization_gini(&r, c.sparsity_gini.granularity)?.value)
            })?;
            out.push(GiniPoint {
                frequency_hz: f,
                table_set: set.clone(),
                mean_gini: mean(&g),
                drops: c.drops,
            });
        }
    }
    Ok(out)
}

pub(super) fn table(points: &[GiniPoint]) -> Table {
    let mut t = Table::new(&["frequency_hz", "table_set", "mean_gini", "drops"]);
    for p in points {
        t.push(vec![cell(p.frequency_hz), p.table_set.clone(), cell(p.mean_gini), cell(p.drops)]);
    }
    t
}
