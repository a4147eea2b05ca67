use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::engine::PreparedScenario;
use crate::error::{Error, Result};
use crate::metrics::{frequency_grid, rx_element_responses};
use crate::output::{cell, Table};

use super::Execution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XlCorrPoint {
    pub separation_elements: usize,
    pub separation_m: f64,
    pub rho_baseline: f64,
    pub rho_sns: f64,
}

/// Per element j: `Σ h_0 h_j*`, `Σ |h_j|²`.
type Sums = (Vec<Complex64>, Vec<f64>);

fn drop_sums(prep: &PreparedScenario, drop: u64, freqs: &[f64]) -> Result<Sums> {
    let (r, _) = prep
        .communication_drop(drop)?
        .ok_or_else(|| Error::InvalidArgument("xl-corr needs distinct tx and rx positions".into()))?;
    let h = rx_element_responses(&r, 0, freqs);
    let cross = h
        .iter()
        .map(|hj| h[0].iter().zip(hj).map(|(a, b)| a * b.conj()).sum())
        .collect();
    let energy = h.iter().map(|hj| hj.iter().map(|c| c.norm_sqr()).sum()).collect();
    Ok((cross, energy))
}

fn correlations(per_drop: &[Sums]) -> Result<Vec<f64>> {
    let n = per_drop.first().map_or(0, |d| d.1.len());
    let mut cross = vec![Complex64::new(0.0, 0.0); n];
    let mut energy = vec![0.0; n];
    for (c, e) in per_drop {
        for j in 0..n {
            cross[j] += c[j];
            energy[j] += e[j];
        }
    }
    (0..n)
        .map(|j| {
            if !(energy[0] > 0.0 && energy[j] > 0.0) {
                return Err(Error::InvalidArgument(format!("element {j} has zero energy over all drops")));
            }
            Ok((cross[j].norm() / (energy[0] * energy[j]).sqrt()).min(1.0))
        })
        .collect()
}

/// Correlation of every receive element with element 0, without and with
/// spatial non-stationarity, over the same drops.
pub fn xl_corr(config: &ScenarioConfig, exec: Execution) -> Result<Vec<XlCorrPoint>> {
    let mut off = config.clone();
    off.extensions.sns = false;
    let mut on = config.clone();
    on.extensions.sns = true;
    let base = PreparedScenario::new(&off)?;
    let sns = PreparedScenario::new(&on)?;
    let freqs = frequency_grid(config.bandwidth_hz, config.xl_corr.frequency_points);
    let drops = exec.map(config.drops, |d| Ok((drop_sums(&base, d, &freqs)?, drop_sums(&sns, d, &freqs)?)))?;
    let (b, s): (Vec<Sums>, Vec<Sums>) = drops.into_iter().unzip();
    let rho_b = correlations(&b)?;
    let rho_s = correlations(&s)?;
    let p0 = base.rx.element_position(0);
    Ok((0..base.rx.len())
        .map(|j| XlCorrPoint {
            separation_elements: j,
            separation_m: base.rx.element_position(j).distance(p0),
            rho_baseline: rho_b[j],
            rho_sns: rho_s[j],
        })
        .collect())
}

pub(super) fn table(points: &[XlCorrPoint]) -> Table {
    let mut t = Table::new(&["separation_elements", "separation_m", "rho_baseline", "rho_sns"]);
    for p in points {
        t.push(vec![
            cell(p.separation_elements),
            cell(p.separation_m),
            cell(p.rho_baseline),
            cell(p.rho_sns),
        ]);
    }
    t
}
