use crate::config::{RcsSeries, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::DirectionPair;
use crate::isac::TargetResponse;
use crate::metrics::empirical_cdf;
use crate::output::{cell, Table};
use crate::random::SeedTree;

use super::Execution;

fn series(config: &ScenarioConfig) -> Result<Vec<RcsSeries>> {
    if let Some(r) = &config.rcs_cdf {
        return Ok(r.series.clone());
    }
    let target = config
        .target
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("rcs-cdf needs `rcs_cdf.series` or a `target`".into()))?;
    Ok(vec![RcsSeries {
        label: "target".into(),
        frequency_hz: config.carrier_frequency_hz,
        rcs: target.rcs.clone(),
    }])
}

/// Monostatic RCS draws (dBsm) of series `index`.
pub fn rcs_samples(config: &ScenarioConfig, index: usize) -> Result<Vec<f64>> {
    let all = series(config)?;
    let s = all
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("no rcs series {index}")))?;
    let samples = config.rcs_cdf.as_ref().map_or(100_000, |r| r.samples);
    let aspect = config.rcs_cdf.as_ref().map_or(0.0, |r| r.aspect_deg);
    let dir = DirectionPair::from_degrees(aspect, 90.0);
    let target = config.target.as_ref();
    let (position, yaw) = target.map_or((Default::default(), 0.0), |t| (t.position, t.yaw_deg));
    let seeds = SeedTree::new(config.seed).child("rcs_cdf", index as u64);
    let mut stream = seeds.derive_stream("rcs", 0);
    Ok((0..samples)
        .map(|_| {
            let t = TargetResponse::draw(s.rcs.clone(), position, yaw, &mut stream);
            10.0 * t.sigma(dir, dir).log10()
        })
        .collect())
}

/// `series, frequency_hz, rcs_dbsm, cdf` rows, `cdf_points` per series.
pub fn rcs_cdf(config: &ScenarioConfig, exec: Execution) -> Result<Table> {
    let all = series(config)?;
    let points = config.rcs_cdf.as_ref().map_or(1000, |r| r.cdf_points);
    let per_series = exec.map(all.len() as u64, |i| rcs_samples(config, i as usize))?;
    let mut t = Table::new(&["series", "frequency_hz", "rcs_dbsm", "cdf"]);
    for (s, samples) in all.iter().zip(per_series) {
        let cdf = empirical_cdf(&samples);
        let n = cdf.len();
        let rows = points.min(n);
        for k in 1..=rows {
            let (x, p) = cdf[(k * n).div_ceil(rows) - 1];
            t.push(vec![s.label.clone(), cell(s.frequency_hz), cell(x), cell(p)]);
        }
    }
    Ok(t)
}
