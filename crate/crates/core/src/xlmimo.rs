//! Extremely large arrays: cluster visibility over station regions and
//! spherical-wave phase corrections.

use serde::{Deserialize, Serialize};

use crate::antenna::AntennaArray;
use crate::channel::ChannelRealization;
use crate::engine::clusters::ClusterSet;
use crate::error::{Error, Result};
use crate::geometry::{DirectionPair, Position3, SPEED_OF_LIGHT};
use crate::random::Stream;

/// Which array the visibility map applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArraySide {
    Tx,
    #[default]
    Rx,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnSParams {
    /// Elements per station region.
    pub sr_length: usize,
    pub p_init: f64,
    pub p_stay_visible: f64,
    pub p_stay_hidden: f64,
    /// Raised-cosine ramp between neighbouring station regions.
    pub smoothing: bool,
    pub side: ArraySide,
}

impl Default for SnSParams {
    fn default() -> Self {
        Self {
            sr_length: 8,
            p_init: 0.8,
            p_stay_visible: 0.9,
            p_stay_hidden: 0.7,
            smoothing: false,
            side: ArraySide::Rx,
        }
    }
}

impl SnSParams {
    pub fn validate(&self) -> Result<()> {
        if self.sr_length == 0 {
            return Err(Error::InvalidArgument("sr_length must be >= 1".into()));
        }
        for (name, p) in [
            ("p_init", self.p_init),
            ("p_stay_visible", self.p_stay_visible),
            ("p_stay_hidden", self.p_stay_hidden),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    /// Long-run fraction of visible station regions. `None` for a chain
    /// with two absorbing states.
    pub fn stationary_visibility(&self) -> Option<f64> {
        let leave_v = 1.0 - self.p_stay_visible;
        let leave_h = 1.0 - self.p_stay_hidden;
        let d = leave_v + leave_h;
        (d > 0.0).then(|| leave_h / d)
    }
}

pub fn station_region_count(elements: usize, sr_length: usize) -> usize {
    elements.div_ceil(sr_length)
}

/// Binary visibility per (station region, cluster).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnSMap {
    pub n_sr: usize,
    pub n_clusters: usize,
    /// Row-major by station region.
    pub values: Vec<u8>,
}

impl SnSMap {
    pub fn filled(n_sr: usize, n_clusters: usize, visible: bool) -> Self {
        Self {
            n_sr,
            n_clusters,
            values: vec![visible as u8; n_sr * n_clusters],
        }
    }

    pub fn get(&self, sr: usize, cluster: usize) -> u8 {
        self.values[sr * self.n_clusters + cluster]
    }

    pub fn set(&mut self, sr: usize, cluster: usize, visible: bool) {
        self.values[sr * self.n_clusters + cluster] = visible as u8;
    }

    pub fn visible_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }
}

/// First region Bernoulli(p_init) per cluster, later regions follow the
/// two-state chain independently per cluster.
pub fn generate_sns_map(params: &SnSParams, n_sr: usize, n_clusters: usize, stream: &mut Stream) -> Result<SnSMap> {
    params.validate()?;
    if n_sr == 0 {
        return Err(Error::InvalidArgument("visibility map needs at least one station region".into()));
    }
    let mut map = SnSMap::filled(n_sr, n_clusters, false);
    for c in 0..n_clusters {
        map.set(0, c, stream.bernoulli(params.p_init));
    }
    for sr in 1..n_sr {
        for c in 0..n_clusters {
            let prev = map.get(sr - 1, c) == 1;
            let next = if prev {
                stream.bernoulli(params.p_stay_visible)
            } else {
                !stream.bernoulli(params.p_stay_hidden)
            };
            map.set(sr, c, next);
        }
    }
    Ok(map)
}

/// Visibility weight of `element` for cluster column `cluster`.
fn sns_weight(map: &SnSMap, element: usize, sr_length: usize, cluster: usize, smoothing: bool) -> f64 {
    let sr = element / sr_length;
    if !smoothing || map.n_sr == 1 {
        return map.get(sr, cluster) as f64;
    }
    let center = |s: usize| s as f64 * sr_length as f64 + (sr_length as f64 - 1.0) / 2.0;
    let x = element as f64;
    let (a, b) = if x < center(sr) {
        (sr.saturating_sub(1), sr)
    } else {
        (sr, (sr + 1).min(map.n_sr - 1))
    };
    if a == b {
        return map.get(sr, cluster) as f64;
    }
    let t = ((x - center(a)) / (center(b) - center(a))).clamp(0.0, 1.0);
    let w = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
    map.get(a, cluster) as f64 * w + map.get(b, cluster) as f64 * (1.0 - w)
}

/// Zero (or, with smoothing, taper) cluster contributions on the receive
/// array according to `map`. Cluster columns are cluster ids.
pub fn apply_sns(realization: &ChannelRealization, map: &SnSMap, sr_length: usize) -> Result<ChannelRealization> {
    apply_sns_with(realization, map, sr_length, ArraySide::Rx, false)
}

/// [`apply_sns`] for an explicit array side. `Both` applies the same map on
/// both arrays.
pub fn apply_sns_with(
    realization: &ChannelRealization,
    map: &SnSMap,
    sr_length: usize,
    side: ArraySide,
    smoothing: bool,
) -> Result<ChannelRealization> {
    if sr_length == 0 {
        return Err(Error::InvalidArgument("sr_length must be >= 1".into()));
    }
    let check = |n: usize, what: &str| {
        let need = station_region_count(n, sr_length);
        if map.n_sr != need {
            return Err(Error::DimensionMismatch(format!(
                "{what} array has {n} elements ({need} station regions), map has {}",
                map.n_sr
            )));
        }
        Ok(())
    };
    if matches!(side, ArraySide::Rx | ArraySide::Both) {
        check(realization.n_rx, "rx")?;
    }
    if matches!(side, ArraySide::Tx | ArraySide::Both) {
        check(realization.n_tx, "tx")?;
    }
    if let Some(c) = realization.clusters.iter().find(|c| c.id >= map.n_clusters) {
        return Err(Error::DimensionMismatch(format!(
            "cluster {} not covered by a {}-cluster map",
            c.id, map.n_clusters
        )));
    }
    let mut out = realization.clone();
    for t in 0..out.n_tx {
        for r in 0..out.n_rx {
            let idx = out.link_index(t, r);
            for p in &mut out.links[idx] {
                let mut w = 1.0;
                if matches!(side, ArraySide::Rx | ArraySide::Both) {
                    w *= sns_weight(map, r, sr_length, p.cluster, smoothing);
                }
                if matches!(side, ArraySide::Tx | ArraySide::Both) {
                    w *= sns_weight(map, t, sr_length, p.cluster, smoothing);
                }
                if w != 1.0 {
                    p.amplitude *= w;
                    if let Some(v) = p.node_polarization.as_mut() {
                        v[0] *= w;
                        v[1] *= w;
                    }
                }
            }
        }
    }
    out.extensions.sns = true;
    Ok(out)
}

/// First- and last-bounce scatterer positions per cluster, in cluster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererAnchors {
    pub fbs: Vec<Position3>,
    pub lbs: Vec<Position3>,
}

impl ScattererAnchors {
    /// Total bounce-path length of cluster `n`.
    pub fn path_length(&self, n: usize, tx: Position3, rx: Position3) -> f64 {
        tx.distance(self.fbs[n]) + self.fbs[n].distance(self.lbs[n]) + self.lbs[n].distance(rx)
    }
}

/// Place anchors so that tx → FBS → LBS → rx has length `c·τ_abs`, with the
/// FBS on the cluster departure ray and the LBS on the arrival ray. The
/// first leg is `f·L` with `f` uniform in `split`.
pub fn place_scatterer_anchors(
    clusters: &ClusterSet,
    tx: Position3,
    rx: Position3,
    split: (f64, f64),
    stream: &mut Stream,
) -> ScattererAnchors {
    let d_los = tx.distance(rx);
    let mut fbs = Vec::with_capacity(clusters.clusters.len());
    let mut lbs = Vec::with_capacity(clusters.clusters.len());
    for c in &clusters.clusters {
        let f = stream.uniform(split.0, split.1);
        let length = d_los + SPEED_OF_LIGHT * c.delay;
        let u = DirectionPair::from_degrees(c.aod, c.zod).unit_vector();
        let v = DirectionPair::from_degrees(c.aoa, c.zoa).unit_vector();
        let (a, b) = if c.specular || length - d_los <= 1e-9 * d_los.max(1.0) {
            let p = tx + (rx - tx) * f;
            (p, p)
        } else {
            place_pair(tx, rx, u, v, length, f)
        };
        fbs.push(a);
        lbs.push(b);
    }
    ScattererAnchors { fbs, lbs }
}

fn place_pair(tx: Position3, rx: Position3, u: Position3, v: Position3, length: f64, f: f64) -> (Position3, Position3) {
    // g(d1) = L - d1 - |tx + d1 u - rx| is non-increasing with g(0) > 0
    let g = |d1: f64| length - d1 - (tx + u * d1 - rx).norm();
    let mut d1 = f * length;
    if g(d1) <= 0.0 {
        let (mut lo, mut hi) = (0.0, length);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d1 = d1.min(0.5 * lo);
    }
    let first = tx + u * d1;
    let q = first - rx;
    let rest = length - d1;
    let denom = 2.0 * (rest - v.dot(q));
    if denom.abs() <= 1e-9 * length {
        return (first, first);
    }
    let d3 = ((rest * rest - q.dot(q)) / denom).max(0.0);
    (first, rx + v * d3)
}

/// Spherical minus planar phase for an element at `element`, array
/// reference `reference`, source `source`, wavenumber `k`.
pub fn nearfield_phase(element: Position3, reference: Position3, source: Position3, k: f64) -> f64 {
    let to_src = source - reference;
    let r = to_src.norm();
    let u = to_src * (1.0 / r);
    k * (element.distance(source) - (r - (element - reference).dot(u)))
}

/// Per-element near-field phase offsets A (radians) for a point source.
pub fn nearfield_phase_offsets(array: &AntennaArray, source: Position3, wavelength: f64) -> Result<Vec<f64>> {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let reference = array.position;
    if reference.distance(source) <= 1e-12 {
        return Err(Error::CoincidentPositions("source at array reference".into()));
    }
    (0..array.len())
        .map(|e| {
            let p = array.element_position(e);
            if p.distance(source) <= 1e-12 {
                return Err(Error::CoincidentPositions(format!("source on element {e}")));
            }
            Ok(nearfield_phase(p, reference, source, k))
        })
        .collect()
}

/// Rayleigh distance 2D²/λ.
pub fn rayleigh_distance(array: &AntennaArray, wavelength: f64) -> f64 {
    2.0 * array.aperture().powi(2) / wavelength
}
