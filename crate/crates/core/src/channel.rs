//! Path and channel-realization data model, plus tap-grid synthesis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DirectionPair, Position3};

/// Whether path delays are measured from the first arrival or from the
/// transmit instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    Relative,
    Absolute,
}

/// One resolvable ray between one tx element and one rx element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPath {
    pub cluster: usize,
    pub ray: usize,
    /// Seconds.
    pub delay: f64,
    /// Complex amplitude with patterns, polarization, array phase and path
    /// loss already applied.
    pub amplitude: Complex64,
    /// Open polarization vector on the intermediate-node side of a sub-link
    /// (`CPM·F_tx` toward a node, `F_rxᵀ·CPM` away from one). `amplitude`
    /// then holds its θ component.
    pub node_polarization: Option<[Complex64; 2]>,
    pub departure: DirectionPair,
    pub arrival: DirectionPair,
    /// Hz.
    pub doppler: f64,
}

impl PropagationPath {
    pub fn power(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Per-cluster bookkeeping kept alongside the paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: usize,
    /// Normalized generation power (pre path loss).
    pub power: f64,
    /// Carries the LOS specular ray.
    pub specular: bool,
    /// Communication cluster this one was bound to (ISAC shared clusters).
    pub shared_with: Option<usize>,
    /// Source clusters of a concatenated cluster (sub-link a, sub-link b).
    pub parents: Option<(usize, usize)>,
}

impl ClusterRecord {
    pub fn new(id: usize, power: f64) -> Self {
        Self {
            id,
            power,
            specular: false,
            shared_with: None,
            parents: None,
        }
    }
}

/// Large-scale parameters that produced a realization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LargeScaleRecord {
    pub los: bool,
    pub path_loss_db: f64,
    pub shadow_fading_db: f64,
    pub k_factor_db: Option<f64>,
    /// Seconds.
    pub delay_spread: f64,
    /// Radians.
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Array,
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub kind: EndpointKind,
    pub position: Position3,
}

impl Endpoint {
    pub fn array(position: Position3) -> Self {
        Self {
            kind: EndpointKind::Array,
            position,
        }
    }

    pub fn node(position: Position3) -> Self {
        Self {
            kind: EndpointKind::Node,
            position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub drop: u64,
    pub link: String,
}

/// Which model extensions were applied to a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtensionSet {
    pub sparsity: bool,
    pub sns: bool,
    pub near_field: bool,
    pub isac: bool,
    pub ris: bool,
}

impl ExtensionSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn any(&self) -> bool {
        self.sparsity || self.sns || self.near_field || self.isac || self.ris
    }
}

/// Full channel for one link of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub label: String,
    pub carrier_frequency: f64,
    pub delay_mode: DelayMode,
    pub tx: Endpoint,
    pub rx: Endpoint,
    pub n_tx: usize,
    pub n_rx: usize,
    pub clusters: Vec<ClusterRecord>,
    /// Paths per element pair, indexed `tx * n_rx + rx`.
    pub links: Vec<Vec<PropagationPath>>,
    pub large_scale: LargeScaleRecord,
    pub seed: SeedProvenance,
    pub extensions: ExtensionSet,
}

impl ChannelRealization {
    pub fn link_index(&self, tx: usize, rx: usize) -> usize {
        tx * self.n_rx + rx
    }

    pub fn link(&self, tx: usize, rx: usize) -> &[PropagationPath] {
        &self.links[self.link_index(tx, rx)]
    }

    pub fn path_count(&self) -> usize {
        self.links.iter().map(Vec::len).sum()
    }

    pub fn cluster(&self, id: usize) -> Option<&ClusterRecord> {
        self.clusters.iter().find(|c| c.id == id)
    }

    pub fn cluster_power_sum(&self) -> f64 {
        self.clusters.iter().map(|c| c.power).sum()
    }

    /// Σ |amplitude|² over one element pair.
    pub fn link_energy(&self, tx: usize, rx: usize) -> f64 {
        self.link(tx, rx).iter().map(PropagationPath::power).sum()
    }

    /// Multiply every amplitude (and open node polarization) by `factor`.
    pub fn scale_amplitudes(&mut self, factor: f64) {
        for path in self.links.iter_mut().flatten() {
            path.amplitude *= factor;
            if let Some(v) = path.node_polarization.as_mut() {
                v[0] *= factor;
                v[1] *= factor;
            }
        }
    }

    /// Apply a loss in dB as one scalar on all amplitudes.
    pub fn apply_loss_db(&mut self, loss_db: f64) {
        self.scale_amplitudes(10f64.powf(-loss_db / 20.0));
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.links.len() != self.n_tx * self.n_rx {
            return Err(Error::DimensionMismatch(format!(
                "{} links for {}x{} elements",
                self.links.len(),
                self.n_tx,
                self.n_rx
            )));
        }
        for p in self.links.iter().flatten() {
            if !(p.delay >= 0.0) || !p.amplitude.re.is_finite() || !p.amplitude.im.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "path (cluster {}, ray {}) has delay {} amplitude {}",
                    p.cluster, p.ray, p.delay, p.amplitude
                )));
            }
            if self.cluster(p.cluster).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "path refers to unknown cluster {}",
                    p.cluster
                )));
            }
        }
        Ok(())
    }
}

/// Complex taps on a (time, delay-bin) grid for every element pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TapGrid {
    pub n_tx: usize,
    pub n_rx: usize,
    pub times: Vec<f64>,
    pub num_taps: usize,
    pub bandwidth: f64,
    /// Per link, `times.len() * num_taps` taps, time-major.
    pub taps: Vec<Vec<Complex64>>,
    /// Paths whose delay bin fell beyond `num_taps`.
    pub dropped_paths: usize,
}

impl TapGrid {
    pub fn tap(&self, link: usize, time: usize, bin: usize) -> Complex64 {
        self.taps[link][time * self.num_taps + bin]
    }

    /// Σ |tap|² of one link at one sample time.
    pub fn energy(&self, link: usize, time: usize) -> f64 {
        let start = time * self.num_taps;
        self.taps[link][start..start + self.num_taps]
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    }
}

/// Place every path at its nearest delay bin (bin width `1/bandwidth`) and
/// rotate it by its Doppler at each sample time.
pub fn synthesize_cir_samples(
    realization: &ChannelRealization,
    sample_times: &[f64],
    bandwidth: f64,
    num_taps: usize,
) -> Result<TapGrid> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    if num_taps == 0 {
        return Err(Error::InvalidArgument("need at least one tap".into()));
    }
    if sample_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
    }
    let n_t = sample_times.len();
    let mut dropped = 0;
    let taps = realization
        .links
        .iter()
        .map(|paths| {
            let mut grid = vec![Complex64::new(0.0, 0.0); n_t * num_taps];
            for p in paths {
                let bin = (p.delay * bandwidth).round() as usize;
                if bin >= num_taps {
                    dropped += 1;
                    continue;
                }
                for (ti, &t) in sample_times.iter().enumerate() {
                    let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * p.doppler * t);
                    grid[ti * num_taps + bin] += p.amplitude * rot;
                }
            }
            grid
        })
        .collect();
    Ok(TapGrid {
        n_tx: realization.n_tx,
        n_rx: realization.n_rx,
        times: sample_times.to_vec(),
        num_taps,
        bandwidth,
        taps,
        dropped_paths: dropped,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn single_unit_path_gives_single_unit_tap() {
        let r = realization(vec![path(0, 0, 0.0, Complex64::new(1.0, 0.0))], DelayMode::Relative);
        let g = synthesize_cir_samples(&r, &[0.0], 100e6, 8).unwrap();
        assert_eq!(g.tap(0, 0, 0), Complex64::new(1.0, 0.0));
        assert!((g.energy(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn doppler_advances_phase_between_samples() {
        let mut p = path(0, 0, 0.0, Complex64::new(1.0, 0.0));
        p.doppler = 125.0;
        let r = realization(vec![p], DelayMode::Relative);
        let dt = 1e-4;
        let g = synthesize_cir_samples(&r, &[0.0, dt, 2.0 * dt], 100e6, 1).unwrap();
        let expected = 2.0 * std::f64::consts::PI * 125.0 * dt;
        for t in 1..3 {
            let step = (g.tap(0, t, 0) / g.tap(0, t - 1, 0)).arg();
            assert!((step - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn distinct_bins_keep_per_path_energy() {
        let a = path(0, 0, 0.0, Complex64::new(0.6, -0.2));
        let b = path(1, 0, 30e-9, Complex64::new(-0.1, 0.3));
        let r = realization(vec![a, b], DelayMode::Relative);
        let g = synthesize_cir_samples(&r, &[0.0], 100e6, 8).unwrap();
        assert!((g.tap(0, 0, 0).norm_sqr() - a.power()).abs() < 1e-15);
        assert!((g.tap(0, 0, 3).norm_sqr() - b.power()).abs() < 1e-15);
        let total = a.power() + b.power();
        assert!((g.energy(0, 0) - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn synthesis_is_linear_in_paths() {
        let a = vec![path(0, 0, 10e-9, Complex64::new(0.6, -0.2))];
        let b = vec![path(0, 1, 10e-9, Complex64::new(-0.1, 0.3)), path(1, 0, 45e-9, Complex64::new(0.2, 0.2))];
        let times = [0.0, 1e-3];
        let ga = synthesize_cir_samples(&realization(a.clone(), DelayMode::Relative), &times, 1e8, 8).unwrap();
        let gb = synthesize_cir_samples(&realization(b.clone(), DelayMode::Relative), &times, 1e8, 8).unwrap();
        let ab: Vec<_> = a.into_iter().chain(b).collect();
        let gab = synthesize_cir_samples(&realization(ab, DelayMode::Relative), &times, 1e8, 8).unwrap();
        for (i, t) in gab.taps[0].iter().enumerate() {
            assert_eq!(*t, ga.taps[0][i] + gb.taps[0][i]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let r = realization(vec![path(0, 0, 0.0, Complex64::new(1.0, 0.0))], DelayMode::Relative);
        assert!(synthesize_cir_samples(&r, &[0.0, 1.0, 0.5], 1e8, 4).is_err());
        assert!(synthesize_cir_samples(&r, &[0.0], 0.0, 4).is_err());
        assert!(synthesize_cir_samples(&r, &[0.0], 1e8, 0).is_err());
    }
}
