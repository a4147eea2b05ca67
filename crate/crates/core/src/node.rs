//! Intermediate nodes (targets, RIS panels): pruning, concatenation of the
//! two sub-links through the node response, and concatenated path loss.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ClusterRecord, DelayMode, EndpointKind, PropagationPath};
use crate::error::{Error, Result};
use crate::geometry::{wavelength, DirectionPair, Position3};
use crate::polarization::PolarizationMatrix;

/// Physical unit of a node response amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeUnits {
    /// Re-radiation gain, e.g. an RIS pattern.
    Dimensionless,
    /// Square root of a radar cross-section, meters.
    Meters,
}

/// Angle-dependent 2×2 re-radiation response. `incoming` points from the
/// node toward where the wave came from, `outgoing` toward where it goes.
pub trait NodeResponse: Send + Sync {
    fn position(&self) -> Position3;

    fn units(&self) -> NodeUnits;

    fn response(&self, incoming: DirectionPair, outgoing: DirectionPair) -> PolarizationMatrix;

    /// Responses for every (incoming, outgoing) pair, row-major by incoming.
    fn response_grid(&self, incoming: &[DirectionPair], outgoing: &[DirectionPair]) -> Vec<PolarizationMatrix> {
        incoming
            .par_iter()
            .flat_map_iter(|&i| outgoing.iter().map(move |&o| self.response(i, o)))
            .collect()
    }
}

/// Direction-independent node response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantNode {
    pub position: Position3,
    pub gain: PolarizationMatrix,
    pub units: NodeUnits,
}

impl NodeResponse for ConstantNode {
    fn position(&self) -> Position3 {
        self.position
    }

    fn units(&self) -> NodeUnits {
        self.units
    }

    fn response(&self, _: DirectionPair, _: DirectionPair) -> PolarizationMatrix {
        self.gain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    /// Relative to the strongest cluster, dB (≤ 0).
    pub threshold_db: f64,
    pub max_clusters: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            threshold_db: -25.0,
            max_clusters: 8,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_db <= 0.0) || self.max_clusters == 0 {
            return Err(Error::InvalidArgument(format!(
                "prune threshold {} dB must be <= 0 and max_clusters {} >= 1",
                self.threshold_db, self.max_clusters
            )));
        }
        Ok(())
    }
}

/// Keep clusters within the threshold of the strongest, then the strongest
/// `max_clusters` of those (lower id wins ties). Powers are not renormalized.
pub fn prune_clusters(realization: &ChannelRealization, config: &PruneConfig) -> ChannelRealization {
    let mut order: Vec<&ClusterRecord> = realization.clusters.iter().collect();
    if order.is_empty() {
        return realization.clone();
    }
    order.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.id.cmp(&b.id)));
    let floor = order[0].power * 10f64.powf(config.threshold_db / 10.0);
    let keep: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(rank, c)| *rank == 0 || c.power >= floor)
        .take(config.max_clusters.max(1))
        .map(|(_, c)| c.id)
        .collect();
    let mut out = realization.clone();
    out.clusters.retain(|c| keep.contains(&c.id));
    for link in &mut out.links {
        link.retain(|p| keep.contains(&p.cluster));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcatMode {
    /// Node treated as a point scatterer.
    #[default]
    ReferencePoint,
    /// Node response already sums per-element phases (RIS).
    CoherentElement,
}

/// Amplitude scale turning a node response into a dimensionless gain that
/// sits between two free-space sub-link losses.
pub fn node_unit_scale(units: NodeUnits, frequency_hz: f64) -> f64 {
    match units {
        NodeUnits::Dimensionless => 1.0,
        NodeUnits::Meters => (4.0 * std::f64::consts::PI).sqrt() / wavelength(frequency_hz),
    }
}

fn links_share_directions<'a>(mut links: impl Iterator<Item = &'a [PropagationPath]>) -> bool {
    let Some(first) = links.next() else {
        return true;
    };
    links.all(|l| {
        l.len() == first.len()
            && l.iter().zip(first).all(|(a, b)| a.arrival == b.arrival && a.departure == b.departure)
    })
}

fn open_vector(p: &PropagationPath) -> [Complex64; 2] {
    p.node_polarization.unwrap_or([p.amplitude, Complex64::new(0.0, 0.0)])
}

/// Combine every path of `sub_a` (Tx → node) with every path of `sub_b`
/// (node → Rx) through the node response: delays and Dopplers add,
/// amplitudes are `w_bᵀ·G·v_a`.
pub fn concatenate(
    sub_a: &ChannelRealization,
    node: &dyn NodeResponse,
    sub_b: &ChannelRealization,
    mode: ConcatMode,
) -> Result<ChannelRealization> {
    if sub_a.delay_mode != DelayMode::Absolute || sub_b.delay_mode != DelayMode::Absolute {
        return Err(Error::RelativeDelays);
    }
    if sub_a.rx.kind != EndpointKind::Node || sub_b.tx.kind != EndpointKind::Node {
        return Err(Error::NodeAnchorMismatch("sub-links must end and start at a node".into()));
    }
    let p = node.position();
    let tol = 1e-9 * (1.0 + p.norm());
    if sub_a.rx.position.distance(p) > tol || sub_b.tx.position.distance(p) > tol {
        return Err(Error::NodeAnchorMismatch(format!(
            "sub-link anchors {:?} / {:?} differ from node at {:?}",
            sub_a.rx.position, sub_b.tx.position, p
        )));
    }
    if sub_a.n_rx != 1 || sub_b.n_tx != 1 {
        return Err(Error::DimensionMismatch("a node is a single port on both sub-links".into()));
    }
    if mode == ConcatMode::CoherentElement && node.units() != NodeUnits::Dimensionless {
        return Err(Error::InvalidArgument(
            "coherent-element concatenation needs a dimensionless node response".into(),
        ));
    }
    let shared_grid = links_share_directions((0..sub_a.n_tx).map(|t| sub_a.link(t, 0)))
        && links_share_directions((0..sub_b.n_rx).map(|r| sub_b.link(0, r)));

    let scale = node_unit_scale(node.units(), sub_a.carrier_frequency);
    let pos_a = |id: usize| sub_a.clusters.iter().position(|c| c.id == id).unwrap_or(0);
    let pos_b = |id: usize| sub_b.clusters.iter().position(|c| c.id == id).unwrap_or(0);
    let nb = sub_b.clusters.len().max(1);
    let stride = sub_b.links.iter().flatten().map(|p| p.ray + 1).max().unwrap_or(1);

    let grid_for = |pa: &[PropagationPath], pb: &[PropagationPath]| {
        let inc: Vec<DirectionPair> = pa.iter().map(|p| p.arrival).collect();
        let out: Vec<DirectionPair> = pb.iter().map(|p| p.departure).collect();
        node.response_grid(&inc, &out)
    };
    let shared = if shared_grid && sub_a.n_tx > 0 && sub_b.n_rx > 0 {
        Some(grid_for(sub_a.link(0, 0), sub_b.link(0, 0)))
    } else {
        None
    };

    let n_tx = sub_a.n_tx;
    let n_rx = sub_b.n_rx;
    let links: Vec<Vec<PropagationPath>> = (0..n_tx * n_rx)
        .into_par_iter()
        .map(|idx| {
            let (t, r) = (idx / n_rx, idx % n_rx);
            let pa = sub_a.link(t, 0);
            let pb = sub_b.link(0, r);
            let local;
            let grid = match &shared {
                Some(g) => g,
                None => {
                    local = grid_for(pa, pb);
                    &local
                }
            };
            let mut out = Vec::with_capacity(pa.len() * pb.len());
            for (i, a) in pa.iter().enumerate() {
                let v = open_vector(a);
                for (j, b) in pb.iter().enumerate() {
                    let w = open_vector(b);
                    let g = grid[i * pb.len() + j];
                    out.push(PropagationPath {
                        cluster: pos_a(a.cluster) * nb + pos_b(b.cluster),
                        ray: a.ray * stride + b.ray,
                        delay: a.delay + b.delay,
                        amplitude: g.bilinear(w, v) * scale,
                        node_polarization: None,
                        departure: a.departure,
                        arrival: b.arrival,
                        doppler: a.doppler + b.doppler,
                    });
                }
            }
            out
        })
        .collect();

    let mut clusters = Vec::with_capacity(sub_a.clusters.len() * sub_b.clusters.len());
    for (ia, ca) in sub_a.clusters.iter().enumerate() {
        for (ib, cb) in sub_b.clusters.iter().enumerate() {
            clusters.push(ClusterRecord {
                id: ia * nb + ib,
                power: ca.power * cb.power,
                specular: ca.specular && cb.specular,
                shared_with: ca.shared_with.or(cb.shared_with),
                parents: Some((ca.id, cb.id)),
            });
        }
    }
    let mut large_scale = sub_a.large_scale;
    large_scale.los = sub_a.large_scale.los && sub_b.large_scale.los;
    large_scale.path_loss_db = sub_a.large_scale.path_loss_db + sub_b.large_scale.path_loss_db;
    large_scale.shadow_fading_db = sub_a.large_scale.shadow_fading_db + sub_b.large_scale.shadow_fading_db;
    large_scale.k_factor_db = None;
    let mut extensions = sub_a.extensions;
    extensions.sparsity |= sub_b.extensions.sparsity;
    extensions.near_field |= sub_b.extensions.near_field;
    extensions.sns |= sub_b.extensions.sns;
    Ok(ChannelRealization {
        label: format!("{}*{}", sub_a.label, sub_b.label),
        carrier_frequency: sub_a.carrier_frequency,
        delay_mode: DelayMode::Absolute,
        tx: sub_a.tx,
        rx: sub_b.rx,
        n_tx,
        n_rx,
        clusters,
        links,
        large_scale,
        seed: sub_a.seed.clone(),
        extensions,
    })
}

/// Sub-link losses combined through a node of cross-section `sigma_m2`:
/// `pl_a + pl_b − 10·log10(4πσ/λ²)`.
pub fn concatenated_path_loss(pl_a: f64, pl_b: f64, sigma_m2: f64, frequency_hz: f64) -> Result<f64> {
    if !(sigma_m2 > 0.0) {
        return Err(Error::InvalidArgument(format!("cross-section must be > 0, got {sigma_m2}")));
    }
    let lambda = wavelength(frequency_hz);
    Ok(pl_a + pl_b - 10.0 * (4.0 * std::f64::consts::PI * sigma_m2 / (lambda * lambda)).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::test_support::{path, realization};
    use crate::channel::Endpoint;
    use crate::random::SeedTree;
    use crate::scenario::fspl_db;
    use proptest::prelude::*;

    fn node_at(p: Position3) -> ConstantNode {
        ConstantNode {
            position: p,
            gain: PolarizationMatrix::identity(),
            units: NodeUnits::Dimensionless,
        }
    }

    fn sub(paths: Vec<PropagationPath>, node: Position3, toward_node: bool) -> ChannelRealization {
        let mut r = realization(paths, DelayMode::Absolute);
        if toward_node {
            r.rx = Endpoint::node(node);
        } else {
            r.tx = Endpoint::node(node);
        }
        r
    }

    #[test]
    fn single_pair_product() {
        let n = Position3::new(5.0, 5.0, 0.0);
        let a = sub(vec![path(0, 0, 100e-9, Complex64::new(0.5, 0.0))], n, true);
        let b = sub(vec![path(0, 0, 50e-9, Complex64::new(0.2, 0.0))], n, false);
        let c = concatenate(&a, &node_at(n), &b, ConcatMode::ReferencePoint).unwrap();
        assert_eq!(c.path_count(), 1);
        let p = c.link(0, 0)[0];
        assert!((p.delay - 150e-9).abs() < 1e-21);
        assert!((p.amplitude.norm() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn concatenation_rejects_bad_inputs() {
        let n = Position3::new(5.0, 5.0, 0.0);
        let a = sub(vec![path(0, 0, 1e-7, Complex64::new(0.5, 0.0))], n, true);
        let b = sub(vec![path(0, 0, 1e-7, Complex64::new(0.2, 0.0))], n, false);
        let mut rel = a.clone();
        rel.delay_mode = DelayMode::Relative;
        assert!(matches!(
            concatenate(&rel, &node_at(n), &b, ConcatMode::ReferencePoint),
            Err(Error::RelativeDelays)
        ));
        let elsewhere = node_at(Position3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            concatenate(&a, &elsewhere, &b, ConcatMode::ReferencePoint),
            Err(Error::NodeAnchorMismatch(_))
        ));
    }

    fn random_sub(seed: u64, clusters: usize, rays: usize, node: Position3, toward: bool) -> ChannelRealization {
        let mut s = SeedTree::new(seed).derive_stream("sub", 0);
        let mut paths = Vec::new();
        for c in 0..clusters {
            for r in 0..rays {
                let mut p = path(c, r, s.uniform(0.0, 1e-6), Complex64::new(s.normal(0.0, 1.0), s.normal(0.0, 1.0)));
                p.doppler = s.uniform(-100.0, 100.0);
                p.arrival = DirectionPair::new(s.uniform(-3.0, 3.0), s.uniform(0.1, 3.0));
                p.departure = DirectionPair::new(s.uniform(-3.0, 3.0), s.uniform(0.1, 3.0));
                p.node_polarization = Some([p.amplitude, Complex64::new(s.normal(0.0, 1.0), s.normal(0.0, 1.0))]);
                paths.push(p);
            }
        }
        sub(paths, node, toward)
    }

    struct Directional(Position3);

    impl NodeResponse for Directional {
        fn position(&self) -> Position3 {
            self.0
        }
        fn units(&self) -> NodeUnits {
            NodeUnits::Dimensionless
        }
        fn response(&self, i: DirectionPair, o: DirectionPair) -> PolarizationMatrix {
            PolarizationMatrix {
                theta_theta: Complex64::from_polar(1.0 + i.zenith, o.azimuth),
                theta_phi: Complex64::new(0.1 * i.azimuth, 0.0),
                phi_theta: Complex64::new(0.0, 0.2 * o.zenith),
                phi_phi: Complex64::from_polar(0.5, i.azimuth - o.azimuth),
            }
        }
    }

    #[test]
    fn path_count_is_product_and_matches_brute_force() {
        let n = Position3::new(1.0, 2.0, 3.0);
        let a = random_sub(1, 2, 20, n, true);
        let b = random_sub(2, 3, 20, n, false);
        let node = Directional(n);
        let c = concatenate(&a, &node, &b, ConcatMode::ReferencePoint).unwrap();
        assert_eq!(c.path_count(), 40 * 60);
        let mut k = 0;
        for pa in a.link(0, 0) {
            for pb in b.link(0, 0) {
                let g = node.response(pa.arrival, pb.departure);
                let v = pa.node_polarization.unwrap();
                let w = pb.node_polarization.unwrap();
                let mut expected = Complex64::new(0.0, 0.0);
                let m = [[g.theta_theta, g.theta_phi], [g.phi_theta, g.phi_phi]];
                for (x, wx) in w.iter().enumerate() {
                    for (y, vy) in v.iter().enumerate() {
                        expected += wx * m[x][y] * vy;
                    }
                }
                let got = c.link(0, 0)[k];
                assert!((got.amplitude - expected).norm() <= 1e-12 * expected.norm().max(1e-300));
                assert_eq!(got.delay, pa.delay + pb.delay);
                assert_eq!(got.doppler, pa.doppler + pb.doppler);
                k += 1;
            }
        }
    }

    #[test]
    fn prune_examples() {
        let mut r = realization(
            vec![
                path(0, 0, 0.0, Complex64::new(1.0, 0.0)),
                path(1, 0, 0.0, Complex64::new(1.0, 0.0)),
                path(2, 0, 0.0, Complex64::new(1.0, 0.0)),
            ],
            DelayMode::Absolute,
        );
        r.clusters[0].power = 1.0;
        r.clusters[1].power = 0.1;
        r.clusters[2].power = 0.001;
        let p = prune_clusters(&r, &PruneConfig::default());
        let ids: Vec<usize> = p.clusters.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(p.path_count(), 2);

        let ten = realization((0..10).map(|c| path(c, 0, 0.0, Complex64::new(1.0, 0.0))).collect(), DelayMode::Absolute);
        let cfg = PruneConfig {
            threshold_db: -25.0,
            max_clusters: 4,
        };
        let ids: Vec<usize> = prune_clusters(&ten, &cfg).clusters.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);

        let one = realization(vec![path(0, 0, 0.0, Complex64::new(1.0, 0.0))], DelayMode::Absolute);
        assert_eq!(prune_clusters(&one, &cfg), one);
    }

    #[test]
    fn radar_equation_oracle() {
        let f = 3e9;
        let lambda = wavelength(f);
        let (d1, d2) = (100.0, 100.0);
        let pl = concatenated_path_loss(fspl_db(d1, f), fspl_db(d2, f), 1.0, f).unwrap();
        let fourpi = 4.0 * std::f64::consts::PI;
        let oracle = 10.0 * (fourpi.powi(3) * d1 * d1 * d2 * d2 / (lambda * lambda)).log10();
        assert!((pl - oracle).abs() < 1e-9);
        let doubled = concatenated_path_loss(fspl_db(2.0 * d1, f), fspl_db(d2, f), 1.0, f).unwrap();
        assert!((doubled - pl - 6.0206).abs() < 1e-3);
        let big = concatenated_path_loss(fspl_db(d1, f), fspl_db(d2, f), 10.0, f).unwrap();
        assert!((big - pl + 10.0).abs() < 1e-9);
        assert!(concatenated_path_loss(1.0, 1.0, 0.0, f).is_err());
    }

    proptest! {
        #[test]
        fn concatenation_is_bilinear(alpha in 0.01f64..100.0, seed in 0u64..1000) {
            let n = Position3::new(1.0, 2.0, 3.0);
            let a = random_sub(seed, 2, 3, n, true);
            let b = random_sub(seed + 7, 2, 2, n, false);
            let node = Directional(n);
            let c = concatenate(&a, &node, &b, ConcatMode::ReferencePoint).unwrap();
            let mut a2 = a.clone();
            a2.scale_amplitudes(alpha);
            let c2 = concatenate(&a2, &node, &b, ConcatMode::ReferencePoint).unwrap();
            for (x, y) in c.links[0].iter().zip(&c2.links[0]) {
                prop_assert!((x.amplitude * alpha - y.amplitude).norm() <= 1e-9 * y.amplitude.norm().max(1e-12));
            }
        }

        #[test]
        fn pruning_bounds_cluster_count(k in 1usize..10, seed in 0u64..500) {
            let mut s = SeedTree::new(seed).derive_stream("p", 0);
            let mut r = realization((0..12).map(|c| path(c, 0, 0.0, Complex64::new(1.0, 0.0))).collect(), DelayMode::Absolute);
            for c in &mut r.clusters {
                c.power = s.uniform(0.0, 1.0);
            }
            let p = prune_clusters(&r, &PruneConfig { threshold_db: -25.0, max_clusters: k });
            prop_assert!(!p.clusters.is_empty() && p.clusters.len() <= k);
        }
    }
}
