//! Sensing targets: RCS model, bistatic Doppler, shared clusters and the
//! Tx → target → Rx channel.

use serde::{Deserialize, Serialize};

use crate::channel::DelayMode;
use crate::engine::{
    apply_link_ick, draw_link, finish_link, ClusterSet, LinkDraw, LinkEnd, LinkSpec, NodeLinks, PreparedScenario,
};
use crate::error::{Error, Result};
use crate::geometry::{wavelength, wrap_angle, DirectionPair, Position3};
use crate::node::{concatenate, concatenated_path_loss, prune_clusters, ConcatMode, NodeResponse, NodeUnits};
use crate::polarization::PolarizationMatrix;
use crate::random::{SeedTree, Stream};

/// Angle-dependent part B1 of the RCS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularProfile {
    Isotropic,
    /// Periodic piecewise-linear profile over target-frame azimuth,
    /// rescaled so its mean over the circle is 1.
    AzimuthTable { azimuth_deg: Vec<f64>, gain: Vec<f64> },
}

impl AngularProfile {
    pub fn validate(&self) -> Result<()> {
        if let AngularProfile::AzimuthTable { azimuth_deg, gain } = self {
            if azimuth_deg.is_empty() || azimuth_deg.len() != gain.len() {
                return Err(Error::InvalidArgument("B1 table needs matching, non-empty columns".into()));
            }
            if azimuth_deg.windows(2).any(|w| !(w[1] > w[0]))
                || azimuth_deg[0] < 0.0
                || *azimuth_deg.last().unwrap() >= 360.0
            {
                return Err(Error::InvalidArgument(
                    "B1 azimuths must increase strictly within [0, 360)".into(),
                ));
            }
            if gain.iter().any(|g| !(*g >= 0.0)) || gain.iter().all(|g| *g == 0.0) {
                return Err(Error::InvalidArgument("B1 gains must be >= 0 and not all zero".into()));
            }
        }
        Ok(())
    }

    fn raw(azimuth_deg: &[f64], gain: &[f64], az: f64) -> f64 {
        let n = azimuth_deg.len();
        if n == 1 {
            return gain[0];
        }
        let a = az.rem_euclid(360.0);
        let i = azimuth_deg.partition_point(|&x| x <= a);
        // neighbours with wrap-around
        let (lo, hi) = if i == 0 || i == n { (n - 1, 0) } else { (i - 1, i) };
        let x0 = azimuth_deg[lo];
        let mut x1 = azimuth_deg[hi];
        let mut x = a;
        if x1 <= x0 {
            x1 += 360.0;
            if x < x0 {
                x += 360.0;
            }
        }
        let t = (x - x0) / (x1 - x0);
        gain[lo] + t * (gain[hi] - gain[lo])
    }

    /// Mean of the raw piecewise-linear profile over the circle.
    fn raw_mean(azimuth_deg: &[f64], gain: &[f64]) -> f64 {
        let n = azimuth_deg.len();
        if n == 1 {
            return gain[0];
        }
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                let span = (azimuth_deg[j] - azimuth_deg[i]).rem_euclid(360.0);
                let span = if j == 0 && span == 0.0 { 360.0 } else { span };
                0.5 * (gain[i] + gain[j]) * span
            })
            .sum::<f64>()
            / 360.0
    }

    /// Normalized profile value at a target-frame azimuth, degrees.
    pub fn evaluate(&self, azimuth_deg_query: f64) -> f64 {
        match self {
            AngularProfile::Isotropic => 1.0,
            AngularProfile::AzimuthTable { azimuth_deg, gain } => {
                Self::raw(azimuth_deg, gain, azimuth_deg_query) / Self::raw_mean(azimuth_deg, gain)
            }
        }
    }
}

/// Statistical part B2 of the RCS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fluctuation {
    Degenerate,
    /// Zero-mean Gaussian in dB.
    GaussianDb { std_db: f64 },
}

/// `σ = A · B1(Ω) · B2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsModel {
    /// Mean reflected power intensity, dBsm.
    pub a_dbsm: f64,
    #[serde(default = "isotropic")]
    pub b1: AngularProfile,
    #[serde(default = "degenerate")]
    pub b2: Fluctuation,
    /// Target cross-polar ratio, dB; co-polar only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpr_db: Option<f64>,
}

fn isotropic() -> AngularProfile {
    AngularProfile::Isotropic
}

fn degenerate() -> Fluctuation {
    Fluctuation::Degenerate
}

impl RcsModel {
    pub fn validate(&self) -> Result<()> {
        if !self.a_dbsm.is_finite() {
            return Err(Error::InvalidArgument("A must be finite".into()));
        }
        if let Fluctuation::GaussianDb { std_db } = self.b2 {
            if !(std_db >= 0.0) {
                return Err(Error::InvalidArgument(format!("B2 std {std_db} must be >= 0")));
            }
        }
        self.b1.validate()
    }

    pub fn a_linear(&self) -> f64 {
        10f64.powf(self.a_dbsm / 10.0)
    }

    /// One linear B2 draw.
    pub fn draw_fluctuation(&self, stream: &mut Stream) -> f64 {
        match self.b2 {
            Fluctuation::Degenerate => 1.0,
            Fluctuation::GaussianDb { std_db } => 10f64.powf(stream.normal(0.0, std_db) / 10.0),
        }
    }

    /// Target-frame azimuth used by B1: the bistatic bisector of the two
    /// target-centred directions.
    pub fn aspect_azimuth_deg(incoming: DirectionPair, outgoing: DirectionPair, yaw_deg: f64) -> f64 {
        let b = incoming.unit_vector() + outgoing.unit_vector();
        let v = if b.norm() < 1e-9 { incoming.unit_vector() } else { b };
        (wrap_angle(v.y.atan2(v.x) - yaw_deg.to_radians())).to_degrees()
    }

    /// Cross-section in m² for a given B2 draw.
    pub fn sigma(&self, incoming: DirectionPair, outgoing: DirectionPair, yaw_deg: f64, b2: f64) -> f64 {
        self.a_linear() * self.b1.evaluate(Self::aspect_azimuth_deg(incoming, outgoing, yaw_deg)) * b2
    }
}

/// Draw B2 (and cross-polar phases) and return `√σ` on the Jones matrix.
pub fn rcs_gain(
    model: &RcsModel,
    incoming: DirectionPair,
    outgoing: DirectionPair,
    stream: &mut Stream,
) -> PolarizationMatrix {
    TargetResponse::draw(model.clone(), Position3::ORIGIN, 0.0, stream).response(incoming, outgoing)
}

/// A target with its per-drop fluctuation fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetResponse {
    pub model: RcsModel,
    pub position: Position3,
    pub yaw_deg: f64,
    pub b2: f64,
    pub polarization: PolarizationMatrix,
}

impl TargetResponse {
    pub fn draw(model: RcsModel, position: Position3, yaw_deg: f64, stream: &mut Stream) -> Self {
        let b2 = model.draw_fluctuation(stream);
        let polarization = match model.xpr_db {
            None => PolarizationMatrix::identity(),
            Some(xpr) => {
                let cross = 10f64.powf(-xpr / 20.0);
                let mut phase = || stream.uniform(-std::f64::consts::PI, std::f64::consts::PI);
                let (a, b) = (phase(), phase());
                PolarizationMatrix {
                    theta_phi: num_complex::Complex64::from_polar(cross, a),
                    phi_theta: num_complex::Complex64::from_polar(cross, b),
                    ..PolarizationMatrix::identity()
                }
            }
        };
        Self {
            model,
            position,
            yaw_deg,
            b2,
            polarization,
        }
    }

    pub fn sigma(&self, incoming: DirectionPair, outgoing: DirectionPair) -> f64 {
        self.model.sigma(incoming, outgoing, self.yaw_deg, self.b2)
    }
}

impl NodeResponse for TargetResponse {
    fn position(&self) -> Position3 {
        self.position
    }

    fn units(&self) -> NodeUnits {
        NodeUnits::Meters
    }

    fn response(&self, incoming: DirectionPair, outgoing: DirectionPair) -> PolarizationMatrix {
        self.polarization
            .scale(num_complex::Complex64::new(self.sigma(incoming, outgoing).sqrt(), 0.0))
    }
}

/// Bistatic Doppler `−v·(û_tx→tar + û_rx→tar)/λ`.
pub fn target_doppler(
    velocity: Position3,
    tx: Position3,
    rx: Position3,
    target: Position3,
    wavelength_m: f64,
) -> Result<f64> {
    let u_tx = (target - tx)
        .normalized()
        .ok_or_else(|| Error::CoincidentPositions("target on the transmitter".into()))?;
    let u_rx = (target - rx)
        .normalized()
        .ok_or_else(|| Error::CoincidentPositions("target on the receiver".into()))?;
    Ok(-velocity.dot(u_tx + u_rx) / wavelength_m)
}

/// Which sensing sub-links are bound to communication clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindSides {
    #[default]
    Both,
    TxTarget,
    TargetRx,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharedClusterPolicy {
    pub ns: usize,
    pub delay_jitter_s: f64,
    pub angle_jitter_deg: f64,
    pub sides: BindSides,
}

impl Default for SharedClusterPolicy {
    fn default() -> Self {
        Self {
            ns: 2,
            delay_jitter_s: 0.0,
            angle_jitter_deg: 0.0,
            sides: BindSides::Both,
        }
    }
}

/// The end of a sensing sub-link that faces the communication array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharedSide {
    /// Tx → target: copy delay and departure angles.
    Departure,
    /// Target → Rx: copy delay and arrival angles.
    Arrival,
}

fn strongest_free(set: &ClusterSet, taken: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..set.clusters.len())
        .filter(|&i| !set.clusters[i].specular && !taken.contains(&i))
        .collect();
    idx.sort_by(|&a, &b| set.clusters[b].power.total_cmp(&set.clusters[a].power).then(a.cmp(&b)));
    idx
}

/// Copy delay and the facing angles of the `ns` strongest communication
/// clusters onto sensing clusters (plus jitter). Returns `(sensing id,
/// communication id)` pairs. LOS clusters are never shared.
pub fn bind_shared_clusters(
    comm: &ClusterSet,
    sensing: &mut ClusterSet,
    policy: &SharedClusterPolicy,
    side: SharedSide,
    stream: &mut Stream,
) -> Result<Vec<(usize, usize)>> {
    if policy.ns == 0 {
        return Ok(Vec::new());
    }
    let comm_order = strongest_free(comm, &[]);
    let available = comm_order.len().min(strongest_free(sensing, &[]).len());
    if policy.ns > available {
        return Err(Error::InvalidArgument(format!(
            "{} shared clusters requested, only {available} available",
            policy.ns
        )));
    }
    let mut taken = Vec::with_capacity(policy.ns);
    let mut map = Vec::with_capacity(policy.ns);
    for &ci in comm_order.iter().take(policy.ns) {
        let si = strongest_free(sensing, &taken)[0];
        taken.push(si);
        let src = &comm.clusters[ci];
        let dt = stream.normal(0.0, policy.delay_jitter_s);
        let da = stream.normal(0.0, policy.angle_jitter_deg);
        let dz = stream.normal(0.0, policy.angle_jitter_deg);
        let dst = &mut sensing.clusters[si];
        dst.delay = (src.delay + dt).max(0.0);
        let (new_az, new_ze) = match side {
            SharedSide::Departure => (src.aod + da, src.zod + dz),
            SharedSide::Arrival => (src.aoa + da, src.zoa + dz),
        };
        let (old_az, old_ze) = match side {
            SharedSide::Departure => (dst.aod, dst.zod),
            SharedSide::Arrival => (dst.aoa, dst.zoa),
        };
        let (shift_az, shift_ze) = (new_az - old_az, new_ze - old_ze);
        match side {
            SharedSide::Departure => {
                dst.aod = new_az;
                dst.zod = new_ze;
                for r in &mut dst.rays {
                    r.aod += shift_az;
                    r.zod += shift_ze;
                }
            }
            SharedSide::Arrival => {
                dst.aoa = new_az;
                dst.zoa = new_ze;
                for r in &mut dst.rays {
                    r.aoa += shift_az;
                    r.zoa += shift_ze;
                }
            }
        }
        dst.shared_with = Some(src.id);
        map.push((dst.id, src.id));
    }
    Ok(map)
}

/// Sensing target as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub position: Position3,
    #[serde(default)]
    pub velocity: Position3,
    pub rcs: RcsModel,
    /// Bounding box, meters (metadata).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent_m: Option<[f64; 3]>,
    /// Heading of the target frame used by B1, degrees.
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub shared: SharedClusterPolicy,
}

impl TargetConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.velocity.is_finite() || !self.yaw_deg.is_finite() {
            return Err(Error::InvalidArgument("target position, velocity and yaw must be finite".into()));
        }
        self.rcs.validate()
    }
}

/// Tx → target and target → Rx sub-links, bound to the communication
/// clusters, pruned and concatenated through the target RCS.
pub fn build_sensing_channel(
    prep: &PreparedScenario,
    target: &TargetConfig,
    comm: Option<&LinkDraw>,
    seeds: &SeedTree,
) -> Result<NodeLinks> {
    let cfg = &prep.config;
    let f = cfg.carrier_frequency_hz;
    let tx_pos = prep.tx.position;
    let rx_pos = prep.rx.position;
    let spec_a = LinkSpec {
        label: "tx_target",
        scenario: cfg.scenario,
        tables: &prep.tables,
        frequency: f,
        tx: LinkEnd::Array {
            array: &prep.tx,
            velocity: cfg.tx.velocity,
        },
        rx: LinkEnd::Node {
            position: target.position,
        },
        options: cfg.link,
        delay_mode: DelayMode::Absolute,
        eliminate_weak: false,
    };
    let spec_b = LinkSpec {
        label: "target_rx",
        tx: LinkEnd::Node {
            position: target.position,
        },
        rx: LinkEnd::Array {
            array: &prep.rx,
            velocity: cfg.rx.velocity,
        },
        ..spec_a
    };
    let ext = prep.sublink_extensions();
    let seeds_a = seeds.child("tx_target", 0);
    let seeds_b = seeds.child("target_rx", 0);
    let mut draw_a = draw_link(&spec_a, &seeds_a).map_err(Error::in_stage("draw"))?;
    let mut draw_b = draw_link(&spec_b, &seeds_b).map_err(Error::in_stage("draw"))?;
    let mut ick = false;
    if ext.ick {
        ick |= apply_link_ick(&mut draw_a, &mut seeds_a.derive_stream("ick", 0)).map_err(Error::in_stage("ick"))?;
        ick |= apply_link_ick(&mut draw_b, &mut seeds_b.derive_stream("ick", 0)).map_err(Error::in_stage("ick"))?;
    }
    if let (Some(comm), false) = (comm, cfg.link.los_only) {
        let policy = &target.shared;
        if matches!(policy.sides, BindSides::Both | BindSides::TxTarget) {
            bind_shared_clusters(
                &comm.clusters,
                &mut draw_a.clusters,
                policy,
                SharedSide::Departure,
                &mut seeds.derive_stream("shared", 0),
            )
            .map_err(Error::in_stage("binding"))?;
        }
        if matches!(policy.sides, BindSides::Both | BindSides::TargetRx) {
            bind_shared_clusters(
                &comm.clusters,
                &mut draw_b.clusters,
                policy,
                SharedSide::Arrival,
                &mut seeds.derive_stream("shared", 1),
            )
            .map_err(Error::in_stage("binding"))?;
        }
    }
    let mut first = finish_link(&spec_a, &draw_a, &ext, &seeds_a)?;
    let mut second = finish_link(&spec_b, &draw_b, &ext, &seeds_b)?;
    first.extensions.sparsity = ick;
    second.extensions.sparsity = ick;
    let pa = prune_clusters(&first, &cfg.prune);
    let pb = prune_clusters(&second, &cfg.prune);
    let response = TargetResponse::draw(
        target.rcs.clone(),
        target.position,
        target.yaw_deg,
        &mut seeds.derive_stream("rcs", 0),
    );
    let mut concatenated =
        concatenate(&pa, &response, &pb, ConcatMode::ReferencePoint).map_err(Error::in_stage("concatenate"))?;
    let fd = target_doppler(target.velocity, tx_pos, rx_pos, target.position, wavelength(f))?;
    for p in concatenated.links.iter_mut().flatten() {
        p.doppler += fd;
    }
    concatenated.label = "sensing".into();
    concatenated.large_scale.path_loss_db = concatenated_path_loss(
        first.large_scale.path_loss_db,
        second.large_scale.path_loss_db,
        target.rcs.a_linear(),
        f,
    )?;
    concatenated.extensions.isac = true;
    first.extensions.isac = true;
    second.extensions.isac = true;
    Ok(NodeLinks {
        first,
        second,
        concatenated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Cluster, Ray};

    fn stream(i: u64) -> Stream {
        SeedTree::new(21).derive_stream("isac", i)
    }

    fn dir(az: f64) -> DirectionPair {
        DirectionPair::from_degrees(az, 90.0)
    }

    #[test]
    fn unit_rcs_gives_unit_amplitude() {
        let m = RcsModel {
            a_dbsm: 0.0,
            b1: AngularProfile::Isotropic,
            b2: Fluctuation::Degenerate,
            xpr_db: None,
        };
        let g = rcs_gain(&m, dir(10.0), dir(50.0), &mut stream(0));
        assert!((g.theta_theta.re - 1.0).abs() < 1e-15);
        assert!((g.phi_phi.re - 1.0).abs() < 1e-15);
        assert_eq!(g.theta_phi.norm(), 0.0);
    }

    #[test]
    fn gaussian_db_moments() {
        let m = RcsModel {
            a_dbsm: -12.81,
            b1: AngularProfile::Isotropic,
            b2: Fluctuation::GaussianDb { std_db: 3.74 },
            xpr_db: None,
        };
        let mut s = stream(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let g = rcs_gain(&m, dir(0.0), dir(0.0), &mut s);
                10.0 * g.theta_theta.norm_sqr().log10()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean + 12.81).abs() < 0.05, "{mean}");
        assert!((std - 3.74).abs() < 0.05, "{std}");
    }

    fn four_sided() -> AngularProfile {
        AngularProfile::AzimuthTable {
            azimuth_deg: (0..8).map(|i| i as f64 * 45.0).collect(),
            gain: vec![4.0, 1.0, 4.0, 1.0, 4.0, 1.0, 4.0, 1.0],
        }
    }

    #[test]
    fn azimuth_table_is_normalized_and_peaks_at_sides() {
        let p = four_sided();
        p.validate().unwrap();
        let n = 3600;
        let mean = (0..n).map(|i| p.evaluate(i as f64 * 0.1)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 1e-6, "{mean}");
        let vals: Vec<f64> = (0..360).map(|a| p.evaluate(a as f64)).collect();
        let peaks: Vec<usize> = (0..360)
            .filter(|&i| vals[i] > vals[(i + 359) % 360] && vals[i] >= vals[(i + 1) % 360])
            .collect();
        assert_eq!(peaks, vec![0, 90, 180, 270]);
    }

    #[test]
    fn monostatic_b1_follows_aspect() {
        let m = RcsModel {
            a_dbsm: 0.0,
            b1: four_sided(),
            b2: Fluctuation::Degenerate,
            xpr_db: None,
        };
        let side = m.sigma(dir(90.0), dir(90.0), 0.0, 1.0);
        let corner = m.sigma(dir(45.0), dir(45.0), 0.0, 1.0);
        assert!(side > corner);
        let yawed = m.sigma(dir(135.0), dir(135.0), 45.0, 1.0);
        assert!((yawed - side).abs() < 1e-12);
    }

    #[test]
    fn doppler_cases() {
        let lambda = 0.1;
        let v = 10.0;
        let radar = Position3::ORIGIN;
        let tar = Position3::new(100.0, 0.0, 0.0);
        let fd = target_doppler(Position3::new(-v, 0.0, 0.0), radar, radar, tar, lambda).unwrap();
        assert!((fd - 2.0 * v / lambda).abs() < 1e-9);
        let fd = target_doppler(Position3::new(0.0, 0.0, v), radar, radar, tar, lambda).unwrap();
        assert!(fd.abs() < 1e-12);
        // tx along -x of the target, rx along -y: velocity along the tx leg
        let tx = Position3::new(0.0, 0.0, 0.0);
        let rx = Position3::new(100.0, -100.0, 0.0);
        let fd = target_doppler(Position3::new(-v, 0.0, 0.0), tx, rx, tar, lambda).unwrap();
        assert!((fd - v / lambda).abs() < 1e-9);
        assert!(target_doppler(Position3::ORIGIN, tar, radar, tar, lambda).is_err());
    }

    fn cluster_set(delays: &[f64], powers: &[f64]) -> ClusterSet {
        ClusterSet {
            clusters: delays
                .iter()
                .zip(powers)
                .enumerate()
                .map(|(i, (&d, &p))| Cluster {
                    id: i,
                    delay: d,
                    power: p,
                    aod: 10.0 * i as f64,
                    aoa: -10.0 * i as f64,
                    zod: 90.0,
                    zoa: 90.0,
                    rays: vec![Ray {
                        id: 0,
                        power: p,
                        aod: 10.0 * i as f64 + 1.0,
                        aoa: -10.0 * i as f64 + 1.0,
                        zod: 91.0,
                        zoa: 89.0,
                        xpr_db: 8.0,
                        phases: [0.0; 4],
                        specular: false,
                    }],
                    specular: false,
                    shared_with: None,
                })
                .collect(),
            los: false,
            k_db: None,
        }
    }

    #[test]
    fn binding_without_jitter_copies_exactly() {
        let comm = cluster_set(&[0.0, 10e-9, 20e-9, 40e-9], &[0.4, 0.3, 0.2, 0.1]);
        let mut sens = cluster_set(&[0.0, 5e-9, 7e-9, 9e-9, 50e-9], &[0.1, 0.5, 0.2, 0.15, 0.05]);
        let before = sens.clone();
        let policy = SharedClusterPolicy {
            ns: 3,
            ..Default::default()
        };
        let map = bind_shared_clusters(&comm, &mut sens, &policy, SharedSide::Arrival, &mut stream(2)).unwrap();
        assert_eq!(map, vec![(1, 0), (2, 1), (3, 2)]);
        for &(s, c) in &map {
            assert_eq!(sens.clusters[s].delay, comm.clusters[c].delay);
            assert_eq!(sens.clusters[s].aoa, comm.clusters[c].aoa);
            assert_eq!(sens.clusters[s].power, before.clusters[s].power);
            assert_eq!(sens.clusters[s].shared_with, Some(c));
            // rays keep their offset from the center
            let off = before.clusters[s].rays[0].aoa - before.clusters[s].aoa;
            assert!((sens.clusters[s].rays[0].aoa - sens.clusters[s].aoa - off).abs() < 1e-12);
        }
        let zero = SharedClusterPolicy {
            ns: 0,
            ..Default::default()
        };
        let mut untouched = before.clone();
        bind_shared_clusters(&comm, &mut untouched, &zero, SharedSide::Arrival, &mut stream(3)).unwrap();
        assert_eq!(untouched, before);
        let too_many = SharedClusterPolicy {
            ns: 5,
            ..Default::default()
        };
        assert!(bind_shared_clusters(&comm, &mut untouched, &too_many, SharedSide::Arrival, &mut stream(3)).is_err());
    }

    #[test]
    fn delay_jitter_is_half_normal() {
        let comm = cluster_set(&[1e-6, 2e-6], &[0.6, 0.4]);
        let policy = SharedClusterPolicy {
            ns: 1,
            delay_jitter_s: 5e-9,
            ..Default::default()
        };
        let mut s = stream(4);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let mut sens = cluster_set(&[0.0, 3e-7], &[0.7, 0.3]);
            let map = bind_shared_clusters(&comm, &mut sens, &policy, SharedSide::Departure, &mut s).unwrap();
            sum += (sens.clusters[map[0].0].delay - 1e-6).abs();
        }
        let expected = 5e-9 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((sum / n as f64 - expected).abs() < 0.05 * expected);
    }
}
