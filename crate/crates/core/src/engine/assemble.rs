//! Turning a cluster set into per-element-pair propagation paths.

use num_complex::Complex64;

use crate::antenna::AntennaArray;
use crate::channel::{
    ChannelRealization, ClusterRecord, DelayMode, Endpoint, ExtensionSet, LargeScaleRecord, PropagationPath,
    SeedProvenance,
};
use crate::error::{Error, Result};
use crate::geometry::{wavelength, DirectionPair, Position3, SPEED_OF_LIGHT};
use crate::polarization::PolarizationMatrix;
use crate::xlmimo::{nearfield_phase, ScattererAnchors};

use super::clusters::{ClusterSet, Ray};

/// One end of a link: an antenna array, or an intermediate node whose
/// response is applied later by concatenation.
#[derive(Debug, Clone, Copy)]
pub enum LinkEnd<'a> {
    Array {
        array: &'a AntennaArray,
        velocity: Position3,
    },
    Node {
        position: Position3,
    },
}

impl LinkEnd<'_> {
    pub fn position(&self) -> Position3 {
        match self {
            LinkEnd::Array { array, .. } => array.position,
            LinkEnd::Node { position } => *position,
        }
    }

    pub fn velocity(&self) -> Position3 {
        match self {
            LinkEnd::Array { velocity, .. } => *velocity,
            LinkEnd::Node { .. } => Position3::ORIGIN,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LinkEnd::Array { array, .. } => array.len(),
            LinkEnd::Node { .. } => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn endpoint(&self) -> Endpoint {
        match self {
            LinkEnd::Array { array, .. } => Endpoint::array(array.position),
            LinkEnd::Node { position } => Endpoint::node(*position),
        }
    }
}

/// How the per-ray Jones matrix is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CpmPolicy {
    /// Cross-polar terms from the drawn XPR and phases.
    #[default]
    Xpr,
    /// Drawn phases only, no cross-polar leakage.
    CoPolar,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions<'a> {
    pub frequency: f64,
    pub delay_mode: DelayMode,
    pub cpm: CpmPolicy,
    /// Scatterer anchors for spherical-wave phases; plane waves if `None`.
    pub near_field: Option<&'a ScattererAnchors>,
}

fn ray_matrix(ray: &Ray, policy: CpmPolicy) -> PolarizationMatrix {
    if ray.specular {
        return PolarizationMatrix::line_of_sight();
    }
    let xpr = match policy {
        CpmPolicy::Xpr => 10f64.powf(ray.xpr_db / 10.0),
        CpmPolicy::CoPolar => f64::INFINITY,
    };
    PolarizationMatrix::from_xpr(xpr, ray.phases)
}

/// Per-element side vectors of one ray: field pattern times array phase.
fn side_vectors(
    end: &LinkEnd,
    dir: DirectionPair,
    k: f64,
    source: Option<Position3>,
) -> Vec<[Complex64; 2]> {
    match end {
        LinkEnd::Node { .. } => vec![[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]],
        LinkEnd::Array { array, .. } => {
            let u = dir.unit_vector();
            (0..array.len())
                .map(|e| {
                    let f = array.field_global(e, dir).as_array();
                    let d = array.element_offset(e);
                    let mut phase = k * d.dot(u);
                    if let Some(s) = source {
                        phase -= nearfield_phase(array.position + d, array.position, s, k);
                    }
                    let ph = Complex64::from_polar(1.0, phase);
                    [f[0] * ph, f[1] * ph]
                })
                .collect()
        }
    }
}

/// Per tx element, rx element and ray: `F_rxᵀ·CPM·F_tx·√P` with array
/// phases and Doppler. A node endpoint keeps its polarization open in
/// [`PropagationPath::node_polarization`].
pub fn assemble_paths(
    clusters: &ClusterSet,
    tx: &LinkEnd,
    rx: &LinkEnd,
    options: &AssemblyOptions,
) -> Result<ChannelRealization> {
    if let (LinkEnd::Node { .. }, LinkEnd::Node { .. }) = (tx, rx) {
        return Err(Error::InvalidArgument("a link needs at least one antenna array".into()));
    }
    for end in [tx, rx] {
        if let LinkEnd::Array { array, .. } = end {
            array.validate()?;
        }
    }
    let (tx_pos, rx_pos) = (tx.position(), rx.position());
    let d_los = tx_pos.distance(rx_pos);
    if d_los <= 0.0 {
        return Err(Error::CoincidentPositions("tx and rx share a position".into()));
    }
    if let Some(a) = options.near_field {
        if a.fbs.len() != clusters.clusters.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} anchors for {} clusters",
                a.fbs.len(),
                clusters.clusters.len()
            )));
        }
    }
    let lambda = wavelength(options.frequency);
    let k = 2.0 * std::f64::consts::PI / lambda;
    let offset = match options.delay_mode {
        DelayMode::Relative => 0.0,
        DelayMode::Absolute => d_los / SPEED_OF_LIGHT,
    };
    let (n_tx, n_rx) = (tx.len(), rx.len());
    let mut links: Vec<Vec<PropagationPath>> = vec![Vec::new(); n_tx * n_rx];
    let (v_tx, v_rx) = (tx.velocity(), rx.velocity());
    for (ci, cluster) in clusters.clusters.iter().enumerate() {
        for ray in &cluster.rays {
            let dep = DirectionPair::from_degrees(ray.aod, ray.zod);
            let arr = DirectionPair::from_degrees(ray.aoa, ray.zoa);
            let (tx_src, rx_src) = match options.near_field {
                None => (None, None),
                Some(_) if ray.specular => (Some(rx_pos), Some(tx_pos)),
                Some(a) => (
                    Some(tx_pos + dep.unit_vector() * tx_pos.distance(a.fbs[ci]).max(1e-3)),
                    Some(rx_pos + arr.unit_vector() * rx_pos.distance(a.lbs[ci]).max(1e-3)),
                ),
            };
            let tx_vec = side_vectors(tx, dep, k, tx_src);
            let rx_vec = side_vectors(rx, arr, k, rx_src);
            let m = ray_matrix(ray, options.cpm);
            let mut common = Complex64::new(ray.power.sqrt(), 0.0);
            if ray.specular {
                common *= Complex64::from_polar(1.0, -k * d_los);
            }
            let doppler = (arr.unit_vector().dot(v_rx) + dep.unit_vector().dot(v_tx)) / lambda;
            for (t, tv) in tx_vec.iter().enumerate() {
                let mv = m.mul_vec(*tv);
                for (r, rv) in rx_vec.iter().enumerate() {
                    let (amplitude, node_polarization) = match (tx, rx) {
                        (_, LinkEnd::Node { .. }) => {
                            let v = [mv[0] * common, mv[1] * common];
                            (v[0], Some(v))
                        }
                        (LinkEnd::Node { .. }, _) => {
                            let w = m.left_mul(*rv);
                            let w = [w[0] * common, w[1] * common];
                            (w[0], Some(w))
                        }
                        _ => ((rv[0] * mv[0] + rv[1] * mv[1]) * common, None),
                    };
                    links[t * n_rx + r].push(PropagationPath {
                        cluster: cluster.id,
                        ray: ray.id,
                        delay: cluster.delay + offset,
                        amplitude,
                        node_polarization,
                        departure: dep,
                        arrival: arr,
                        doppler,
                    });
                }
            }
        }
    }
    Ok(ChannelRealization {
        label: String::new(),
        carrier_frequency: options.frequency,
        delay_mode: options.delay_mode,
        tx: tx.endpoint(),
        rx: rx.endpoint(),
        n_tx,
        n_rx,
        clusters: clusters
            .clusters
            .iter()
            .map(|c| ClusterRecord {
                id: c.id,
                power: c.power,
                specular: c.specular,
                shared_with: c.shared_with,
                parents: None,
            })
            .collect(),
        links,
        large_scale: LargeScaleRecord {
            los: clusters.los,
            k_factor_db: clusters.k_db,
            ..Default::default()
        },
        seed: SeedProvenance::default(),
        extensions: ExtensionSet {
            near_field: options.near_field.is_some(),
            ..ExtensionSet::none()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::PatternKind;
    use crate::engine::clusters::Cluster;
    use crate::geometry::Orientation;

    fn single_ray_set(aoa: f64, zoa: f64, specular: bool) -> ClusterSet {
        ClusterSet {
            clusters: vec![Cluster {
                id: 0,
                delay: 0.0,
                power: 1.0,
                aod: 0.0,
                aoa,
                zod: 90.0,
                zoa,
                rays: vec![Ray {
                    id: 0,
                    power: 1.0,
                    aod: 0.0,
                    aoa,
                    zod: 90.0,
                    zoa,
                    xpr_db: f64::INFINITY,
                    phases: [0.0; 4],
                    specular,
                }],
                specular,
                shared_with: None,
            }],
            los: specular,
            k_db: None,
        }
    }

    fn options(f: f64) -> AssemblyOptions<'static> {
        AssemblyOptions {
            frequency: f,
            delay_mode: DelayMode::Relative,
            cpm: CpmPolicy::Xpr,
            near_field: None,
        }
    }

    #[test]
    fn isotropic_unit_ray_has_unit_amplitude() {
        let a = AntennaArray::single(Position3::ORIGIN, PatternKind::Isotropic);
        let b = AntennaArray::single(Position3::new(10.0, 0.0, 0.0), PatternKind::Isotropic);
        let tx = LinkEnd::Array {
            array: &a,
            velocity: Position3::ORIGIN,
        };
        let rx = LinkEnd::Array {
            array: &b,
            velocity: Position3::ORIGIN,
        };
        let r = assemble_paths(&single_ray_set(180.0, 90.0, false), &tx, &rx, &options(3e9)).unwrap();
        assert!((r.link(0, 0)[0].amplitude.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ula_phase_broadside_and_endfire() {
        let f = 3e9;
        let lambda = wavelength(f);
        let a = AntennaArray::single(Position3::new(-10.0, 0.0, 0.0), PatternKind::Isotropic);
        let b = AntennaArray::ula(
            Position3::ORIGIN,
            Orientation::default(),
            2,
            lambda / 2.0,
            PatternKind::Isotropic,
            false,
        );
        let tx = LinkEnd::Array {
            array: &a,
            velocity: Position3::ORIGIN,
        };
        let rx = LinkEnd::Array {
            array: &b,
            velocity: Position3::ORIGIN,
        };
        let r = assemble_paths(&single_ray_set(0.0, 90.0, false), &tx, &rx, &options(f)).unwrap();
        let dphi = (r.link(0, 1)[0].amplitude / r.link(0, 0)[0].amplitude).arg();
        assert!(dphi.abs() < 1e-12);
        let r = assemble_paths(&single_ray_set(90.0, 90.0, false), &tx, &rx, &options(f)).unwrap();
        let dphi = (r.link(0, 1)[0].amplitude / r.link(0, 0)[0].amplitude).arg();
        assert!((dphi.abs() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn approaching_receiver_doppler() {
        let f = 3e9;
        let a = AntennaArray::single(Position3::ORIGIN, PatternKind::Isotropic);
        let b = AntennaArray::single(Position3::new(100.0, 0.0, 0.0), PatternKind::Isotropic);
        let v = 30.0;
        let tx = LinkEnd::Array {
            array: &a,
            velocity: Position3::ORIGIN,
        };
        let rx = LinkEnd::Array {
            array: &b,
            velocity: Position3::new(-v, 0.0, 0.0),
        };
        let r = assemble_paths(&single_ray_set(180.0, 90.0, true), &tx, &rx, &options(f)).unwrap();
        assert!((r.link(0, 0)[0].doppler - v / wavelength(f)).abs() < 1e-9);
    }

    #[test]
    fn node_end_keeps_polarization_open() {
        let a = AntennaArray::single(Position3::ORIGIN, PatternKind::Isotropic);
        let tx = LinkEnd::Array {
            array: &a,
            velocity: Position3::ORIGIN,
        };
        let rx = LinkEnd::Node {
            position: Position3::new(0.0, 20.0, 0.0),
        };
        let r = assemble_paths(&single_ray_set(-90.0, 90.0, true), &tx, &rx, &options(3e9)).unwrap();
        let p = r.link(0, 0)[0];
        let v = p.node_polarization.unwrap();
        assert_eq!(p.amplitude, v[0]);
        assert!((v[0].norm() - 1.0).abs() < 1e-15);
        assert!(assemble_paths(&single_ray_set(0.0, 90.0, true), &rx, &rx, &options(3e9)).is_err());
    }
}
