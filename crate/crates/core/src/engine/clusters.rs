//! Small-scale parameters: cluster delays, powers, angles and rays.

use crate::random::Stream;

/// Intra-cluster ray offsets for 20 rays, unit RMS angle spread.
pub const RAY_OFFSETS_20: [f64; 20] = [
    0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129, 0.6797, -0.6797, 0.8844,
    -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551,
];

/// Clusters weaker than this relative to the strongest are dropped on
/// communication links, dB.
pub const WEAK_CLUSTER_THRESHOLD_DB: f64 = -25.0;

/// Symmetric ray offsets for `m` rays. The 20-ray table is used verbatim;
/// other counts take Laplacian quantiles rescaled to the table's RMS.
pub fn ray_offsets(m: usize) -> Vec<f64> {
    if m == 20 {
        return RAY_OFFSETS_20.to_vec();
    }
    if m == 1 {
        return vec![0.0];
    }
    let laplace_q = |p: f64| {
        if p < 0.5 {
            (2.0 * p).ln()
        } else {
            -(2.0 * (1.0 - p)).ln()
        }
    };
    let raw: Vec<f64> = (0..m).map(|k| laplace_q((k as f64 + 0.5) / m as f64)).collect();
    let target = (RAY_OFFSETS_20.iter().map(|a| a * a).sum::<f64>() / 20.0).sqrt();
    let rms = (raw.iter().map(|a| a * a).sum::<f64>() / m as f64).sqrt();
    raw.into_iter().map(|a| a * target / rms).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub id: usize,
    pub power: f64,
    /// Degrees.
    pub aod: f64,
    pub aoa: f64,
    pub zod: f64,
    pub zoa: f64,
    /// Cross-polar ratio, dB (`+∞` for the specular ray or when disabled).
    pub xpr_db: f64,
    /// Initial phases θθ, θφ, φθ, φφ, radians.
    pub phases: [f64; 4],
    pub specular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    /// Seconds, relative to the first arrival.
    pub delay: f64,
    /// Normalized power (sum over clusters is 1).
    pub power: f64,
    /// Degrees.
    pub aod: f64,
    pub aoa: f64,
    pub zod: f64,
    pub zoa: f64,
    pub rays: Vec<Ray>,
    pub specular: bool,
    pub shared_with: Option<usize>,
}

impl Cluster {
    pub fn ray_power_sum(&self) -> f64 {
        self.rays.iter().map(|r| r.power).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub los: bool,
    pub k_db: Option<f64>,
}

impl ClusterSet {
    pub fn power_sum(&self) -> f64 {
        self.clusters.iter().map(|c| c.power).sum()
    }
}

/// Unsorted exponential draws `-r_τ·DS·ln(X)`.
pub fn raw_cluster_delays(n: usize, ds: f64, r_tau: f64, stream: &mut Stream) -> Vec<f64> {
    (0..n).map(|_| -r_tau * ds * stream.open_unit().ln()).collect()
}

/// Sorted delays shifted so the first is 0.
pub fn generate_cluster_delays(n: usize, ds: f64, r_tau: f64, stream: &mut Stream) -> Vec<f64> {
    let mut d = raw_cluster_delays(n, ds, r_tau, stream);
    d.sort_by(f64::total_cmp);
    let first = d.first().copied().unwrap_or(0.0);
    d.iter_mut().for_each(|x| *x -= first);
    d
}

/// LOS delay compression factor for a K-factor in dB.
pub fn los_delay_scaling(k_db: f64) -> f64 {
    0.7705 - 0.0433 * k_db + 0.0002 * k_db.powi(2) + 0.000017 * k_db.powi(3)
}

/// Normalized cluster powers, before and after LOS injection.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPowers {
    /// Diffuse powers, normalized.
    pub diffuse: Vec<f64>,
    /// Final powers; with LOS the first cluster also carries `K/(K+1)`.
    pub total: Vec<f64>,
    /// Linear K, if LOS.
    pub k_linear: Option<f64>,
}

pub fn generate_cluster_powers(
    delays: &[f64],
    ds: f64,
    r_tau: f64,
    shadow_std_db: f64,
    k_db: Option<f64>,
    stream: &mut Stream,
) -> ClusterPowers {
    let raw: Vec<f64> = delays
        .iter()
        .map(|&tau| {
            let z = stream.normal(0.0, shadow_std_db);
            (-tau * (r_tau - 1.0) / (r_tau * ds)).exp() * 10f64.powf(-z / 10.0)
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    let diffuse: Vec<f64> = raw.iter().map(|p| p / sum).collect();
    let (total, k_linear) = match k_db {
        Some(k_db) => {
            let k = 10f64.powf(k_db / 10.0);
            let mut t: Vec<f64> = diffuse.iter().map(|p| p / (k + 1.0)).collect();
            if let Some(first) = t.first_mut() {
                *first += k / (k + 1.0);
            }
            (t, Some(k))
        }
        None => (diffuse.clone(), None),
    };
    ClusterPowers {
        diffuse,
        total,
        k_linear,
    }
}

fn interpolate(table: &[(usize, f64)], n: usize) -> f64 {
    let x = n as f64;
    if n <= table[0].0 {
        return table[0].1;
    }
    for w in table.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if n <= x1 {
            let t = (x - x0 as f64) / (x1 - x0) as f64;
            return y0 + t * (y1 - y0);
        }
    }
    table[table.len() - 1].1
}

/// Azimuth scaling factor for `n` clusters (NLOS), interpolated between
/// tabulated counts and clamped at the ends.
pub fn azimuth_scaling(n: usize) -> f64 {
    const TABLE: [(usize, f64); 12] = [
        (4, 0.779),
        (5, 0.860),
        (8, 1.018),
        (10, 1.090),
        (11, 1.123),
        (12, 1.146),
        (14, 1.190),
        (15, 1.211),
        (16, 1.226),
        (19, 1.273),
        (20, 1.289),
        (25, 1.358),
    ];
    interpolate(&TABLE, n)
}

pub fn zenith_scaling(n: usize) -> f64 {
    const TABLE: [(usize, f64); 8] = [
        (8, 0.889),
        (10, 0.957),
        (11, 1.031),
        (12, 1.104),
        (15, 1.1088),
        (19, 1.184),
        (20, 1.178),
        (25, 1.282),
    ];
    interpolate(&TABLE, n)
}

/// Geometric LOS directions of a link, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosAngles {
    pub aod: f64,
    pub zod: f64,
    pub aoa: f64,
    pub zoa: f64,
}

/// Cluster-center spreads, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSpreads {
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
}

/// Intra-cluster spreads, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntraClusterSpreads {
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
}

/// Center angles (aod, aoa, zod, zoa) per cluster, degrees.
pub fn generate_cluster_angles(
    powers: &[f64],
    spreads: AngleSpreads,
    k_db: Option<f64>,
    los: LosAngles,
    stream: &mut Stream,
) -> Vec<[f64; 4]> {
    let n = powers.len();
    let max_p = powers.iter().copied().fold(f64::MIN, f64::max);
    let (mut c_phi, mut c_theta) = (azimuth_scaling(n), zenith_scaling(n));
    if let Some(k) = k_db {
        c_phi *= 1.1035 - 0.028 * k - 0.002 * k * k + 0.0001 * k.powi(3);
        c_theta *= 1.3086 + 0.0339 * k - 0.0077 * k * k + 0.0002 * k.powi(3);
    }
    let azimuths = |spread: f64, los_angle: f64, stream: &mut Stream| -> Vec<f64> {
        let primed: Vec<f64> = powers
            .iter()
            .map(|p| 2.0 * (spread / 1.4) * (-(p / max_p).ln()).max(0.0).sqrt() / c_phi)
            .collect();
        let raw: Vec<f64> = primed
            .iter()
            .map(|a| stream.sign() * a + stream.normal(0.0, spread / 7.0))
            .collect();
        offset_to_los(raw, los_angle, k_db.is_some())
    };
    let zeniths = |spread: f64, los_angle: f64, stream: &mut Stream| -> Vec<f64> {
        let primed: Vec<f64> = powers.iter().map(|p| -spread * (p / max_p).ln().min(0.0) / c_theta).collect();
        let raw: Vec<f64> = primed
            .iter()
            .map(|a| stream.sign() * a + stream.normal(0.0, spread / 7.0))
            .collect();
        offset_to_los(raw, los_angle, k_db.is_some())
    };
    let aoa = azimuths(spreads.asa, los.aoa, stream);
    let aod = azimuths(spreads.asd, los.aod, stream);
    let zoa = zeniths(spreads.zsa, los.zoa, stream);
    let zod = zeniths(spreads.zsd, los.zod, stream);
    (0..n).map(|i| [aod[i], aoa[i], zod[i], zoa[i]]).collect()
}

/// Anchor the draws to the LOS direction: in LOS the first cluster lands
/// exactly on it, in NLOS the LOS direction is the mean.
fn offset_to_los(raw: Vec<f64>, los_angle: f64, los: bool) -> Vec<f64> {
    let shift = if los { los_angle - raw[0] } else { los_angle };
    raw.into_iter().map(|a| a + shift).collect()
}

/// Rays for one cluster: center + spread·offset, with AoD/ZoA/ZoD offsets
/// randomly coupled to the AoA order.
pub fn generate_rays(
    center: [f64; 4],
    cluster_power: f64,
    m: usize,
    spreads: IntraClusterSpreads,
    coupling: &mut Stream,
) -> Vec<Ray> {
    let offsets = ray_offsets(m);
    let p_aod = coupling.permutation(m);
    let p_zoa = coupling.permutation(m);
    let p_zod = coupling.permutation(m);
    (0..m)
        .map(|k| Ray {
            id: k,
            power: cluster_power / m as f64,
            aod: center[0] + spreads.asd * offsets[p_aod[k]],
            aoa: center[1] + spreads.asa * offsets[k],
            zod: center[2] + spreads.zsd * offsets[p_zod[k]],
            zoa: center[3] + spreads.zsa * offsets[p_zoa[k]],
            xpr_db: f64::INFINITY,
            phases: [0.0; 4],
            specular: false,
        })
        .collect()
}

/// Keep clusters within `threshold_db` of the strongest, renumber and
/// renormalize. Returns the kept original indices.
pub fn eliminate_weak_clusters(powers: &[f64], threshold_db: f64) -> Vec<usize> {
    let max_p = powers.iter().copied().fold(f64::MIN, f64::max);
    let floor = max_p * 10f64.powf(threshold_db / 10.0);
    (0..powers.len()).filter(|&i| i == 0 || powers[i] >= floor).collect()
}
