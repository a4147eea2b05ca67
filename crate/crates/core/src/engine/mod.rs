//! Drop generation: large-scale parameters, clusters, extensions and
//! assembly for every link of a scenario.

pub mod assemble;
pub mod clusters;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::AntennaArray;
use crate::channel::{ChannelRealization, DelayMode, SeedProvenance};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{DirectionPair, Position3};
use crate::random::{SeedTree, Stream};
use crate::scenario::{
    fspl_db, generate_lsps, los_probability, lookup_table, path_loss, LinkState, LspRealization, Scenario,
    ScenarioTable, TableSet,
};
use crate::sparsity::{apply_ick, draw_ick, IckParams};
use crate::xlmimo::{
    apply_sns_with, generate_sns_map, place_scatterer_anchors, station_region_count, ArraySide, SnSParams,
};

pub use assemble::{assemble_paths, AssemblyOptions, CpmPolicy, LinkEnd};
pub use clusters::{
    eliminate_weak_clusters, generate_cluster_angles, generate_cluster_delays, generate_cluster_powers,
    generate_rays, los_delay_scaling, raw_cluster_delays, AngleSpreads, Cluster, ClusterPowers, ClusterSet,
    IntraClusterSpreads, LosAngles, Ray, WEAK_CLUSTER_THRESHOLD_DB,
};

/// Maximum fraction of clipped draws allowed to end up clamped.
pub const MAX_CLAMP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateChoice {
    /// Draw LOS/NLOS from the scenario LOS probability.
    #[default]
    Auto,
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossModel {
    #[default]
    Scenario,
    FreeSpace,
    None,
}

/// Per-link generation switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkOptions {
    pub state: StateChoice,
    /// Replace the stochastic clusters by the geometric LOS ray alone.
    pub los_only: bool,
    pub path_loss: PathLossModel,
    pub shadow_fading: bool,
    pub cross_polarization: bool,
}

impl Default for LinkOptions {
    fn default() -> Self {
        Self {
            state: StateChoice::Auto,
            los_only: false,
            path_loss: PathLossModel::Scenario,
            shadow_fading: true,
            cross_polarization: true,
        }
    }
}

/// Everything needed to generate one link.
#[derive(Debug, Clone, Copy)]
pub struct LinkSpec<'a> {
    pub label: &'a str,
    pub scenario: Scenario,
    pub tables: &'a TableSet,
    pub frequency: f64,
    pub tx: LinkEnd<'a>,
    pub rx: LinkEnd<'a>,
    pub options: LinkOptions,
    pub delay_mode: DelayMode,
    /// Drop clusters 25 dB below the strongest (communication links).
    pub eliminate_weak: bool,
}

/// Extension switches applied on top of a link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkExtensions {
    pub ick: bool,
    /// Split range of the first bounce leg; `Some` enables near-field phases.
    pub near_field: Option<(f64, f64)>,
    pub sns: Option<SnSParams>,
}

/// Small- and large-scale draws of a link before assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDraw {
    pub state: LinkState,
    pub table: ScenarioTable,
    pub lsp: LspRealization,
    pub clusters: ClusterSet,
    pub los_angles: LosAngles,
    pub distance: f64,
}

pub fn los_angles(tx: Position3, rx: Position3) -> Result<LosAngles> {
    let d = rx - tx;
    if d.norm() <= 0.0 {
        return Err(Error::CoincidentPositions("tx and rx share a position".into()));
    }
    let dep = DirectionPair::from_vector(d);
    let arr = DirectionPair::from_vector(-d);
    Ok(LosAngles {
        aod: dep.azimuth.to_degrees(),
        zod: dep.zenith.to_degrees(),
        aoa: arr.azimuth.to_degrees(),
        zoa: arr.zenith.to_degrees(),
    })
}

fn specular_ray(id: usize, power: f64, los: &LosAngles) -> Ray {
    Ray {
        id,
        power,
        aod: los.aod,
        aoa: los.aoa,
        zod: los.zod,
        zoa: los.zoa,
        xpr_db: f64::INFINITY,
        phases: [0.0; 4],
        specular: true,
    }
}

/// The single geometric LOS ray as a one-cluster set.
pub fn los_only_clusters(los: &LosAngles) -> ClusterSet {
    ClusterSet {
        clusters: vec![Cluster {
            id: 0,
            delay: 0.0,
            power: 1.0,
            aod: los.aod,
            aoa: los.aoa,
            zod: los.zod,
            zoa: los.zoa,
            rays: vec![specular_ray(0, 1.0, los)],
            specular: true,
            shared_with: None,
        }],
        los: true,
        k_db: None,
    }
}

/// Stochastic cluster set for one link.
pub fn generate_clusters(
    table: &ScenarioTable,
    lsp: &LspRealization,
    los: Option<LosAngles>,
    geometry: LosAngles,
    eliminate_weak: bool,
    cross_polarization: bool,
    seeds: &SeedTree,
) -> Result<ClusterSet> {
    let n = table.clusters;
    let m = table.rays_per_cluster;
    if n == 0 || m == 0 {
        return Err(Error::Table("cluster and ray counts must be >= 1".into()));
    }
    let k_db = los.map(|_| lsp.k_db);
    let r_tau = table.delay_scaling;
    let delays = generate_cluster_delays(n, lsp.ds, r_tau, &mut seeds.derive_stream("delays", 0));
    let powers = generate_cluster_powers(
        &delays,
        lsp.ds,
        r_tau,
        table.cluster_shadowing_std_db,
        k_db,
        &mut seeds.derive_stream("powers", 0),
    );
    let kept: Vec<usize> = if eliminate_weak {
        eliminate_weak_clusters(&powers.total, WEAK_CLUSTER_THRESHOLD_DB)
    } else {
        (0..n).collect()
    };
    let scale = 1.0 / kept.iter().map(|&i| powers.total[i]).sum::<f64>();
    let total: Vec<f64> = kept.iter().map(|&i| powers.total[i] * scale).collect();
    let c_tau = k_db.map(los_delay_scaling).unwrap_or(1.0);
    let delays: Vec<f64> = kept.iter().map(|&i| delays[i] / c_tau).collect();
    let spreads = AngleSpreads {
        asa: lsp.asa,
        asd: lsp.asd,
        zsa: lsp.zsa,
        zsd: lsp.zsd,
    };
    let centers = generate_cluster_angles(&total, spreads, k_db, geometry, &mut seeds.derive_stream("angles", 0));
    let intra = IntraClusterSpreads {
        asa: table.cluster_asa_deg,
        asd: table.cluster_asd_deg,
        zsa: table.cluster_zsa_deg,
        zsd: table.cluster_zsd_deg(),
    };
    let mut coupling = seeds.derive_stream("coupling", 0);
    let mut xpr = seeds.derive_stream("xpr", 0);
    let mut phases = seeds.derive_stream("phases", 0);
    let k_lin = powers.k_linear;
    let mut clusters = Vec::with_capacity(kept.len());
    for (idx, &orig) in kept.iter().enumerate() {
        let specular = k_lin.is_some() && orig == 0;
        let diffuse = match k_lin {
            Some(k) if specular => powers.diffuse[0] / (k + 1.0) * scale,
            _ => total[idx],
        };
        let mut rays = generate_rays(centers[idx], diffuse, m, intra, &mut coupling);
        for ray in &mut rays {
            let x = xpr.normal(table.xpr_db.mean, table.xpr_db.std);
            ray.xpr_db = if cross_polarization { x } else { f64::INFINITY };
            ray.phases = std::array::from_fn(|_| phases.uniform(-std::f64::consts::PI, std::f64::consts::PI));
        }
        if let (true, Some(k)) = (specular, k_lin) {
            rays.push(specular_ray(m, k / (k + 1.0) * scale, &geometry));
        }
        clusters.push(Cluster {
            id: idx,
            delay: delays[idx],
            power: total[idx],
            aod: centers[idx][0],
            aoa: centers[idx][1],
            zod: centers[idx][2],
            zoa: centers[idx][3],
            rays,
            specular,
            shared_with: None,
        });
    }
    Ok(ClusterSet {
        clusters,
        los: los.is_some(),
        k_db,
    })
}

fn choose_state(spec: &LinkSpec, seeds: &SeedTree) -> LinkState {
    if spec.options.los_only {
        return LinkState::Los;
    }
    // always consume the draw so forcing the state leaves later draws alone
    let u = seeds.derive_stream("state", 0).uniform(0.0, 1.0);
    match spec.options.state {
        StateChoice::Los => LinkState::Los,
        StateChoice::Nlos => LinkState::Nlos,
        StateChoice::Auto => {
            let d2 = spec.tx.position().distance_2d(spec.rx.position());
            if u < los_probability(spec.scenario, d2) {
                LinkState::Los
            } else {
                LinkState::Nlos
            }
        }
    }
}

/// LOS state, LSPs and clusters of one link.
pub fn draw_link(spec: &LinkSpec, seeds: &SeedTree) -> Result<LinkDraw> {
    let (tx, rx) = (spec.tx.position(), spec.rx.position());
    let geometry = los_angles(tx, rx)?;
    let state = choose_state(spec, seeds);
    let table = lookup_table(spec.tables, spec.scenario, state, spec.frequency)?;
    let lsp = generate_lsps(&table, &mut seeds.derive_stream("lsp", 0));
    let clusters = if spec.options.los_only {
        los_only_clusters(&geometry)
    } else {
        let los = (state == LinkState::Los && table.k_factor_db.is_some()).then_some(geometry);
        generate_clusters(
            &table,
            &lsp,
            los,
            geometry,
            spec.eliminate_weak,
            spec.options.cross_polarization,
            seeds,
        )
        .map_err(Error::in_stage("clusters"))?
    };
    Ok(LinkDraw {
        state,
        table,
        lsp,
        clusters,
        los_angles: geometry,
        distance: tx.distance(rx),
    })
}

/// Redistribute the diffuse ray powers of every cluster with per-cluster
/// ICK draws. Returns whether anything was drawn.
pub fn apply_link_ick(draw: &mut LinkDraw, stream: &mut Stream) -> Result<bool> {
    let Some(stats) = draw.table.ick else {
        return Ok(false);
    };
    for cluster in &mut draw.clusters.clusters {
        let idx: Vec<usize> = (0..cluster.rays.len()).filter(|&i| !cluster.rays[i].specular).collect();
        if idx.len() < 2 {
            continue;
        }
        let params = IckParams::new(stats.mean.max(1.0 / idx.len() as f64), stats.std, idx.len())?;
        let ick = draw_ick(&params, stream);
        let powers: Vec<f64> = idx.iter().map(|&i| cluster.rays[i].power).collect();
        for (&i, p) in idx.iter().zip(apply_ick(&powers, ick)?) {
            cluster.rays[i].power = p;
        }
    }
    stream.check_clamping(MAX_CLAMP_FRACTION)?;
    Ok(true)
}

/// Path loss in dB for the drawn state.
pub fn link_path_loss(spec: &LinkSpec, draw: &LinkDraw) -> Result<f64> {
    match spec.options.path_loss {
        PathLossModel::Scenario => path_loss(spec.scenario, draw.state, draw.distance, spec.frequency),
        PathLossModel::FreeSpace => Ok(fspl_db(draw.distance, spec.frequency)),
        PathLossModel::None => Ok(0.0),
    }
}

/// Assemble a drawn link and apply path loss and shadow fading.
pub fn realize_link(
    spec: &LinkSpec,
    draw: &LinkDraw,
    anchors: Option<&crate::xlmimo::ScattererAnchors>,
    seeds: &SeedTree,
) -> Result<ChannelRealization> {
    let options = AssemblyOptions {
        frequency: spec.frequency,
        delay_mode: spec.delay_mode,
        cpm: if spec.options.cross_polarization {
            CpmPolicy::Xpr
        } else {
            CpmPolicy::CoPolar
        },
        near_field: anchors,
    };
    let mut r = assemble_paths(&draw.clusters, &spec.tx, &spec.rx, &options).map_err(Error::in_stage("assembly"))?;
    let pl = link_path_loss(spec, draw).map_err(Error::in_stage("path_loss"))?;
    let sf = if spec.options.shadow_fading { draw.lsp.sf_db } else { 0.0 };
    r.apply_loss_db(pl + sf);
    r.label = spec.label.to_owned();
    r.seed = SeedProvenance {
        master_seed: seeds.master_seed,
        drop: seeds.path.iter().find(|(l, _)| l == "drop").map(|(_, i)| *i).unwrap_or(0),
        link: spec.label.to_owned(),
    };
    let ls = &mut r.large_scale;
    ls.los = draw.state == LinkState::Los;
    ls.path_loss_db = pl;
    ls.shadow_fading_db = sf;
    ls.delay_spread = draw.lsp.ds;
    ls.asa = draw.lsp.asa.to_radians();
    ls.asd = draw.lsp.asd.to_radians();
    ls.zsa = draw.lsp.zsa.to_radians();
    ls.zsd = draw.lsp.zsd.to_radians();
    Ok(r)
}

/// Pure baseline link: no extension code is touched.
pub fn baseline_link(spec: &LinkSpec, seeds: &SeedTree) -> Result<ChannelRealization> {
    let draw = draw_link(spec, seeds).map_err(Error::in_stage("draw"))?;
    realize_link(spec, &draw, None, seeds)
}

/// Anchors, assembly and visibility for an already drawn (and possibly
/// adjusted) link.
pub fn finish_link(
    spec: &LinkSpec,
    draw: &LinkDraw,
    ext: &LinkExtensions,
    seeds: &SeedTree,
) -> Result<ChannelRealization> {
    let anchors = ext.near_field.map(|split| {
        place_scatterer_anchors(
            &draw.clusters,
            spec.tx.position(),
            spec.rx.position(),
            split,
            &mut seeds.derive_stream("anchors", 0),
        )
    });
    let mut r = realize_link(spec, draw, anchors.as_ref(), seeds)?;
    if let Some(sns) = ext.sns {
        let n_clusters = draw.clusters.clusters.len();
        let sides: &[(ArraySide, usize, u64)] = match sns.side {
            ArraySide::Rx => &[(ArraySide::Rx, r.n_rx, 0)],
            ArraySide::Tx => &[(ArraySide::Tx, r.n_tx, 1)],
            ArraySide::Both => &[(ArraySide::Rx, r.n_rx, 0), (ArraySide::Tx, r.n_tx, 1)],
        };
        for &(side, n, index) in sides {
            let map = generate_sns_map(
                &sns,
                station_region_count(n, sns.sr_length),
                n_clusters,
                &mut seeds.derive_stream("sns", index),
            )
            .map_err(Error::in_stage("sns"))?;
            r = apply_sns_with(&r, &map, sns.sr_length, side, sns.smoothing).map_err(Error::in_stage("sns"))?;
        }
    }
    Ok(r)
}

/// Draw, extend and assemble one link.
pub fn generate_link(spec: &LinkSpec, ext: &LinkExtensions, seeds: &SeedTree) -> Result<ChannelRealization> {
    let mut draw = draw_link(spec, seeds).map_err(Error::in_stage("draw"))?;
    let ick = ext.ick
        && apply_link_ick(&mut draw, &mut seeds.derive_stream("ick", 0)).map_err(Error::in_stage("ick"))?;
    let mut r = finish_link(spec, &draw, ext, seeds)?;
    r.extensions.sparsity = ick;
    Ok(r)
}

/// Realizations of one intermediate-node link (target or RIS).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLinks {
    /// Tx → node, as generated (before pruning).
    pub first: ChannelRealization,
    /// Node → Rx, as generated (before pruning).
    pub second: ChannelRealization,
    pub concatenated: ChannelRealization,
}

/// All realizations of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropOutput {
    pub drop: u64,
    /// Absent when Tx and Rx are co-located (monostatic sensing).
    pub communication: Option<ChannelRealization>,
    pub sensing: Option<NodeLinks>,
    pub ris: Option<NodeLinks>,
}

impl DropOutput {
    pub fn realizations(&self) -> Vec<&ChannelRealization> {
        let mut v: Vec<&ChannelRealization> = self.communication.iter().collect();
        for n in [&self.sensing, &self.ris].into_iter().flatten() {
            v.extend([&n.first, &n.second, &n.concatenated]);
        }
        v
    }
}

/// Seed tree of one drop.
pub fn drop_seeds(master_seed: u64, drop: u64) -> SeedTree {
    SeedTree::new(master_seed).child("drop", drop)
}

/// Resolved arrays and tables of a validated configuration.
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub tables: TableSet,
    pub tx: AntennaArray,
    pub rx: AntennaArray,
}

impl PreparedScenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let tables = TableSet::resolve(&config.tables)?;
        let lambda = crate::geometry::wavelength(config.carrier_frequency_hz);
        Ok(Self {
            config: config.clone(),
            tables,
            tx: config.tx.build(lambda)?,
            rx: config.rx.build(lambda)?,
        })
    }

    pub fn communication_spec(&self) -> LinkSpec<'_> {
        LinkSpec {
            label: "comm",
            scenario: self.config.scenario,
            tables: &self.tables,
            frequency: self.config.carrier_frequency_hz,
            tx: LinkEnd::Array {
                array: &self.tx,
                velocity: self.config.tx.velocity,
            },
            rx: LinkEnd::Array {
                array: &self.rx,
                velocity: self.config.rx.velocity,
            },
            options: self.config.link,
            delay_mode: DelayMode::Relative,
            eliminate_weak: true,
        }
    }

    pub fn has_communication_link(&self) -> bool {
        self.tx.position.distance(self.rx.position) > 0.0
    }

    /// Extension switches of the communication link.
    pub fn communication_extensions(&self) -> LinkExtensions {
        let e = &self.config.extensions;
        LinkExtensions {
            ick: e.sparsity,
            near_field: e.near_field.then_some(self.config.near_field.split_range),
            sns: e.sns.then_some(self.config.sns),
        }
    }

    /// Extension switches of sub-links ending at a node (no array-side
    /// visibility on the node side).
    pub fn sublink_extensions(&self) -> LinkExtensions {
        LinkExtensions {
            sns: None,
            ..self.communication_extensions()
        }
    }

    /// The communication link of `drop` with its draw, `None` when Tx and
    /// Rx are co-located.
    pub fn communication_drop(&self, drop: u64) -> Result<Option<(ChannelRealization, LinkDraw)>> {
        if !self.has_communication_link() {
            return Ok(None);
        }
        let spec = self.communication_spec();
        let ext = self.communication_extensions();
        let link_seeds = drop_seeds(self.config.seed, drop).child("comm", 0);
        let mut draw = draw_link(&spec, &link_seeds).map_err(Error::in_stage("draw"))?;
        let ick = ext.ick
            && apply_link_ick(&mut draw, &mut link_seeds.derive_stream("ick", 0)).map_err(Error::in_stage("ick"))?;
        let mut r = finish_link(&spec, &draw, &ext, &link_seeds)?;
        r.extensions.sparsity = ick;
        Ok(Some((r, draw)))
    }

    /// Generate every link of `drop`.
    pub fn run_drop(&self, drop: u64) -> Result<DropOutput> {
        let seeds = drop_seeds(self.config.seed, drop);
        let (communication, comm_draw) = match self.communication_drop(drop)? {
            Some((r, d)) => (Some(r), Some(d)),
            None => (None, None),
        };
        let sensing = match (&self.config.target, self.config.extensions.isac) {
            (Some(target), true) => Some(
                crate::isac::build_sensing_channel(self, target, comm_draw.as_ref(), &seeds)
                    .map_err(Error::in_stage("sensing"))?,
            ),
            _ => None,
        };
        let ris = match (&self.config.ris, self.config.extensions.ris) {
            (Some(panel), true) => {
                Some(crate::ris::build_ris_channel(self, panel, &seeds).map_err(Error::in_stage("ris"))?)
            }
            _ => None,
        };
        Ok(DropOutput {
            drop,
            communication,
            sensing,
            ris,
        })
    }

    /// The communication link through the baseline path only.
    pub fn baseline_drop(&self, drop: u64) -> Result<ChannelRealization> {
        let seeds = drop_seeds(self.config.seed, drop).child("comm", 0);
        baseline_link(&self.communication_spec(), &seeds)
    }

    /// Drops `0..n` in parallel; the result does not depend on scheduling.
    pub fn run_drops(&self, n: u64) -> Result<Vec<DropOutput>> {
        (0..n).into_par_iter().map(|d| self.run_drop(d)).collect()
    }

    pub fn run_drops_serial(&self, n: u64) -> Result<Vec<DropOutput>> {
        (0..n).map(|d| self.run_drop(d)).collect()
    }
}

/// Convenience wrapper over [`PreparedScenario::run_drop`].
pub fn run_drop(config: &ScenarioConfig, drop: u64) -> Result<DropOutput> {
    PreparedScenario::new(config)?.run_drop(drop)
}
