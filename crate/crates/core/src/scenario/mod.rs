//! Scenario parameter tables, LOS probability, path loss and correlated
//! large-scale parameter generation.

mod propagation;
pub mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::Stream;

pub use propagation::{fspl_db, los_probability, path_loss, path_loss_with_heights, LinkHeights};
pub use tables::{CorrMatrix, IckStats, NormalStats, StateRecord, TableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scenario {
    UMi,
    UMa,
    InH,
    RMa,
    SMa,
    InF,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::UMi => "UMi",
            Scenario::UMa => "UMa",
            Scenario::InH => "InH",
            Scenario::RMa => "RMa",
            Scenario::SMa => "SMa",
            Scenario::InF => "InF",
        }
    }

    /// Whether the user terminal is indoors (fixes the mean arrival zenith at 90°).
    pub fn indoor(&self) -> bool {
        matches!(self, Scenario::InH | Scenario::InF)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "UMi" => Scenario::UMi,
            "UMa" => Scenario::UMa,
            "InH" => Scenario::InH,
            "RMa" => Scenario::RMa,
            "SMa" => Scenario::SMa,
            "InF" => Scenario::InF,
            other => return Err(Error::UnknownScenario(other.to_owned())),
        })
    }
}

impl TryFrom<String> for Scenario {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scenario> for String {
    fn from(s: Scenario) -> String {
        s.as_str().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkState {
    Los,
    Nlos,
}

impl fmt::Display for LinkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkState::Los => "LOS",
            LinkState::Nlos => "NLOS",
        })
    }
}

/// A table record with every frequency-dependent statistic resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTable {
    pub scenario: Scenario,
    pub state: LinkState,
    pub frequency_hz: f64,
    pub band_hz: (f64, f64),
    /// log10 statistics; DS in seconds, spreads in degrees.
    pub ds: (f64, f64),
    pub asd: (f64, f64),
    pub asa: (f64, f64),
    pub zsd: (f64, f64),
    pub zsa: (f64, f64),
    pub k_factor_db: Option<NormalStats>,
    pub shadow_fading_std_db: f64,
    pub clusters: usize,
    pub rays_per_cluster: usize,
    pub cluster_shadowing_std_db: f64,
    pub delay_scaling: f64,
    pub xpr_db: NormalStats,
    pub cluster_asd_deg: f64,
    pub cluster_asa_deg: f64,
    pub cluster_zsa_deg: f64,
    pub ick: Option<IckStats>,
    pub corr_sqrt: CorrMatrix,
}

impl ScenarioTable {
    /// Intra-cluster ZoD spread, (3/8)·10^μ_lgZSD degrees.
    pub fn cluster_zsd_deg(&self) -> f64 {
        0.375 * 10f64.powf(self.zsd.0)
    }
}

/// Resolve the record for `(scenario, state)` at `frequency_hz`.
pub fn lookup_table(set: &TableSet, scenario: Scenario, state: LinkState, frequency_hz: f64) -> Result<ScenarioTable> {
    if !(frequency_hz > 0.0) {
        return Err(Error::FrequencyOutOfRange {
            scenario: scenario.to_string(),
            state: state.to_string(),
            frequency_hz,
        });
    }
    let band = set.band(scenario, frequency_hz).map_err(|e| match e {
        Error::FrequencyOutOfRange { .. } => Error::FrequencyOutOfRange {
            scenario: scenario.to_string(),
            state: state.to_string(),
            frequency_hz,
        },
        other => other,
    })?;
    let rec = match state {
        LinkState::Los => &band.los,
        LinkState::Nlos => &band.nlos,
    };
    let f = frequency_hz;
    let resolve = |p: tables::LogNormal| (p.mu.eval(f), p.sigma.eval(f));
    Ok(ScenarioTable {
        scenario,
        state,
        frequency_hz,
        band_hz: (band.min_hz, band.max_hz),
        ds: resolve(rec.ds),
        asd: resolve(rec.asd),
        asa: resolve(rec.asa),
        zsd: resolve(rec.zsd),
        zsa: resolve(rec.zsa),
        k_factor_db: rec.k_factor_db,
        shadow_fading_std_db: rec.shadow_fading_std_db,
        clusters: rec.clusters,
        rays_per_cluster: rec.rays_per_cluster,
        cluster_shadowing_std_db: rec.cluster_shadowing_std_db,
        delay_scaling: rec.delay_scaling,
        xpr_db: rec.xpr_db,
        cluster_asd_deg: rec.cluster_asd_deg,
        cluster_asa_deg: rec.cluster_asa_deg,
        cluster_zsa_deg: rec.cluster_zsa_deg,
        ick: rec.ick,
        corr_sqrt: rec
            .corr_sqrt
            .ok_or_else(|| Error::Table("table set was not validated".into()))?,
    })
}

/// One draw of the large-scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspRealization {
    /// Seconds.
    pub ds: f64,
    /// Degrees.
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
    pub sf_db: f64,
    /// Ricean K in dB; meaningful for LOS only.
    pub k_db: f64,
}

/// Standardized correlated normals in [`tables::LSP_NAMES`] order.
pub fn correlated_normals(record: &ScenarioTable, stream: &mut Stream) -> [f64; 7] {
    let z: [f64; 7] = std::array::from_fn(|_| stream.standard_normal());
    let s = &record.corr_sqrt;
    std::array::from_fn(|i| (0..7).map(|j| s[i][j] * z[j]).sum())
}

pub fn generate_lsps(record: &ScenarioTable, stream: &mut Stream) -> LspRealization {
    let y = correlated_normals(record, stream);
    let lg = |(mu, sigma): (f64, f64), x: f64| 10f64.powf(mu + sigma * x);
    let k = record.k_factor_db.unwrap_or(NormalStats { mean: 0.0, std: 0.0 });
    LspRealization {
        sf_db: record.shadow_fading_std_db * y[0],
        k_db: k.mean + k.std * y[1],
        ds: lg(record.ds, y[2]),
        asd: lg(record.asd, y[3]).min(104.0),
        asa: lg(record.asa, y[4]).min(104.0),
        zsd: lg(record.zsd, y[5]).min(52.0),
        zsa: lg(record.zsa, y[6]).min(52.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SeedTree;

    fn baseline() -> TableSet {
        TableSet::builtin("baseline").unwrap()
    }

    #[test]
    fn lookup_inh_los_baseline() {
        let rec = lookup_table(&baseline(), Scenario::InH, LinkState::Los, 3.5e9).unwrap();
        assert_eq!(rec.clusters, 15);
        assert_eq!(rec.rays_per_cluster, 20);
        let expected_ds = -0.01 * (1.0f64 + 3.5).log10() - 7.692;
        assert!((rec.ds.0 - expected_ds).abs() < 1e-12);
    }

    #[test]
    fn egbsm_has_fewer_clusters_at_13_ghz() {
        let set = TableSet::builtin("egbsm").unwrap();
        let n6 = lookup_table(&set, Scenario::InH, LinkState::Los, 6e9).unwrap().clusters;
        let n13 = lookup_table(&set, Scenario::InH, LinkState::Los, 13e9).unwrap().clusters;
        assert!(n13 < n6);
    }

    #[test]
    fn zero_frequency_is_out_of_range() {
        assert!(matches!(
            lookup_table(&baseline(), Scenario::InH, LinkState::Los, 0.0),
            Err(Error::FrequencyOutOfRange { .. })
        ));
        assert!(lookup_table(&baseline(), Scenario::InH, LinkState::Los, 2e12).is_err());
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(matches!("Mars".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
        assert!(lookup_table(&baseline(), Scenario::RMa, LinkState::Los, 3e9).is_err());
    }

    fn degenerate_record(corr_sqrt: CorrMatrix) -> ScenarioTable {
        let mut rec = lookup_table(&baseline(), Scenario::UMi, LinkState::Los, 3e9).unwrap();
        rec.ds.1 = 0.0;
        rec.asa.1 = 0.0;
        rec.asd.1 = 0.0;
        rec.zsa.1 = 0.0;
        rec.zsd.1 = 0.0;
        rec.shadow_fading_std_db = 0.0;
        rec.k_factor_db = Some(NormalStats { mean: 9.0, std: 0.0 });
        rec.corr_sqrt = corr_sqrt;
        rec
    }

    #[test]
    fn zero_std_lsps_equal_means() {
        let mut id = [[0.0; 7]; 7];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let rec = degenerate_record(id);
        let mut s = SeedTree::new(1).derive_stream("lsp", 0);
        let l = generate_lsps(&rec, &mut s);
        assert_eq!(l.ds, 10f64.powf(rec.ds.0));
        assert_eq!(l.asa, 10f64.powf(rec.asa.0).min(104.0));
        assert_eq!(l.sf_db, 0.0);
        assert_eq!(l.k_db, 9.0);
    }

    #[test]
    fn rank_one_correlation_gives_identical_normals() {
        let mut pairs = std::collections::BTreeMap::new();
        for i in 0..7 {
            for j in i + 1..7 {
                pairs.insert(format!("{}:{}", tables::LSP_NAMES[i], tables::LSP_NAMES[j]), 1.0);
            }
        }
        let sqrt = tables::matrix_sqrt_psd(&tables::correlation_matrix(&pairs).unwrap()).unwrap();
        let rec = degenerate_record(sqrt);
        let mut s = SeedTree::new(3).derive_stream("lsp", 0);
        for _ in 0..100 {
            let y = correlated_normals(&rec, &mut s);
            for v in &y[1..] {
                assert!((v - y[0]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empirical_ds_asa_correlation_matches_table() {
        let set = baseline();
        let rec = lookup_table(&set, Scenario::UMi, LinkState::Los, 3e9).unwrap();
        let expected = set.record(Scenario::UMi, LinkState::Los, 3e9).unwrap().correlations["asa:ds"];
        let mut s = SeedTree::new(17).derive_stream("lsp", 0);
        let n = 10_000;
        let draws: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let l = generate_lsps(&rec, &mut s);
                (l.ds.log10(), l.asa.log10())
            })
            .collect();
        let (mx, my) = draws.iter().fold((0.0, 0.0), |a, d| (a.0 + d.0, a.1 + d.1));
        let (mx, my) = (mx / n as f64, my / n as f64);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in &draws {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        let r = sxy / (sxx * syy).sqrt();
        // ASA is capped at 104° which barely touches UMi values
        assert!((r - expected).abs() < 0.05, "r {r} vs {expected}");
    }

    #[test]
    fn frequency_inside_band_does_not_change_draws() {
        let set = baseline();
        let a = lookup_table(&set, Scenario::UMi, LinkState::Nlos, 3e9).unwrap();
        let b = lookup_table(&set, Scenario::UMi, LinkState::Nlos, 4e9).unwrap();
        let ya = correlated_normals(&a, &mut SeedTree::new(5).derive_stream("lsp", 0));
        let yb = correlated_normals(&b, &mut SeedTree::new(5).derive_stream("lsp", 0));
        assert_eq!(ya, yb);
    }
}
