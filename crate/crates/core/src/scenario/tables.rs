//! Parameter table files.
//!
//! A table set is a JSON document listing, per scenario, contiguous frequency
//! bands; each band carries one record for LOS and one for NLOS. Log-domain
//! statistics may be constants or `slope·log10(offset_ghz + max(fc, min_ghz)) + intercept`
//! so that frequency enters deterministically inside a band.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{LinkState, Scenario};

/// Order of the large-scale parameters in correlation matrices.
pub const LSP_NAMES: [&str; 7] = ["sf", "k", "ds", "asd", "asa", "zsd", "zsa"];

pub type CorrMatrix = [[f64; 7]; 7];

const BASELINE_JSON: &str = include_str!("../../tables/baseline.json");
const EGBSM_JSON: &str = include_str!("../../tables/egbsm.json");

/// Names of the table sets compiled into the binary.
pub const BUILTIN_SETS: [&str; 2] = ["baseline", "egbsm"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FreqCoef {
    Const(f64),
    Log {
        slope: f64,
        intercept: f64,
        #[serde(default = "one")]
        offset_ghz: f64,
        #[serde(default)]
        min_ghz: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl FreqCoef {
    pub fn eval(&self, frequency_hz: f64) -> f64 {
        match *self {
            FreqCoef::Const(v) => v,
            FreqCoef::Log {
                slope,
                intercept,
                offset_ghz,
                min_ghz,
            } => slope * (offset_ghz + (frequency_hz / 1e9).max(min_ghz)).log10() + intercept,
        }
    }
}

/// Mean and standard deviation of a log10-distributed parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub mu: FreqCoef,
    pub sigma: FreqCoef,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalStats {
    pub mean: f64,
    pub std: f64,
}

/// Intra-cluster K-factor statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IckStats {
    pub mean: f64,
    pub std: f64,
}

/// Parameters for one scenario, propagation state and band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    /// log10(DS / 1 s)
    pub ds: LogNormal,
    /// log10(spread / 1°)
    pub asd: LogNormal,
    pub asa: LogNormal,
    pub zsd: LogNormal,
    pub zsa: LogNormal,
    /// Ricean K-factor in dB (LOS records only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_factor_db: Option<NormalStats>,
    pub shadow_fading_std_db: f64,
    pub clusters: usize,
    pub rays_per_cluster: usize,
    pub cluster_shadowing_std_db: f64,
    pub delay_scaling: f64,
    pub xpr_db: NormalStats,
    /// Intra-cluster spreads, degrees.
    pub cluster_asd_deg: f64,
    pub cluster_asa_deg: f64,
    pub cluster_zsa_deg: f64,
    /// Pairwise correlations keyed `"a:b"` with names from [`LSP_NAMES`];
    /// missing pairs are uncorrelated.
    #[serde(default)]
    pub correlations: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ick: Option<IckStats>,
    #[serde(skip)]
    pub(crate) corr_sqrt: Option<CorrMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEntry {
    pub min_hz: f64,
    pub max_hz: f64,
    pub los: StateRecord,
    pub nlos: StateRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub scenario: Scenario,
    pub bands: Vec<BandEntry>,
}

/// A complete, validated table set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSet {
    pub name: String,
    /// Where the numbers come from (e.g. "38.901 baseline" or "config placeholder").
    pub provenance: String,
    #[serde(default)]
    pub notes: Vec<String>,
    pub scenarios: Vec<ScenarioEntry>,
}

impl TableSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut set: TableSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "baseline" => Self::from_json(BASELINE_JSON),
            "egbsm" => Self::from_json(EGBSM_JSON),
            other => Err(Error::Table(format!("no built-in table set named `{other}`"))),
        }
    }

    /// A built-in set name, or otherwise a path to a JSON file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if BUILTIN_SETS.contains(&name_or_path) {
            Self::builtin(name_or_path)
        } else {
            Self::load(Path::new(name_or_path))
        }
    }

    pub fn entry(&self, scenario: Scenario) -> Option<&ScenarioEntry> {
        self.scenarios.iter().find(|e| e.scenario == scenario)
    }

    /// Band containing `frequency_hz`; the first matching band wins at shared edges.
    pub fn band(&self, scenario: Scenario, frequency_hz: f64) -> Result<&BandEntry> {
        let entry = self
            .entry(scenario)
            .ok_or_else(|| Error::Table(format!("table set `{}` has no {scenario} entry", self.name)))?;
        entry
            .bands
            .iter()
            .find(|b| frequency_hz >= b.min_hz && frequency_hz <= b.max_hz)
            .ok_or(Error::FrequencyOutOfRange {
                scenario: scenario.to_string(),
                state: "any".into(),
                frequency_hz,
            })
    }

    pub fn record(&self, scenario: Scenario, state: LinkState, frequency_hz: f64) -> Result<&StateRecord> {
        let band = self.band(scenario, frequency_hz).map_err(|e| match e {
            Error::FrequencyOutOfRange { scenario, frequency_hz, .. } => Error::FrequencyOutOfRange {
                scenario,
                state: state.to_string(),
                frequency_hz,
            },
            other => other,
        })?;
        Ok(match state {
            LinkState::Los => &band.los,
            LinkState::Nlos => &band.nlos,
        })
    }

    /// Checks ranges, band contiguity and correlation matrices, and caches
    /// each matrix square root.
    pub fn validate(&mut self) -> Result<()> {
        let name = self.name.clone();
        for entry in &mut self.scenarios {
            if entry.bands.is_empty() {
                return Err(Error::Table(format!("{name}: {} has no bands", entry.scenario)));
            }
            entry.bands.sort_by(|a, b| a.min_hz.total_cmp(&b.min_hz));
            for w in entry.bands.windows(2) {
                if w[1].min_hz > w[0].max_hz {
                    return Err(Error::Table(format!(
                        "{name}: {} has a gap between {} and {} Hz",
                        entry.scenario, w[0].max_hz, w[1].min_hz
                    )));
                }
            }
            for band in &mut entry.bands {
                if !(band.min_hz > 0.0 && band.max_hz > band.min_hz) {
                    return Err(Error::Table(format!(
                        "{name}: {} band [{}, {}] is empty",
                        entry.scenario, band.min_hz, band.max_hz
                    )));
                }
                let probe = [band.min_hz, 0.5 * (band.min_hz + band.max_hz), band.max_hz];
                for (state, rec) in [("LOS", &mut band.los), ("NLOS", &mut band.nlos)] {
                    let ctx = format!("{name}: {} {state} [{:.3e}, {:.3e}] Hz", entry.scenario, band.min_hz, band.max_hz);
                    validate_record(rec, &probe, state == "LOS").map_err(|m| Error::Table(format!("{ctx}: {m}")))?;
                }
            }
        }
        Ok(())
    }
}

fn validate_record(rec: &mut StateRecord, probe: &[f64], los: bool) -> std::result::Result<(), String> {
    if rec.clusters < 1 {
        return Err("cluster count must be >= 1".into());
    }
    if rec.rays_per_cluster < 1 {
        return Err("rays per cluster must be >= 1".into());
    }
    if !(rec.delay_scaling > 1.0) {
        return Err(format!("delay scaling r_tau must be > 1, got {}", rec.delay_scaling));
    }
    if los && rec.k_factor_db.is_none() {
        return Err("LOS record needs k_factor_db".into());
    }
    for (label, v) in [
        ("shadow_fading_std_db", rec.shadow_fading_std_db),
        ("cluster_shadowing_std_db", rec.cluster_shadowing_std_db),
        ("xpr std", rec.xpr_db.std),
        ("cluster_asd_deg", rec.cluster_asd_deg),
        ("cluster_asa_deg", rec.cluster_asa_deg),
        ("cluster_zsa_deg", rec.cluster_zsa_deg),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(format!("{label} must be finite and >= 0, got {v}"));
        }
    }
    for (label, p) in [("ds", rec.ds), ("asd", rec.asd), ("asa", rec.asa), ("zsd", rec.zsd), ("zsa", rec.zsa)] {
        for &f in probe {
            let (mu, sigma) = (p.mu.eval(f), p.sigma.eval(f));
            if !mu.is_finite() || !(sigma >= 0.0) {
                return Err(format!("{label} statistics invalid at {f} Hz (mu {mu}, sigma {sigma})"));
            }
        }
    }
    if let Some(ick) = rec.ick {
        let lo = 1.0 / rec.rays_per_cluster as f64;
        if !(ick.mean >= lo && ick.mean <= 1.0) || !(ick.std >= 0.0) {
            return Err(format!("ICK mean {} outside [{lo}, 1] or negative std", ick.mean));
        }
    }
    let m = correlation_matrix(&rec.correlations)?;
    rec.corr_sqrt = Some(matrix_sqrt_psd(&m)?);
    Ok(())
}

fn lsp_index(name: &str) -> Option<usize> {
    LSP_NAMES.iter().position(|n| *n == name)
}

/// Builds the symmetric unit-diagonal matrix from named pairs.
pub fn correlation_matrix(pairs: &BTreeMap<String, f64>) -> std::result::Result<CorrMatrix, String> {
    let mut m = [[0.0; 7]; 7];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (key, &v) in pairs {
        let (a, b) = key
            .split_once(':')
            .ok_or_else(|| format!("correlation key `{key}` is not of the form a:b"))?;
        let (i, j) = match (lsp_index(a), lsp_index(b)) {
            (Some(i), Some(j)) if i != j => (i, j),
            _ => return Err(format!("correlation key `{key}` names unknown or identical parameters")),
        };
        if !(-1.0..=1.0).contains(&v) {
            return Err(format!("correlation `{key}` = {v} outside [-1, 1]"));
        }
        if m[i][j] != 0.0 && m[i][j] != v {
            return Err(format!("correlation `{key}` given twice with different values"));
        }
        m[i][j] = v;
        m[j][i] = v;
    }
    Ok(m)
}

/// Symmetric square root of a PSD matrix via eigendecomposition. Eigenvalues
/// down to -1e-9 are treated as zero; anything more negative is rejected.
pub fn matrix_sqrt_psd(m: &CorrMatrix) -> std::result::Result<CorrMatrix, String> {
    let mat = SMatrix::<f64, 7, 7>::from_fn(|i, j| m[i][j]);
    if (mat - mat.transpose()).abs().max() > 1e-12 {
        return Err("correlation matrix is not symmetric".into());
    }
    let eig = SymmetricEigen::new(mat);
    let min = eig.eigenvalues.min();
    if min < -1e-9 {
        return Err(format!("correlation matrix is not positive semi-definite (min eigenvalue {min:.4})"));
    }
    let floor = 1e-12 * eig.eigenvalues.max();
    let d = SMatrix::<f64, 7, 7>::from_diagonal(&eig.eigenvalues.map(|l| if l > floor { l.sqrt() } else { 0.0 }));
    let s = eig.eigenvectors * d * eig.eigenvectors.transpose();
    let mut out = [[0.0; 7]; 7];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = s[(i, j)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sets_validate() {
        for name in BUILTIN_SETS {
            let set = TableSet::builtin(name).unwrap();
            assert!(!set.scenarios.is_empty());
        }
    }

    #[test]
    fn rank_one_sqrt_squares_back() {
        let mut pairs = BTreeMap::new();
        for i in 0..7 {
            for j in i + 1..7 {
                pairs.insert(format!("{}:{}", LSP_NAMES[i], LSP_NAMES[j]), 1.0);
            }
        }
        let m = correlation_matrix(&pairs).unwrap();
        let s = matrix_sqrt_psd(&m).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let v: f64 = (0..7).map(|k| s[i][k] * s[k][j]).sum();
                assert!((v - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut pairs = BTreeMap::new();
        pairs.insert("ds:asa".to_string(), 0.9);
        pairs.insert("ds:asd".to_string(), 0.9);
        pairs.insert("asa:asd".to_string(), -0.9);
        let m = correlation_matrix(&pairs).unwrap();
        assert!(matrix_sqrt_psd(&m).is_err());
    }

    #[test]
    fn rejects_bad_keys() {
        let mut pairs = BTreeMap::new();
        pairs.insert("ds-asa".to_string(), 0.5);
        assert!(correlation_matrix(&pairs).is_err());
        let mut pairs = BTreeMap::new();
        pairs.insert("ds:ds".to_string(), 0.5);
        assert!(correlation_matrix(&pairs).is_err());
    }

    #[test]
    fn log_coefficient_evaluates() {
        let c = FreqCoef::Log {
            slope: -0.24,
            intercept: -7.14,
            offset_ghz: 1.0,
            min_ghz: 0.0,
        };
        let expected = -0.24 * (1.0f64 + 9.0).log10() - 7.14;
        assert!((c.eval(9e9) - expected).abs() < 1e-15);
        let clamped = FreqCoef::Log {
            slope: 1.0,
            intercept: 0.0,
            offset_ghz: 0.0,
            min_ghz: 6.0,
        };
        assert!((clamped.eval(2e9) - 6f64.log10()).abs() < 1e-15);
    }
}
