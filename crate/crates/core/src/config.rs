//! Scenario configuration files (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::{AntennaArray, PatternKind};
use crate::channel::ExtensionSet;
use crate::engine::LinkOptions;
use crate::error::Result;
use crate::geometry::{Orientation, Position3};
use crate::isac::{RcsModel, TargetConfig};
use crate::node::PruneConfig;
use crate::ris::{CodebookKind, RisConfig};
use crate::scenario::{LinkState, Scenario, TableSet};
use crate::xlmimo::SnSParams;

/// Every problem found in a configuration, not only the first.
#[derive(Debug, Error)]
#[error("invalid configuration:\n  - {}", errors.join("\n  - "))]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl ConfigError {
    fn single(msg: impl Into<String>) -> Self {
        Self { errors: vec![msg.into()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "layout", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrayLayout {
    #[default]
    Single,
    Ula {
        count: usize,
        #[serde(default = "half")]
        spacing_wavelengths: f64,
        #[serde(default)]
        centered: bool,
    },
    Upa {
        rows: usize,
        cols: usize,
        #[serde(default = "half")]
        spacing_wavelengths: f64,
    },
}

fn half() -> f64 {
    0.5
}

/// Tx or Rx array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub position: Position3,
    #[serde(default)]
    pub velocity: Position3,
    /// Bearing, downtilt, slant, degrees.
    #[serde(default)]
    pub orientation_deg: [f64; 3],
    #[serde(default)]
    pub array: ArrayLayout,
    #[serde(default)]
    pub pattern: PatternKind,
    /// Polarization slant of every element, degrees.
    #[serde(default)]
    pub slant_deg: f64,
}

impl ArrayConfig {
    pub fn at(position: Position3) -> Self {
        Self {
            position,
            velocity: Position3::ORIGIN,
            orientation_deg: [0.0; 3],
            array: ArrayLayout::Single,
            pattern: PatternKind::Isotropic,
            slant_deg: 0.0,
        }
    }

    pub fn element_count(&self) -> usize {
        match self.array {
            ArrayLayout::Single => 1,
            ArrayLayout::Ula { count, .. } => count,
            ArrayLayout::Upa { rows, cols, .. } => rows * cols,
        }
    }

    fn check(&self, name: &str, errors: &mut Vec<String>) {
        if !self.position.is_finite() || !self.velocity.is_finite() {
            errors.push(format!("{name}: position and velocity must be finite"));
        }
        if self.orientation_deg.iter().any(|a| !a.is_finite()) || !self.slant_deg.is_finite() {
            errors.push(format!("{name}: orientation must be finite"));
        }
        match self.array {
            ArrayLayout::Ula { spacing_wavelengths, .. } | ArrayLayout::Upa { spacing_wavelengths, .. }
                if !(spacing_wavelengths > 0.0) =>
            {
                errors.push(format!("{name}.array: spacing must be > 0"))
            }
            _ => {}
        }
        if self.element_count() == 0 {
            errors.push(format!("{name}.array: needs at least one element"));
        }
        if let Err(e) = self.pattern.validate() {
            errors.push(format!("{name}.pattern: {e}"));
        }
    }

    pub fn build(&self, wavelength_m: f64) -> Result<AntennaArray> {
        let [b, d, s] = self.orientation_deg;
        let orientation = Orientation::from_degrees(b, d, s);
        let mut array = match self.array {
            ArrayLayout::Single => AntennaArray {
                orientation,
                ..AntennaArray::single(self.position, self.pattern)
            },
            ArrayLayout::Ula {
                count,
                spacing_wavelengths,
                centered,
            } => AntennaArray::ula(
                self.position,
                orientation,
                count,
                spacing_wavelengths * wavelength_m,
                self.pattern,
                centered,
            ),
            ArrayLayout::Upa {
                rows,
                cols,
                spacing_wavelengths,
            } => AntennaArray::upa(
                self.position,
                orientation,
                rows,
                cols,
                spacing_wavelengths * wavelength_m,
                self.pattern,
            ),
        };
        for e in &mut array.elements {
            e.slant = self.slant_deg.to_radians();
        }
        array.validate()?;
        Ok(array)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearFieldConfig {
    /// Range of the first-bounce fraction of the excess path.
    pub split_range: (f64, f64),
}

impl Default for NearFieldConfig {
    fn default() -> Self {
        Self { split_range: (0.3, 0.7) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// One RCS distribution of the `rcs-cdf` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsSeries {
    pub label: String,
    pub frequency_hz: f64,
    pub rcs: RcsModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsCdfConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Monostatic aspect azimuth in the target frame, degrees.
    #[serde(default)]
    pub aspect_deg: f64,
    /// CDF rows written per series (evenly spaced in probability).
    #[serde(default = "default_cdf_points")]
    pub cdf_points: usize,
    pub series: Vec<RcsSeries>,
}

fn default_cdf_points() -> usize {
    1000
}

fn default_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XlCorrConfig {
    /// Frequency points across the bandwidth.
    pub frequency_points: usize,
}

impl Default for XlCorrConfig {
    fn default() -> Self {
        Self { frequency_points: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combining {
    SingleAntenna,
    #[default]
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisSnrConfig {
    /// Square panel sides; K = side².
    pub sides: Vec<usize>,
    pub codebooks: Vec<CodebookKind>,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    /// Overrides thermal noise over the bandwidth when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_dbm: Option<f64>,
    pub combining: Combining,
}

impl Default for RisSnrConfig {
    fn default() -> Self {
        Self {
            sides: vec![4, 8, 16],
            codebooks: CodebookKind::ALL.to_vec(),
            tx_power_dbm: 30.0,
            noise_figure_db: 7.0,
            noise_power_dbm: None,
            combining: Combining::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GiniGranularity {
    #[default]
    Path,
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsityGiniConfig {
    pub frequencies_hz: Vec<f64>,
    pub table_sets: Vec<String>,
    pub granularity: GiniGranularity,
}

impl Default for SparsityGiniConfig {
    fn default() -> Self {
        Self {
            frequencies_hz: vec![6e9, 13e9],
            table_sets: vec!["baseline".into(), "egbsm".into()],
            granularity: GiniGranularity::Path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenCirConfig {
    pub csv: bool,
    pub binary: bool,
}

impl Default for GenCirConfig {
    fn default() -> Self {
        Self { csv: true, binary: true }
    }
}

fn default_tables() -> String {
    "baseline".into()
}

fn default_bandwidth() -> f64 {
    100e6
}

fn default_drops() -> u64 {
    100
}

/// A full scenario: layout, arrays, node, extensions and experiment
/// settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub carrier_frequency_hz: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    /// Built-in table set name or path to a table file.
    #[serde(default = "default_tables")]
    pub tables: String,
    #[serde(default = "default_drops")]
    pub drops: u64,
    #[serde(default)]
    pub seed: u64,
    pub tx: ArrayConfig,
    pub rx: ArrayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris: Option<RisConfig>,
    #[serde(default)]
    pub extensions: ExtensionSet,
    #[serde(default)]
    pub link: LinkOptions,
    #[serde(default)]
    pub sns: SnSParams,
    #[serde(default)]
    pub near_field: NearFieldConfig,
    #[serde(default)]
    pub prune: PruneConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcs_cdf: Option<RcsCdfConfig>,
    #[serde(default)]
    pub xl_corr: XlCorrConfig,
    #[serde(default)]
    pub ris_snr: RisSnrConfig,
    #[serde(default)]
    pub sparsity_gini: SparsityGiniConfig,
    #[serde(default)]
    pub gen_cir: GenCirConfig,
}

impl ScenarioConfig {
    /// Minimal configuration: single isotropic antennas, no extensions.
    pub fn new(scenario: Scenario, carrier_frequency_hz: f64, tx: Position3, rx: Position3) -> Self {
        Self {
            scenario,
            carrier_frequency_hz,
            bandwidth_hz: default_bandwidth(),
            tables: default_tables(),
            drops: default_drops(),
            seed: 0,
            tx: ArrayConfig::at(tx),
            rx: ArrayConfig::at(rx),
            target: None,
            ris: None,
            extensions: ExtensionSet::default(),
            link: LinkOptions::default(),
            sns: SnSParams::default(),
            near_field: NearFieldConfig::default(),
            prune: PruneConfig::default(),
            output: OutputConfig::default(),
            rcs_cdf: None,
            xl_corr: XlCorrConfig::default(),
            ris_snr: RisSnrConfig::default(),
            sparsity_gini: SparsityGiniConfig::default(),
            gen_cir: GenCirConfig::default(),
        }
    }

    /// All cross-field problems, empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(self.carrier_frequency_hz > 0.0) || !self.carrier_frequency_hz.is_finite() {
            errors.push(format!("carrier_frequency_hz {} must be > 0", self.carrier_frequency_hz));
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            errors.push(format!("bandwidth_hz {} must be > 0", self.bandwidth_hz));
        }
        self.tx.check("tx", &mut errors);
        self.rx.check("rx", &mut errors);
        if self.target.is_some() && self.ris.is_some() {
            errors.push("`target` and `ris` are both set; a link has at most one intermediate node".into());
        }
        if self.extensions.isac && self.target.is_none() {
            errors.push("extensions.isac needs a `target`".into());
        }
        if self.extensions.ris && self.ris.is_none() {
            errors.push("extensions.ris needs a `ris` panel".into());
        }
        if let Some(t) = &self.target {
            if let Err(e) = t.validate() {
                errors.push(format!("target: {e}"));
            }
            for (name, p) in [("tx", self.tx.position), ("rx", self.rx.position)] {
                if p.distance(t.position) == 0.0 {
                    errors.push(format!("target: position coincides with {name}"));
                }
            }
        }
        if let Some(r) = &self.ris {
            if let Err(e) = r.validate() {
                errors.push(format!("ris: {e}"));
            }
        }
        if self.tx.position.distance(self.rx.position) == 0.0 && self.target.is_none() {
            errors.push("tx and rx share a position and there is no target".into());
        }
        if let Err(e) = self.sns.validate() {
            errors.push(format!("sns: {e}"));
        }
        let (lo, hi) = self.near_field.split_range;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            errors.push(format!("near_field.split_range ({lo}, {hi}) must satisfy 0 < lo <= hi < 1"));
        }
        if let Err(e) = self.prune.validate() {
            errors.push(format!("prune: {e}"));
        }
        match TableSet::resolve(&self.tables) {
            Err(e) => errors.push(format!("tables: {e}")),
            Ok(set) => {
                if self.carrier_frequency_hz > 0.0 {
                    for state in [LinkState::Los, LinkState::Nlos] {
                        if let Err(e) = crate::scenario::lookup_table(&set, self.scenario, state, self.carrier_frequency_hz)
                        {
                            errors.push(format!("tables: {e}"));
                        }
                    }
                }
            }
        }
        for name in &self.sparsity_gini.table_sets {
            if let Err(e) = TableSet::resolve(name) {
                errors.push(format!("sparsity_gini.table_sets: {e}"));
            }
        }
        if self.sparsity_gini.frequencies_hz.iter().any(|f| !(*f > 0.0)) {
            errors.push("sparsity_gini.frequencies_hz must be > 0".into());
        }
        if self.ris_snr.sides.contains(&0) {
            errors.push("ris_snr.sides must be >= 1".into());
        }
        if self.xl_corr.frequency_points == 0 {
            errors.push("xl_corr.frequency_points must be >= 1".into());
        }
        if let Some(r) = &self.rcs_cdf {
            if r.samples == 0 || r.cdf_points == 0 {
                errors.push("rcs_cdf.samples and rcs_cdf.cdf_points must be >= 1".into());
            }
            for s in &r.series {
                if !(s.frequency_hz > 0.0) {
                    errors.push(format!("rcs_cdf.series[{}]: frequency must be > 0", s.label));
                }
                if let Err(e) = s.rcs.validate() {
                    errors.push(format!("rcs_cdf.series[{}]: {e}", s.label));
                }
            }
        }
        errors
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let errors = self.problems();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors })
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ConfigError::single(format!("parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}

/// Read, parse and validate a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> std::result::Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::single(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}
