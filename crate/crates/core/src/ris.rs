//! RIS panels: element grid, codebooks and the re-radiation pattern used as
//! the node response of the Tx → RIS → Rx channel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaArray, PatternKind};
use crate::channel::{ChannelRealization, DelayMode};
use crate::engine::{apply_link_ick, draw_link, finish_link, LinkEnd, LinkSpec, NodeLinks, PreparedScenario};
use crate::error::{Error, Result};
use crate::geometry::{wavelength, DirectionPair, Orientation, Position3};
use crate::node::{concatenate, prune_clusters, ConcatMode, NodeResponse, NodeUnits, PruneConfig};
use crate::polarization::PolarizationMatrix;
use crate::random::SeedTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    /// All phases zero.
    SpecularZeros,
    /// Continuous phases quantized to {0, π}.
    OneBit,
    /// Co-phasing at the destination.
    #[default]
    Continuous,
}

impl CodebookKind {
    pub const ALL: [CodebookKind; 3] = [CodebookKind::SpecularZeros, CodebookKind::OneBit, CodebookKind::Continuous];

    pub fn as_str(self) -> &'static str {
        match self {
            CodebookKind::SpecularZeros => "specular_zeros",
            CodebookKind::OneBit => "one_bit",
            CodebookKind::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookSpec {
    pub kind: CodebookKind,
    pub source: Position3,
    pub destination: Position3,
}

/// Element grid of a panel. The panel normal is the local +x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    pub array: AntennaArray,
    pub rows: usize,
    pub cols: usize,
}

impl RisPanel {
    pub fn new(
        position: Position3,
        orientation: Orientation,
        rows: usize,
        cols: usize,
        spacing: f64,
        pattern: PatternKind,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!("RIS grid {rows}x{cols} must be at least 1x1")));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidArgument(format!("RIS spacing must be > 0, got {spacing}")));
        }
        pattern.validate()?;
        Ok(Self {
            array: AntennaArray::upa(position, orientation, rows, cols, spacing, pattern),
            rows,
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.array.len()
    }

    pub fn is_empty(&self) -> bool {
        self.array.is_empty()
    }

    pub fn position(&self) -> Position3 {
        self.array.position
    }

    pub fn normal(&self) -> Position3 {
        self.array.orientation.to_global(Position3::new(1.0, 0.0, 0.0))
    }

    fn element_gain(&self, index: usize, direction: DirectionPair) -> f64 {
        let local = self.array.orientation.direction_to_local(direction);
        self.array.elements[index].pattern.power_gain(local)
    }
}

/// Per-element phases in [0, 2π).
pub fn compute_codebook(panel: &RisPanel, spec: &CodebookSpec, wavelength_m: f64) -> Result<Vec<f64>> {
    let k = 2.0 * std::f64::consts::PI / wavelength_m;
    let continuous = |p: Position3| (k * (p.distance(spec.source) + p.distance(spec.destination))).rem_euclid(std::f64::consts::TAU);
    if spec.kind != CodebookKind::SpecularZeros {
        let n = panel.normal();
        for (name, q) in [("source", spec.source), ("destination", spec.destination)] {
            if (q - panel.position()).dot(n) <= 0.0 {
                return Err(Error::InvalidArgument(format!("codebook {name} {q:?} is behind the panel")));
            }
        }
    }
    Ok((0..panel.len())
        .map(|i| {
            let p = panel.array.element_position(i);
            match spec.kind {
                CodebookKind::SpecularZeros => 0.0,
                CodebookKind::Continuous => continuous(p),
                CodebookKind::OneBit => {
                    let phi = continuous(p);
                    let to_pi = (phi - std::f64::consts::PI).abs();
                    let to_zero = phi.min(std::f64::consts::TAU - phi);
                    if to_pi < to_zero {
                        std::f64::consts::PI
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect())
}

/// Scalar re-radiation gain for one direction pair (directions point from
/// the panel toward the source and the destination).
pub fn ris_pattern(
    panel: &RisPanel,
    phases: &[f64],
    incoming: DirectionPair,
    outgoing: DirectionPair,
    wavelength_m: f64,
) -> Complex64 {
    let k = 2.0 * std::f64::consts::PI / wavelength_m;
    let u = incoming.unit_vector() + outgoing.unit_vector();
    (0..panel.len())
        .map(|i| {
            let g = (panel.element_gain(i, incoming) * panel.element_gain(i, outgoing)).sqrt();
            Complex64::from_polar(g, phases[i] + k * panel.array.element_offset(i).dot(u))
        })
        .sum()
}

/// A configured panel as a node response.
#[derive(Debug, Clone)]
pub struct RisResponse {
    pub panel: RisPanel,
    pub phases: Vec<f64>,
    pub wavelength: f64,
}

impl RisResponse {
    pub fn new(panel: RisPanel, phases: Vec<f64>, wavelength_m: f64) -> Result<Self> {
        if phases.len() != panel.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases for {} elements",
                phases.len(),
                panel.len()
            )));
        }
        Ok(Self {
            panel,
            phases,
            wavelength: wavelength_m,
        })
    }

    /// `rows × K` matrix of `√G_k(Ω)·exp(j(φ_k)·with_phase + jk p_k·û)`.
    fn steering(&self, dirs: &[DirectionPair], with_phase: bool) -> DMatrix<Complex64> {
        let k = 2.0 * std::f64::consts::PI / self.wavelength;
        let offsets: Vec<Position3> = (0..self.panel.len()).map(|i| self.panel.array.element_offset(i)).collect();
        DMatrix::from_fn(dirs.len(), offsets.len(), |r, e| {
            let d = dirs[r];
            let phi = if with_phase { self.phases[e] } else { 0.0 };
            Complex64::from_polar(
                self.panel.element_gain(e, d).sqrt(),
                phi + k * offsets[e].dot(d.unit_vector()),
            )
        })
    }
}

impl NodeResponse for RisResponse {
    fn position(&self) -> Position3 {
        self.panel.position()
    }

    fn units(&self) -> NodeUnits {
        NodeUnits::Dimensionless
    }

    fn response(&self, incoming: DirectionPair, outgoing: DirectionPair) -> PolarizationMatrix {
        PolarizationMatrix::co_polar(ris_pattern(&self.panel, &self.phases, incoming, outgoing, self.wavelength))
    }

    fn response_grid(&self, incoming: &[DirectionPair], outgoing: &[DirectionPair]) -> Vec<PolarizationMatrix> {
        if incoming.is_empty() || outgoing.is_empty() {
            return Vec::new();
        }
        let a = self.steering(incoming, false);
        let b = self.steering(outgoing, true);
        let g = a * b.transpose();
        // row-major by incoming
        let mut out = Vec::with_capacity(incoming.len() * outgoing.len());
        for i in 0..incoming.len() {
            for j in 0..outgoing.len() {
                out.push(PolarizationMatrix::co_polar(g[(i, j)]));
            }
        }
        out
    }
}

fn default_spacing() -> f64 {
    0.5
}

fn default_pattern() -> PatternKind {
    PatternKind::CosQ {
        q: 1.0,
        peak_gain_dbi: 0.0,
    }
}

/// RIS panel as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisConfig {
    pub position: Position3,
    /// Bearing, downtilt, slant in degrees; the normal is the rotated +x axis.
    #[serde(default)]
    pub orientation_deg: [f64; 3],
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
    #[serde(default = "default_pattern")]
    pub pattern: PatternKind,
    #[serde(default)]
    pub codebook: CodebookKind,
    /// Phase-matching focus; defaults to the Tx and Rx positions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_source: Option<Position3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_destination: Option<Position3>,
}

impl RisConfig {
    pub fn orientation(&self) -> Orientation {
        let [b, d, s] = self.orientation_deg;
        Orientation::from_degrees(b, d, s)
    }

    pub fn panel(&self, rows: usize, cols: usize, wavelength_m: f64) -> Result<RisPanel> {
        RisPanel::new(
            self.position,
            self.orientation(),
            rows,
            cols,
            self.spacing_wavelengths * wavelength_m,
            self.pattern,
        )
    }

    pub fn codebook_spec(&self, kind: CodebookKind, tx: Position3, rx: Position3) -> CodebookSpec {
        CodebookSpec {
            kind,
            source: self.focus_source.unwrap_or(tx),
            destination: self.focus_destination.unwrap_or(rx),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("ris rows and cols must be >= 1".into()));
        }
        if !(self.spacing_wavelengths > 0.0) {
            return Err(Error::InvalidArgument("ris spacing must be > 0".into()));
        }
        if !self.position.is_finite() || self.orientation_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("ris position and orientation must be finite".into()));
        }
        self.pattern.validate()
    }
}

/// Tx → RIS and RIS → Rx sub-links of one drop, as generated.
pub fn ris_sublinks(
    prep: &PreparedScenario,
    ris: &RisConfig,
    seeds: &SeedTree,
) -> Result<(ChannelRealization, ChannelRealization)> {
    let cfg = &prep.config;
    let spec_a = LinkSpec {
        label: "tx_ris",
        scenario: cfg.scenario,
        tables: &prep.tables,
        frequency: cfg.carrier_frequency_hz,
        tx: LinkEnd::Array {
            array: &prep.tx,
            velocity: cfg.tx.velocity,
        },
        rx: LinkEnd::Node { position: ris.position },
        options: cfg.link,
        delay_mode: DelayMode::Absolute,
        eliminate_weak: false,
    };
    let spec_b = LinkSpec {
        label: "ris_rx",
        tx: LinkEnd::Node { position: ris.position },
        rx: LinkEnd::Array {
            array: &prep.rx,
            velocity: cfg.rx.velocity,
        },
        ..spec_a
    };
    let ext = prep.sublink_extensions();
    let mut out = Vec::with_capacity(2);
    for spec in [spec_a, spec_b] {
        let link_seeds = seeds.child(spec.label, 0);
        let mut draw = draw_link(&spec, &link_seeds).map_err(Error::in_stage("draw"))?;
        let ick = ext.ick
            && apply_link_ick(&mut draw, &mut link_seeds.derive_stream("ick", 0)).map_err(Error::in_stage("ick"))?;
        let mut r = finish_link(&spec, &draw, &ext, &link_seeds)?;
        r.extensions.sparsity = ick;
        r.extensions.ris = true;
        out.push(r);
    }
    let second = out.pop().unwrap();
    let first = out.pop().unwrap();
    Ok((first, second))
}

/// Concatenate already pruned sub-links through a panel configured with
/// `kind`.
pub fn concatenate_ris(
    pruned_first: &ChannelRealization,
    pruned_second: &ChannelRealization,
    panel: RisPanel,
    spec: &CodebookSpec,
    frequency_hz: f64,
) -> Result<ChannelRealization> {
    let lambda = wavelength(frequency_hz);
    let phases = compute_codebook(&panel, spec, lambda)?;
    let response = RisResponse::new(panel, phases, lambda)?;
    let mut r = concatenate(pruned_first, &response, pruned_second, ConcatMode::CoherentElement)?;
    r.label = "ris".into();
    r.extensions.ris = true;
    Ok(r)
}

pub fn prune_pair(
    first: &ChannelRealization,
    second: &ChannelRealization,
    prune: &PruneConfig,
) -> (ChannelRealization, ChannelRealization) {
    (prune_clusters(first, prune), prune_clusters(second, prune))
}

/// Independent sub-links, pruning and coherent-element concatenation.
pub fn build_ris_channel(prep: &PreparedScenario, ris: &RisConfig, seeds: &SeedTree) -> Result<NodeLinks> {
    let (first, second) = ris_sublinks(prep, ris, seeds)?;
    let (pa, pb) = prune_pair(&first, &second, &prep.config.prune);
    let lambda = wavelength(prep.config.carrier_frequency_hz);
    let panel = ris.panel(ris.rows, ris.cols, lambda)?;
    let spec = ris.codebook_spec(ris.codebook, prep.tx.position, prep.rx.position);
    let concatenated = concatenate_ris(&pa, &pb, panel, &spec, prep.config.carrier_frequency_hz)
        .map_err(Error::in_stage("concatenate"))?;
    Ok(NodeLinks {
        first,
        second,
        concatenated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LAMBDA: f64 = 0.01;

    fn panel(rows: usize, cols: usize) -> RisPanel {
        RisPanel::new(
            Position3::ORIGIN,
            Orientation::default(),
            rows,
            cols,
            LAMBDA / 2.0,
            PatternKind::CosQ {
                q: 1.0,
                peak_gain_dbi: 0.0,
            },
        )
        .unwrap()
    }

    fn spec(kind: CodebookKind) -> CodebookSpec {
        CodebookSpec {
            kind,
            source: Position3::new(5.0, -3.0, 1.0),
            destination: Position3::new(4.0, 6.0, -0.5),
        }
    }

    #[test]
    fn specular_zeros_are_zero() {
        let p = compute_codebook(&panel(3, 5), &spec(CodebookKind::SpecularZeros), LAMBDA).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_element_codebooks_agree_up_to_quantization() {
        let p = panel(1, 1);
        let c = compute_codebook(&p, &spec(CodebookKind::Continuous), LAMBDA).unwrap()[0];
        let b = compute_codebook(&p, &spec(CodebookKind::OneBit), LAMBDA).unwrap()[0];
        let expect = if (c - std::f64::consts::PI).abs() < c.min(std::f64::consts::TAU - c) {
            std::f64::consts::PI
        } else {
            0.0
        };
        assert_eq!(b, expect);
    }

    #[test]
    fn two_by_two_matches_path_lengths() {
        let p = panel(2, 2);
        let s = spec(CodebookKind::Continuous);
        let phases = compute_codebook(&p, &s, LAMBDA).unwrap();
        let h = LAMBDA / 4.0;
        let positions = [
            Position3::new(0.0, -h, -h),
            Position3::new(0.0, h, -h),
            Position3::new(0.0, -h, h),
            Position3::new(0.0, h, h),
        ];
        for (phi, q) in phases.iter().zip(positions) {
            let len = q.distance(s.source) + q.distance(s.destination);
            let expect = (2.0 * std::f64::consts::PI / LAMBDA * len).rem_euclid(std::f64::consts::TAU);
            assert!((phi - expect).abs() < 1e-9, "{phi} {expect}");
        }
    }

    #[test]
    fn focus_behind_panel_is_rejected() {
        let mut s = spec(CodebookKind::Continuous);
        s.destination = Position3::new(-1.0, 0.0, 0.0);
        assert!(compute_codebook(&panel(2, 2), &s, LAMBDA).is_err());
        s.kind = CodebookKind::SpecularZeros;
        assert!(compute_codebook(&panel(2, 2), &s, LAMBDA).is_ok());
    }

    #[test]
    fn single_element_pattern_is_gain_product() {
        let p = panel(1, 1);
        let i = DirectionPair::from_degrees(30.0, 80.0);
        let o = DirectionPair::from_degrees(-50.0, 100.0);
        let g = ris_pattern(&p, &[0.0], i, o, LAMBDA);
        let expect = (i.unit_vector().x * o.unit_vector().x).sqrt();
        assert!((g.norm() - expect).abs() < 1e-12);
        assert!(g.im.abs() < 1e-12);
    }

    fn gain_sum(p: &RisPanel, i: DirectionPair, o: DirectionPair) -> f64 {
        (0..p.len()).map(|k| (p.element_gain(k, i) * p.element_gain(k, o)).sqrt()).sum()
    }

    #[test]
    fn continuous_codebook_is_coherent_at_far_focus() {
        let p = panel(8, 8);
        let s = CodebookSpec {
            kind: CodebookKind::Continuous,
            source: Position3::new(5e4, -3e4, 1e4),
            destination: Position3::new(4e4, 6e4, -5e3),
        };
        let phases = compute_codebook(&p, &s, LAMBDA).unwrap();
        let i = DirectionPair::from_vector(s.source);
        let o = DirectionPair::from_vector(s.destination);
        let g = ris_pattern(&p, &phases, i, o, LAMBDA);
        let full = gain_sum(&p, i, o);
        assert!((g.norm() - full).abs() < 1e-3 * full, "{} {}", g.norm(), full);
    }

    #[test]
    fn specular_geometry_is_coherent_with_zero_phases() {
        let p = panel(6, 7);
        let i = DirectionPair::from_degrees(35.0, 70.0);
        let ui = i.unit_vector();
        let o = DirectionPair::from_vector(Position3::new(ui.x, -ui.y, -ui.z));
        let g = ris_pattern(&p, &vec![0.0; p.len()], i, o, LAMBDA);
        assert!((g.norm() - gain_sum(&p, i, o)).abs() < 1e-9);
    }

    #[test]
    fn one_bit_keeps_most_of_the_coherent_gain() {
        let mut total = 0.0;
        let n = 50;
        for t in 0..n {
            let a = t as f64 * 0.7;
            let s = CodebookSpec {
                kind: CodebookKind::Continuous,
                source: Position3::new(30.0, 10.0 * a.sin(), 5.0 * a.cos()),
                destination: Position3::new(20.0, -15.0 * a.cos(), 3.0 * (2.0 * a).sin()),
            };
            let p = panel(16, 16);
            let i = DirectionPair::from_vector(s.source);
            let o = DirectionPair::from_vector(s.destination);
            let c = compute_codebook(&p, &s, LAMBDA).unwrap();
            let b = compute_codebook(&p, &CodebookSpec { kind: CodebookKind::OneBit, ..s }, LAMBDA).unwrap();
            let gc = ris_pattern(&p, &c, i, o, LAMBDA).norm();
            let gb = ris_pattern(&p, &b, i, o, LAMBDA).norm();
            total += gb / gc;
        }
        assert!(total / n as f64 >= 2.0 / std::f64::consts::PI - 0.05, "{}", total / n as f64);
    }

    #[test]
    fn grid_matches_pointwise() {
        let p = panel(3, 4);
        let phases: Vec<f64> = (0..p.len()).map(|i| i as f64 * 0.37).collect();
        let r = RisResponse::new(p, phases, LAMBDA).unwrap();
        let inc: Vec<DirectionPair> = (0..5).map(|i| DirectionPair::from_degrees(-60.0 + 25.0 * i as f64, 80.0)).collect();
        let out: Vec<DirectionPair> = (0..4).map(|i| DirectionPair::from_degrees(70.0 - 30.0 * i as f64, 95.0)).collect();
        let grid = r.response_grid(&inc, &out);
        for (a, &i) in inc.iter().enumerate() {
            for (b, &o) in out.iter().enumerate() {
                let g = grid[a * out.len() + b];
                let e = r.response(i, o);
                assert!((g.theta_theta - e.theta_theta).norm() < 1e-10);
                assert!((g.phi_phi - e.phi_phi).norm() < 1e-10);
                assert_eq!(g.theta_phi.norm(), 0.0);
            }
        }
    }

    fn front() -> impl Strategy<Value = DirectionPair> {
        (-85.0..85.0f64, 5.0..175.0f64).prop_map(|(a, z)| DirectionPair::from_degrees(a, z))
    }

    proptest! {
        #[test]
        fn pattern_bounded_and_reciprocal(i in front(), o in front(), seed in 0u64..1000) {
            let p = panel(4, 5);
            let phases: Vec<f64> = (0..p.len()).map(|k| ((seed + 7 * k as u64) % 13) as f64 * 0.5).collect();
            let g = ris_pattern(&p, &phases, i, o, LAMBDA).norm();
            prop_assert!(g <= gain_sum(&p, i, o) + 1e-9);
            let swapped = ris_pattern(&p, &phases, o, i, LAMBDA).norm();
            prop_assert!((g - swapped).abs() < 1e-9);
        }
    }
}
