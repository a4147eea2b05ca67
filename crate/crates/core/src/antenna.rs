//! Antenna elements, field patterns and arrays.
//!
//! Element boresight is the local +x axis (zenith 90°, azimuth 0°). Panels
//! lie in the local y-z plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DirectionPair, Orientation, Position3};

/// Radiation pattern family of an element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    Isotropic,
    /// Three-sector pattern with 65° half-power beamwidth and 30 dB floor.
    Sector38901 { peak_gain_dbi: f64 },
    /// `peak · cos^q(ψ)` over the front hemisphere, ψ the angle off boresight.
    CosQ { q: f64, peak_gain_dbi: f64 },
}

impl Default for PatternKind {
    fn default() -> Self {
        PatternKind::Isotropic
    }
}

impl PatternKind {
    /// Linear power gain at a direction given in the element's local frame.
    pub fn power_gain(&self, local: DirectionPair) -> f64 {
        match *self {
            PatternKind::Isotropic => 1.0,
            PatternKind::Sector38901 { peak_gain_dbi } => {
                let theta = local.zenith.to_degrees();
                let phi = local.azimuth.to_degrees();
                let a_v = -(12.0 * ((theta - 90.0) / 65.0).powi(2)).min(30.0);
                let a_h = -(12.0 * (phi / 65.0).powi(2)).min(30.0);
                let a = -(-(a_v + a_h)).min(30.0);
                10f64.powf((peak_gain_dbi + a) / 10.0)
            }
            PatternKind::CosQ { q, peak_gain_dbi } => {
                let cos_psi = local.unit_vector().x;
                if cos_psi < 0.0 {
                    0.0
                } else if q == 0.0 {
                    10f64.powf(peak_gain_dbi / 10.0)
                } else {
                    10f64.powf(peak_gain_dbi / 10.0) * cos_psi.powf(q)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PatternKind::CosQ { q, peak_gain_dbi } if !(q >= 0.0) || !peak_gain_dbi.is_finite() => {
                Err(Error::InvalidArgument(format!("cos-q exponent must be >= 0, got {q}")))
            }
            PatternKind::Sector38901 { peak_gain_dbi } if !peak_gain_dbi.is_finite() => Err(
                Error::InvalidArgument("sector peak gain must be finite".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// One radiating element of an array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaElement {
    /// Position in the array frame, meters.
    pub position: Position3,
    pub pattern: PatternKind,
    /// Polarization slant angle, radians (0 = vertical / θ-polarized).
    pub slant: f64,
}

impl AntennaElement {
    pub fn isotropic(position: Position3) -> Self {
        Self {
            position,
            pattern: PatternKind::Isotropic,
            slant: 0.0,
        }
    }
}

/// Two polarization components of an element's far field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPattern {
    pub f_theta: Complex64,
    pub f_phi: Complex64,
}

impl FieldPattern {
    pub fn power_gain(&self) -> f64 {
        self.f_theta.norm_sqr() + self.f_phi.norm_sqr()
    }

    pub fn as_array(&self) -> [Complex64; 2] {
        [self.f_theta, self.f_phi]
    }
}

/// Field pattern of an element for a direction in the element's local frame.
pub fn element_field_pattern(element: &AntennaElement, direction: DirectionPair) -> FieldPattern {
    let amp = element.pattern.power_gain(direction).sqrt();
    let (s, c) = element.slant.sin_cos();
    FieldPattern {
        f_theta: Complex64::new(amp * c, 0.0),
        f_phi: Complex64::new(amp * s, 0.0),
    }
}

/// Ordered set of elements placed at a reference point with an orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray {
    pub position: Position3,
    pub orientation: Orientation,
    pub elements: Vec<AntennaElement>,
    /// Nominal element spacing, meters (metadata).
    pub spacing: f64,
}

impl AntennaArray {
    pub fn single(position: Position3, pattern: PatternKind) -> Self {
        Self {
            position,
            orientation: Orientation::default(),
            elements: vec![AntennaElement {
                position: Position3::ORIGIN,
                pattern,
                slant: 0.0,
            }],
            spacing: 0.0,
        }
    }

    /// Uniform linear array along the local y axis, centered on element 0
    /// when `centered` is false (element 0 at the reference) or on the
    /// aperture center otherwise.
    pub fn ula(
        position: Position3,
        orientation: Orientation,
        count: usize,
        spacing: f64,
        pattern: PatternKind,
        centered: bool,
    ) -> Self {
        let offset = if centered {
            (count.saturating_sub(1)) as f64 * spacing / 2.0
        } else {
            0.0
        };
        let elements = (0..count)
            .map(|i| AntennaElement {
                position: Position3::new(0.0, i as f64 * spacing - offset, 0.0),
                pattern,
                slant: 0.0,
            })
            .collect();
        Self {
            position,
            orientation,
            elements,
            spacing,
        }
    }

    /// Uniform planar array in the local y-z plane, row-major from the
    /// bottom row, centered on the reference point.
    pub fn upa(
        position: Position3,
        orientation: Orientation,
        rows: usize,
        cols: usize,
        spacing: f64,
        pattern: PatternKind,
    ) -> Self {
        let y0 = (cols.saturating_sub(1)) as f64 * spacing / 2.0;
        let z0 = (rows.saturating_sub(1)) as f64 * spacing / 2.0;
        let mut elements = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                elements.push(AntennaElement {
                    position: Position3::new(0.0, c as f64 * spacing - y0, r as f64 * spacing - z0),
                    pattern,
                    slant: 0.0,
                });
            }
        }
        Self {
            position,
            orientation,
            elements,
            spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidArgument("array has no elements".into()));
        }
        for e in &self.elements {
            e.pattern.validate()?;
        }
        Ok(())
    }

    /// Element offset from the reference point, global frame.
    pub fn element_offset(&self, index: usize) -> Position3 {
        self.orientation.to_global(self.elements[index].position)
    }

    pub fn element_position(&self, index: usize) -> Position3 {
        self.position + self.element_offset(index)
    }

    /// Largest distance between any two elements.
    pub fn aperture(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.elements.iter().enumerate() {
            for b in &self.elements[i + 1..] {
                d = d.max(a.position.distance(b.position));
            }
        }
        d
    }

    pub fn global_to_local_direction(&self, direction: DirectionPair) -> DirectionPair {
        global_to_local_direction(self, direction)
    }

    /// Field of element `index` for a global direction, expressed in the
    /// global spherical basis.
    pub fn field_global(&self, index: usize, direction: DirectionPair) -> FieldPattern {
        let element = &self.elements[index];
        if self.orientation.is_identity() {
            return element_field_pattern(element, direction);
        }
        let local = self.orientation.direction_to_local(direction);
        let f = element_field_pattern(element, local);
        let th_l = self.orientation.to_global(local.theta_hat());
        let ph_l = self.orientation.to_global(local.phi_hat());
        let (th_g, ph_g) = (direction.theta_hat(), direction.phi_hat());
        FieldPattern {
            f_theta: f.f_theta * th_l.dot(th_g) + f.f_phi * ph_l.dot(th_g),
            f_phi: f.f_theta * th_l.dot(ph_g) + f.f_phi * ph_l.dot(ph_g),
        }
    }
}

/// Express a global-frame direction in the array's local frame.
pub fn global_to_local_direction(array: &AntennaArray, direction: DirectionPair) -> DirectionPair {
    array.orientation.direction_to_local(direction)
}
