use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antenna::FieldPattern;

/// 2×2 Jones matrix mapping (θ, φ) field components from the departure side
/// to the arrival side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationMatrix {
    pub theta_theta: Complex64,
    pub theta_phi: Complex64,
    pub phi_theta: Complex64,
    pub phi_phi: Complex64,
}

impl PolarizationMatrix {
    pub fn diagonal(theta: Complex64, phi: Complex64) -> Self {
        Self {
            theta_theta: theta,
            theta_phi: Complex64::new(0.0, 0.0),
            phi_theta: Complex64::new(0.0, 0.0),
            phi_phi: phi,
        }
    }

    pub fn identity() -> Self {
        Self::co_polar(Complex64::new(1.0, 0.0))
    }

    /// Same gain on both co-polar entries, no cross-polar coupling.
    pub fn co_polar(gain: Complex64) -> Self {
        Self::diagonal(gain, gain)
    }

    /// Specular LOS interaction `diag(1, -1)`.
    pub fn line_of_sight() -> Self {
        Self::diagonal(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0))
    }

    /// Random-phase NLOS matrix from a cross-polar power ratio (linear) and
    /// four initial phases (θθ, θφ, φθ, φφ), radians. `xpr = ∞` drops the
    /// cross-polar terms.
    pub fn from_xpr(xpr_linear: f64, phases: [f64; 4]) -> Self {
        let cross = if xpr_linear.is_infinite() {
            0.0
        } else {
            (1.0 / xpr_linear).sqrt()
        };
        Self {
            theta_theta: Complex64::from_polar(1.0, phases[0]),
            theta_phi: Complex64::from_polar(cross, phases[1]),
            phi_theta: Complex64::from_polar(cross, phases[2]),
            phi_phi: Complex64::from_polar(1.0, phases[3]),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            theta_theta: self.theta_theta * s,
            theta_phi: self.theta_phi * s,
            phi_theta: self.phi_theta * s,
            phi_phi: self.phi_phi * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.theta_theta, self.theta_phi, self.phi_theta, self.phi_phi]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `M · v`
    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.theta_theta * v[0] + self.theta_phi * v[1],
            self.phi_theta * v[0] + self.phi_phi * v[1],
        ]
    }

    /// `wᵀ · M`
    pub fn left_mul(&self, w: [Complex64; 2]) -> [Complex64; 2] {
        [
            w[0] * self.theta_theta + w[1] * self.phi_theta,
            w[0] * self.theta_phi + w[1] * self.phi_phi,
        ]
    }

    /// `wᵀ · M · v`
    pub fn bilinear(&self, w: [Complex64; 2], v: [Complex64; 2]) -> Complex64 {
        let mv = self.mul_vec(v);
        w[0] * mv[0] + w[1] * mv[1]
    }

    /// `F_rxᵀ · M · F_tx`
    pub fn couple(&self, rx: &FieldPattern, tx: &FieldPattern) -> Complex64 {
        self.bilinear(rx.as_array(), tx.as_array())
    }
}
