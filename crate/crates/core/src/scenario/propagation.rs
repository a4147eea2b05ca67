use crate::error::{Error, Result};
use crate::geometry::SPEED_OF_LIGHT;

use super::{LinkState, Scenario};

/// Free-space path loss, dB.
pub fn fspl_db(distance_m: f64, frequency_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10()
}

/// Antenna heights used by the breakpoint path-loss forms, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkHeights {
    pub bs: f64,
    pub ut: f64,
}

impl LinkHeights {
    pub fn typical(scenario: Scenario) -> Self {
        match scenario {
            Scenario::UMa => Self { bs: 25.0, ut: 1.5 },
            Scenario::InH | Scenario::InF => Self { bs: 3.0, ut: 1.0 },
            _ => Self { bs: 10.0, ut: 1.5 },
        }
    }
}

/// LOS probability versus 2D distance.
pub fn los_probability(scenario: Scenario, distance_2d: f64) -> f64 {
    let d = distance_2d.max(0.0);
    let p = match scenario {
        Scenario::UMi | Scenario::SMa => {
            if d <= 18.0 {
                1.0
            } else {
                18.0 / d + (-d / 36.0).exp() * (1.0 - 18.0 / d)
            }
        }
        Scenario::UMa => {
            if d <= 18.0 {
                1.0
            } else {
                18.0 / d + (-d / 63.0).exp() * (1.0 - 18.0 / d)
            }
        }
        Scenario::InH | Scenario::InF => {
            // mixed office
            if d <= 1.2 {
                1.0
            } else if d < 6.5 {
                (-(d - 1.2) / 4.7).exp()
            } else {
                (-(d - 6.5) / 32.6).exp() * 0.32
            }
        }
        Scenario::RMa => {
            if d <= 10.0 {
                1.0
            } else {
                (-(d - 10.0) / 1000.0).exp()
            }
        }
    };
    p.clamp(0.0, 1.0)
}

/// Scenario path loss with typical heights for the scenario.
pub fn path_loss(scenario: Scenario, state: LinkState, distance_3d: f64, frequency_hz: f64) -> Result<f64> {
    let h = LinkHeights::typical(scenario);
    let dz = h.bs - h.ut;
    let d2 = (distance_3d * distance_3d - dz * dz).max(0.0).sqrt();
    path_loss_with_heights(scenario, state, d2, distance_3d, h, frequency_hz)
}

/// Scenario path loss, dB.
pub fn path_loss_with_heights(
    scenario: Scenario,
    state: LinkState,
    distance_2d: f64,
    distance_3d: f64,
    heights: LinkHeights,
    frequency_hz: f64,
) -> Result<f64> {
    if !(distance_3d > 0.0) {
        return Err(Error::InvalidArgument(format!("path loss needs distance > 0, got {distance_3d}")));
    }
    let fc = frequency_hz / 1e9;
    let lg = f64::log10;
    let d3 = distance_3d;
    // effective heights with a 1 m environment height, floored to keep the breakpoint positive
    let bp = |h: LinkHeights| 4.0 * (h.bs - 1.0).max(0.1) * (h.ut - 1.0).max(0.1) * frequency_hz / SPEED_OF_LIGHT;
    let dh2 = (heights.bs - heights.ut).powi(2);
    let pl = match scenario {
        Scenario::UMi | Scenario::SMa => {
            let d_bp = bp(heights);
            let los = if distance_2d <= d_bp {
                32.4 + 21.0 * lg(d3) + 20.0 * lg(fc)
            } else {
                32.4 + 40.0 * lg(d3) + 20.0 * lg(fc) - 9.5 * lg(d_bp * d_bp + dh2)
            };
            match state {
                LinkState::Los => los,
                LinkState::Nlos => los.max(35.3 * lg(d3) + 22.4 + 21.3 * lg(fc) - 0.3 * (heights.ut - 1.5)),
            }
        }
        Scenario::UMa => {
            let d_bp = bp(heights);
            let los = if distance_2d <= d_bp {
                28.0 + 22.0 * lg(d3) + 20.0 * lg(fc)
            } else {
                28.0 + 40.0 * lg(d3) + 20.0 * lg(fc) - 9.0 * lg(d_bp * d_bp + dh2)
            };
            match state {
                LinkState::Los => los,
                LinkState::Nlos => los.max(13.54 + 39.08 * lg(d3) + 20.0 * lg(fc) - 0.6 * (heights.ut - 1.5)),
            }
        }
        Scenario::InH => {
            let los = 32.4 + 17.3 * lg(d3) + 20.0 * lg(fc);
            match state {
                LinkState::Los => los,
                LinkState::Nlos => los.max(38.3 * lg(d3) + 17.30 + 24.9 * lg(fc)),
            }
        }
        Scenario::RMa | Scenario::InF => {
            return Err(Error::Table(format!("no path-loss model shipped for {scenario}")));
        }
    };
    Ok(pl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_reference_value() {
        assert!((fspl_db(1.0, 1e9) - 32.45).abs() < 0.01);
        let doubled = fspl_db(200.0, 3e9) - fspl_db(100.0, 3e9);
        assert!((doubled - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn los_probability_edges() {
        for s in [Scenario::UMi, Scenario::UMa, Scenario::InH] {
            assert_eq!(los_probability(s, 0.0), 1.0);
        }
        assert_eq!(los_probability(Scenario::InH, 1.2), 1.0);
        let expected = 18.0 / 50.0 + (-50.0f64 / 36.0).exp() * (1.0 - 18.0 / 50.0);
        assert!((los_probability(Scenario::UMi, 50.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn los_probability_is_non_increasing() {
        for s in [Scenario::UMi, Scenario::UMa, Scenario::InH, Scenario::RMa] {
            let mut prev = 1.0;
            for i in 0..=5000 {
                let p = los_probability(s, i as f64 * 0.1);
                assert!((0.0..=1.0).contains(&p));
                assert!(p <= prev + 1e-15, "{s} at {}", i as f64 * 0.1);
                prev = p;
            }
        }
    }

    #[test]
    fn umi_los_anchor() {
        // below the breakpoint: 32.4 + 21 log10(d) + 20 log10(fc)
        let h = LinkHeights { bs: 10.0, ut: 1.5 };
        let d2 = 50.0;
        let d3 = (d2 * d2 + 8.5f64 * 8.5).sqrt();
        let pl = path_loss_with_heights(Scenario::UMi, LinkState::Los, d2, d3, h, 3.5e9).unwrap();
        let independent = 32.4 + 21.0 * d3.log10() + 20.0 * 3.5f64.log10();
        assert!((pl - independent).abs() < 1e-12);
        // beyond the breakpoint d'BP = 4·9·0.5·fc/c
        let bp = 4.0 * 9.0 * 0.5 * 3.5e9 / SPEED_OF_LIGHT;
        let d2 = 400.0;
        let d3 = (d2 * d2 + 8.5f64 * 8.5).sqrt();
        let pl = path_loss_with_heights(Scenario::UMi, LinkState::Los, d2, d3, h, 3.5e9).unwrap();
        let independent = 32.4 + 40.0 * d3.log10() + 20.0 * 3.5f64.log10() - 9.5 * (bp * bp + 8.5 * 8.5).log10();
        assert!((pl - independent).abs() < 1e-12);
    }

    #[test]
    fn nlos_never_below_los() {
        for s in [Scenario::UMi, Scenario::UMa, Scenario::InH] {
            for d in [5.0, 30.0, 120.0, 600.0] {
                let los = path_loss(s, LinkState::Los, d, 6e9).unwrap();
                let nlos = path_loss(s, LinkState::Nlos, d, 6e9).unwrap();
                assert!(nlos >= los);
            }
        }
    }

    #[test]
    fn zero_distance_is_an_error() {
        assert!(path_loss(Scenario::InH, LinkState::Los, 0.0, 6e9).is_err());
    }
}
