//! Post-generation statistics: Gini sparsity, spatial correlation, received
//! SNR and empirical CDFs.

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{ChannelRealization, PropagationPath};
use crate::config::{Combining, GiniGranularity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniResult {
    pub value: f64,
    pub count: usize,
}

/// Gini index of a non-negative power vector.
pub fn gini_index(powers: &[f64]) -> Result<GiniResult> {
    if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("Gini input must be finite and non-negative".into()));
    }
    let total: f64 = powers.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("Gini input has no positive entry".into()));
    }
    let mut c = powers.to_vec();
    c.sort_by(f64::total_cmp);
    let n = c.len() as f64;
    let s: f64 = c
        .iter()
        .enumerate()
        .map(|(i, &x)| x / total * ((n - (i + 1) as f64 + 0.5) / n))
        .sum();
    Ok(GiniResult {
        value: 1.0 - 2.0 * s,
        count: c.len(),
    })
}

/// Per-path or per-cluster powers of element pair (0, 0).
pub fn component_powers(r: &ChannelRealization, granularity: GiniGranularity) -> Vec<f64> {
    let paths = if r.links.is_empty() { &[][..] } else { r.link(0, 0) };
    match granularity {
        GiniGranularity::Path => paths.iter().map(PropagationPath::power).collect(),
        GiniGranularity::Cluster => {
            let mut ids: Vec<usize> = paths.iter().map(|p| p.cluster).collect();
            ids.sort_unstable();
            ids.dedup();
            ids.iter()
                .map(|&id| paths.iter().filter(|p| p.cluster == id).map(PropagationPath::power).sum())
                .collect()
        }
    }
}

pub fn realization_gini(r: &ChannelRealization, granularity: GiniGranularity) -> Result<GiniResult> {
    gini_index(&component_powers(r, granularity))
}

/// `n` frequency offsets spread evenly across `bandwidth`, centered on 0.
pub fn frequency_grid(bandwidth: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -bandwidth / 2.0 + bandwidth * i as f64 / (n - 1) as f64)
        .collect()
}

/// `H(f) = Σ a·exp(−j2πfτ)` at each offset frequency.
pub fn frequency_response(paths: &[PropagationPath], freqs: &[f64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|&f| {
            paths
                .iter()
                .map(|p| p.amplitude * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * p.delay))
                .sum()
        })
        .collect()
}

/// Frequency responses of every receive element from transmit element `tx`.
pub fn rx_element_responses(r: &ChannelRealization, tx: usize, freqs: &[f64]) -> Vec<Vec<Complex64>> {
    (0..r.n_rx).map(|rx| frequency_response(r.link(tx, rx), freqs)).collect()
}

/// `|Σ h_i h_j*| / √(Σ|h_i|² Σ|h_j|²)` over all stacked samples.
pub fn spatial_correlation(h_i: &[Complex64], h_j: &[Complex64]) -> Result<f64> {
    if h_i.len() != h_j.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", h_i.len(), h_j.len())));
    }
    let cross: Complex64 = h_i.iter().zip(h_j).map(|(a, b)| a * b.conj()).sum();
    let ei: f64 = h_i.iter().map(|c| c.norm_sqr()).sum();
    let ej: f64 = h_j.iter().map(|c| c.norm_sqr()).sum();
    if !(ei > 0.0 && ej > 0.0) {
        return Err(Error::InvalidArgument("zero-energy element".into()));
    }
    Ok((cross.norm() / (ei * ej).sqrt()).min(1.0))
}

/// Thermal noise power over `bandwidth_hz`, dBm.
pub fn thermal_noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Path loss is already inside the amplitudes, so it appears only through
/// the path energy.
pub fn received_snr(r: &ChannelRealization, tx_power_dbm: f64, noise_power_dbm: f64, combining: Combining) -> f64 {
    let energy = match combining {
        Combining::SingleAntenna => r.link_energy(0, 0),
        Combining::Sum => (0..r.n_tx)
            .flat_map(|t| (0..r.n_rx).map(move |x| (t, x)))
            .map(|(t, x)| r.link_energy(t, x))
            .sum(),
    };
    tx_power_dbm + 10.0 * energy.log10() - noise_power_dbm
}

/// Sorted `(value, k/N)` pairs.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}

/// Kolmogorov–Smirnov distance between the samples and `N(mean, std²)`.
pub fn ks_statistic_normal(samples: &[f64], mean: f64, std: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let normal = Normal::new(mean, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::test_support::{path, realization};
    use crate::channel::{synthesize_cir_samples, DelayMode};
    use crate::random::SeedTree;
    use proptest::prelude::*;

    #[test]
    fn gini_examples() {
        assert_eq!(gini_index(&[1.0, 1.0, 1.0, 1.0]).unwrap().value, 0.0);
        let g = gini_index(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.value, 0.75);
        assert_eq!(g.count, 4);
        assert!(gini_index(&[0.0, 0.0]).is_err());
        assert!(gini_index(&[]).is_err());
        assert!(gini_index(&[1.0, -1.0]).is_err());
    }

    proptest! {
        #[test]
        fn gini_invariances(v in prop::collection::vec(0.0..10.0f64, 1..40), a in 0.01..100.0f64, rot in 0usize..40) {
            prop_assume!(v.iter().sum::<f64>() > 1e-6);
            let g = gini_index(&v).unwrap().value;
            prop_assert!((0.0..1.0).contains(&g));
            let scaled: Vec<f64> = v.iter().map(|x| x * a).collect();
            prop_assert!((gini_index(&scaled).unwrap().value - g).abs() < 1e-12);
            let mut p = v.clone();
            p.rotate_left(rot % v.len());
            prop_assert!((gini_index(&p).unwrap().value - g).abs() < 1e-12);
            let mut z = v.clone();
            z.push(0.0);
            prop_assert!(gini_index(&z).unwrap().value > g);
        }
    }

    #[test]
    fn correlation_examples() {
        let h: Vec<Complex64> = (0..50).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        assert!((spatial_correlation(&h, &h).unwrap() - 1.0).abs() < 1e-12);
        let shifted: Vec<Complex64> = h.iter().map(|c| c * Complex64::from_polar(1.0, 0.7)).collect();
        assert!((spatial_correlation(&h, &shifted).unwrap() - 1.0).abs() < 1e-12);
        assert!(spatial_correlation(&h, &vec![Complex64::new(0.0, 0.0); 50]).is_err());

        let mut s = SeedTree::new(5).derive_stream("corr", 0);
        let mut draw = || Complex64::new(s.standard_normal(), s.standard_normal());
        let a: Vec<Complex64> = (0..10_000).map(|_| draw()).collect();
        let b: Vec<Complex64> = (0..10_000).map(|_| draw()).collect();
        let r = spatial_correlation(&a, &b).unwrap();
        assert!(r < 0.05, "{r}");
        assert!((r - spatial_correlation(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn snr_examples() {
        let one = realization(vec![path(0, 0, 0.0, Complex64::new(1.0, 0.0))], DelayMode::Relative);
        assert!((received_snr(&one, 0.0, -100.0, Combining::Sum) - 100.0).abs() < 1e-12);
        let two = realization(
            vec![
                path(0, 0, 0.0, Complex64::new(1.0, 0.0)),
                path(1, 0, 1e-7, Complex64::new(0.0, 1.0)),
            ],
            DelayMode::Relative,
        );
        let gain = received_snr(&two, 0.0, -100.0, Combining::SingleAntenna) - 100.0;
        assert!((gain - 10.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn snr_matches_tap_energy() {
        let r = realization(
            vec![
                path(0, 0, 0.0, Complex64::new(0.3, -0.2)),
                path(0, 1, 20e-9, Complex64::new(-0.1, 0.5)),
                path(1, 0, 55e-9, Complex64::new(0.05, 0.02)),
            ],
            DelayMode::Relative,
        );
        let grid = synthesize_cir_samples(&r, &[0.0], 100e6, 16).unwrap();
        let tap_db = 10.0 * grid.energy(0, 0).log10();
        let snr = received_snr(&r, 0.0, 0.0, Combining::Sum);
        assert!((snr - tap_db).abs() < 1e-6);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[5.0]), vec![(5.0, 1.0)]);
        let c = empirical_cdf(&[3.0, 1.0, 4.0, 2.0]);
        assert_eq!(c.iter().map(|p| p.1).collect::<Vec<_>>(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 4.0]);

        let mut s = SeedTree::new(8).derive_stream("cdf", 0);
        let xs: Vec<f64> = (0..10_000).map(|_| s.normal(2.0, 1.5)).collect();
        let cdf = empirical_cdf(&xs);
        let at_mean = cdf.iter().take_while(|p| p.0 <= 2.0).last().unwrap().1;
        assert!((at_mean - 0.5).abs() < 0.02);
        assert!(ks_statistic_normal(&xs, 2.0, 1.5).unwrap() < 0.02);
        assert!(ks_statistic_normal(&xs, 3.0, 1.5).unwrap() > 0.2);
    }

    #[test]
    fn frequency_response_of_single_path() {
        let p = [path(0, 0, 10e-9, Complex64::new(2.0, 0.0))];
        let h = frequency_response(&p, &[0.0, 25e6]);
        assert!((h[0] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((h[1] - Complex64::from_polar(2.0, -std::f64::consts::PI / 2.0)).norm() < 1e-12);
        assert_eq!(frequency_grid(100e6, 3), vec![-50e6, 0.0, 50e6]);
    }
}
