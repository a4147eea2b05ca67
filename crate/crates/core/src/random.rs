//! Hierarchical, schedule-independent random streams.
//!
//! Every stochastic step draws from its own stream, derived by hashing the
//! master seed together with a path of `(label, index)` pairs. Two streams
//! share state only if their full derivation paths are equal, so drops can
//! run in any order or in parallel and toggling one extension never shifts
//! the draws of another step.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Retry budget for resampling a clipped normal before clamping.
pub const CLIP_RETRIES: u32 = 64;

/// Master seed plus derivation path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTree {
    pub master_seed: u64,
    pub path: Vec<(String, u64)>,
}

impl SeedTree {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    /// Sub-tree one level deeper.
    pub fn child(&self, label: &str, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push((label.to_owned(), index));
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    /// Stream for `(stage, index)` below this node.
    pub fn derive_stream(&self, stage: &str, index: u64) -> Stream {
        derive_stream(self, stage, index)
    }

    fn digest(&self, stage: &str, index: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"egbsm-seed-v1");
        h.update(self.master_seed.to_le_bytes());
        // length-prefix every label so paths cannot alias
        for (label, i) in self.path.iter().map(|(l, i)| (l.as_str(), *i)).chain([(stage, index)]) {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
            h.update(i.to_le_bytes());
        }
        h.finalize().into()
    }
}

pub fn derive_stream(tree: &SeedTree, stage: &str, index: u64) -> Stream {
    Stream {
        rng: ChaCha12Rng::from_seed(tree.digest(stage, index)),
        clipped_draws: 0,
        clamped: 0,
    }
}

/// A deterministic random stream with clipping bookkeeping.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha12Rng,
    clipped_draws: u64,
    clamped: u64,
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

impl Stream {
    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.rng.random();
        lo + (hi - lo) * u
    }

    /// Uniform on the open interval (0, 1).
    pub fn open_unit(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// `N(mean, std²)`; always consumes one draw, even for `std = 0`.
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let z = self.standard_normal();
        if std == 0.0 {
            mean
        } else {
            mean + std * z
        }
    }

    /// Normal draw restricted to `[lo, hi]` by resampling; after
    /// [`CLIP_RETRIES`] misses the last draw is clamped.
    pub fn clipped_normal(&mut self, mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
        self.clipped_draws += 1;
        let mut x = self.normal(mean, std);
        for _ in 0..CLIP_RETRIES {
            if (lo..=hi).contains(&x) {
                return x;
            }
            x = self.normal(mean, std);
        }
        if (lo..=hi).contains(&x) {
            return x;
        }
        self.clamped += 1;
        x.clamp(lo, hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        let u: f64 = self.rng.random();
        u < p
    }

    /// ±1 with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.bernoulli(0.5) {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniformly random permutation of `0..n` (Fisher-Yates).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.random_range(0..=i);
            p.swap(i, j);
        }
        p
    }

    pub fn clamp_counts(&self) -> (u64, u64) {
        (self.clamped, self.clipped_draws)
    }

    /// Error if more than `max_fraction` of clipped draws had to be clamped.
    pub fn check_clamping(&self, max_fraction: f64) -> Result<()> {
        if self.clipped_draws > 0 && self.clamped as f64 > max_fraction * self.clipped_draws as f64 {
            return Err(Error::ExcessiveClamping {
                clamped: self.clamped,
                draws: self.clipped_draws,
                max_fraction,
            });
        }
        Ok(())
    }
}

pub fn sample_normal(stream: &mut Stream, mean: f64, std: f64) -> f64 {
    stream.normal(mean, std)
}

pub fn sample_uniform(stream: &mut Stream, lo: f64, hi: f64) -> f64 {
    stream.uniform(lo, hi)
}

pub fn sample_clipped_normal(stream: &mut Stream, mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
    stream.clipped_normal(mean, std, lo, hi)
}
