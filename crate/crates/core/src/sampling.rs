//! Seeded random sampling used by the evidence-gathering routines.
//!
//! Every sampler is driven by a [`ChaCha8Rng`] so reports are reproducible from a seed.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

/// Default seed when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 42;

/// Generator type behind every sampler.
pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in `[0, 1)`.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Standard normal sample (Box-Muller).
pub fn normal(rng: &mut impl RngCore) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * math::PI * u2)
}

/// Uniform direction on the unit sphere of `R^dim`.
pub fn unit_vector(rng: &mut impl RngCore, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let n = math::sqrt(v.iter().map(|x| x * x).sum());
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform point in the closed ball `B(center, radius)`.
pub fn in_ball(rng: &mut impl RngCore, center: &[f64], radius: f64) -> Vec<f64> {
    let dim = center.len();
    let dir = unit_vector(rng, dim);
    let rho = radius * libm::pow(uniform(rng), 1.0 / dim.max(1) as f64);
    center.iter().zip(&dir).map(|(c, d)| c + rho * d).collect()
}

/// Deterministic direction grid: `count` equally spaced points of `[-1, 1]` in dimension one,
/// `count` equally spaced angles in dimension two, seeded sphere samples (plus `±e_i`) above.
pub fn direction_grid(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let count = count.max(2);
    match dim {
        0 => Vec::new(),
        1 => (0..count)
            .map(|k| alloc::vec![-1.0 + 2.0 * k as f64 / (count - 1) as f64])
            .collect(),
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * math::PI * k as f64 / count as f64;
                alloc::vec![math::cos(a), math::sin(a)]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(count + 2 * dim);
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut e = alloc::vec![0.0; dim];
                    e[i] = s;
                    out.push(e);
                }
            }
            let mut r = rng(seed);
            while out.len() < count.max(2 * dim) {
                out.push(unit_vector(&mut r, dim));
            }
            out
        }
    }
}
