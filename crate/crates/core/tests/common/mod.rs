#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tapc_core::single_cell::SingleCellProblem;

pub const NOISE: f64 = 3.981071705534972e-21;
pub const B: f64 = 18e6;

/// Gains log-uniform in `[1e-13, 1e-9]`, demands uniform in `[0.5, 3]` Mbit/s.
pub fn random_instance(rng: &mut ChaCha8Rng, users: usize, cap: f64) -> SingleCellProblem {
    let gains = (0..users)
        .map(|_| 10f64.powf(rng.random_range(-13.0..-9.0)))
        .collect();
    let demands = (0..users).map(|_| rng.random_range(0.5e6..3e6)).collect();
    SingleCellProblem::new(gains, demands, NOISE, B, cap).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}
