//! Seeded random inputs.
//!
//! All randomness comes from SplitMix64 (Steele, Lea & Flood), a 64-bit
//! counter-based generator: the `k`-th output is a fixed bijective mix of
//! `seed + k·0x9E3779B97F4A7C15`. Normal deviates use the ziggurat sampler of
//! `rand_distr`. Ensemble members derive their seed as `master ^ index`, so
//! results do not depend on evaluation order.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

pub type SeededRng = SplitMix64;

pub fn rng(seed: u64) -> SeededRng {
    SplitMix64::seed_from_u64(seed)
}

/// Per-member seed for ensemble member `index`.
pub fn member_seed(master: u64, index: u64) -> u64 {
    master ^ index
}

pub fn normal_vector(rng: &mut SeededRng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Matrix with i.i.d. standard normal entries, filled column by column.
pub fn normal_matrix(rng: &mut SeededRng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

/// `W₂⁻¹S` with `S = (G + Gᵀ)/2` Gaussian, which satisfies `W₂M = MᵀW₂`.
pub fn h2_symmetric_matrix(rng: &mut SeededRng, w2_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let g = normal_matrix(rng, w2_inv.nrows());
    let s = (&g + g.transpose()) * 0.5;
    w2_inv * s
}

/// Diagonal entries drawn log-uniformly from `[1/spread, spread]`.
pub fn log_uniform_diagonal(rng: &mut SeededRng, n: usize, spread: f64) -> Vec<f64> {
    let span = libm::log(spread);
    (0..n).map(|_| libm::exp(rng.gen_range(-span..=span))).collect()
}

/// Random matrix of rank at most `rank`.
pub fn low_rank_matrix(rng: &mut SeededRng, n: usize, rank: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for _ in 0..rank {
        let u = normal_vector(rng, n);
        let v = normal_vector(rng, n);
        m += u * v.transpose();
    }
    m
}
