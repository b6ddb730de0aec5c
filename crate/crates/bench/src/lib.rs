//! Shared helpers for the criterion benchmarks: deterministic pseudo-random
//! tensors without pulling a RNG crate into the bench profile.

use num_complex::Complex64 as C64;
use tempent_core::DenseTensor;

/// Deterministic tensor filled from a splitmix-style stream.
pub fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
    let len: usize = shape.iter().product();
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let data: Vec<C64> = (0..len).map(|_| C64::new(next(), next())).collect();
    DenseTensor::from_vec(shape, data).unwrap()
}
