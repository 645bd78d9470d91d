//! Seeded, counter-based random streams.
//!
//! Every experiment draws from a ChaCha stream keyed by `(seed, stream)`, so
//! the samples consumed by one sweep point do not depend on how many samples
//! another point drew or on which thread ran first.

use crate::sl2core::{Iwasawa, Sl2Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub type Stream = ChaCha8Rng;

/// The generator for sub-stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A matrix with Iwasawa data `u ∈ [−1, 1]`, `log v ∈ [−1, 1]`, `θ ∈ [0, 2π)`.
pub fn bounded_matrix<R: Rng>(rng: &mut R) -> Sl2Matrix {
    let u = rng.gen_range(-1.0..1.0);
    let v = rng.gen_range(-1.0f64..1.0).exp();
    let theta = rng.gen_range(0.0..TAU);
    Iwasawa { u, v, theta }.to_matrix()
}

/// `k` rows of uniform points in the unit square.
pub fn torus_point<R: Rng>(rng: &mut R, k: usize) -> Vec<[f64; 2]> {
    (0..k).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
}
