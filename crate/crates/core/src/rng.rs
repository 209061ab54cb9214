//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! positioned on its own 64-bit stream id, so streams are disjoint and can be
//! created in any order without coordination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream for `(master_seed, id)`.
pub fn stream(master_seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

/// Stream id for replication `rep` of experiment part `tag`.
pub fn stream_id(tag: u32, rep: u32) -> u64 {
    ((tag as u64) << 32) | rep as u64
}

/// Cumulative sums of `weights` in the given order.
pub fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Inverse-CDF draw: first index whose cumulative weight exceeds a uniform
/// variate. Rounding in the last cumulative entry falls back to the last
/// index carrying positive mass.
pub fn draw_index(rng: &mut Stream, cdf: &[f64]) -> usize {
    let u: f64 = rng.random();
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        return i;
    }
    let last = *cdf.last().expect("empty distribution");
    cdf.partition_point(|&c| c < last)
}
