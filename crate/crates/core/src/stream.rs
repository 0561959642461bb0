//! Counter-based random streams and order-independent reductions.
//!
//! Every draw is keyed by `(seed, domain, index)`: the ChaCha key comes from
//! `(seed, domain)` and the ChaCha stream id is `index`. A worker that handles
//! index `i` therefore sees the same variates no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separate independent consumers that share a user seed.
pub mod domain {
    pub const MEASURE: u64 = 0x6d75_5f70;
    pub const ENSEMBLE: u64 = 0x7275_6d74;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The generator for draw `index` of the stream family `(seed, domain)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Pairwise (tree) summation in a fixed index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `(estimate - prediction) / stderr`, with the zero-variance case resolved
/// as an exact comparison.
pub fn z_score(estimate: f64, stderr: f64, prediction: f64) -> f64 {
    let diff = estimate - prediction;
    if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 * (1.0 + prediction.abs()) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}
