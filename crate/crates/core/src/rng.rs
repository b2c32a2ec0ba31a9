//! Seeded random streams.
//!
//! Every experiment draws from its own stream, keyed by the master seed, the
//! shot count and the experiment index, so results do not depend on the order
//! in which experiments are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream used for sampling measurement outcomes.
pub const OUTCOME_STREAM: u64 = 0;
/// Stream used for readout bit flips.
pub const FLIP_STREAM: u64 = 1;

const CALIBRATION_TAG: u64 = 0xca1_1b7a_7e00_0000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one seed.
pub fn derive_seed(words: &[u64]) -> u64 {
    words.iter().fold(0x6a09_e667_f3bc_c908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Seed of experiment `index` at `shots` shots.
pub fn experiment_seed(master: u64, shots: u64, index: u64) -> u64 {
    derive_seed(&[master, shots, index])
}

/// Seed of the calibration run preceding the batch at `shots` shots
/// (`shots = 0` for a suite-wide calibration).
pub fn calibration_seed(master: u64, shots: u64) -> u64 {
    derive_seed(&[master, CALIBRATION_TAG, shots])
}

/// Opens one of the independent ChaCha streams belonging to `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Two independent standard normal draws (Box–Muller).
pub fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // 1 - u keeps the argument of the logarithm in (0, 1].
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = libm::sqrt(-2.0 * libm::log(u1));
    let angle = 2.0 * core::f64::consts::PI * u2;
    (radius * libm::cos(angle), radius * libm::sin(angle))
}
