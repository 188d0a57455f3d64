//! Seed derivation and per-role random streams.
//!
//! Every random signal is drawn from its own ChaCha stream, keyed by a seed and
//! a role tag. Sub-seeds are derived hierarchically, so per-draw work can run
//! on any number of workers and still reproduce bit-for-bit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Signal roles. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    ReciprocalPair = 1,
    EveGainA = 2,
    EveGainB = 3,
    Probe = 4,
    BobProbeNoise = 5,
    EveProbeNoise = 6,
    Secret = 7,
    AliceReturnNoise = 8,
    EveReturnNoise = 9,
    ProbeNorm = 10,
    ProbeBits = 20,
    BobFlips = 21,
    EveFlips = 22,
    AliceReturnFlips = 23,
    EveReturnFlips = 24,
    SecretBits = 25,
    CodeConstruction = 30,
    PrivacyHash = 31,
    VerifyHash = 32,
    Permutation = 33,
    LossFill = 34,
}

/// Sub-seed tags for experiment-level derivation.
pub mod tag {
    pub const CHANNELS: u64 = 0x6368_616e;
    pub const EPISODE: u64 = 0x6570_6973;
    pub const TRIALS: u64 = 0x7472_6961;
    pub const RECONCILE: u64 = 0x7265_636f;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a tag (draw index, experiment id).
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn stream(seed: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role as u64);
    rng
}

/// One draw from CN(0, variance): independent real and imaginary parts with
/// variance `variance / 2` each.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, variance: f64, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| complex_normal(rng, variance)).collect()
}
