//! Deterministic derivation of per-trial, per-generation RNG streams.
//!
//! Each trial owns a root seed. Member initialization `i` and generation `t`
//! each read from their own counter-addressed stream of one ChaCha8 instance
//! family, so replaying any single generation against the same population
//! view reproduces the proposal exactly — strategies carry no hidden state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG handed to strategies and the harness.
pub type StreamRng = ChaCha8Rng;

/// Independent stream families within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Population initialization; index = member slot.
    Init,
    /// One optimization generation; index = generation counter.
    Generation,
    /// Harness-level draws (e.g. sampling the hidden target).
    Instance,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Init => 1,
            StreamKind::Generation => 2,
            StreamKind::Instance => 3,
        }
    }
}

/// SplitMix64 output function; used to decorrelate trial seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root seed for trial `trial` under experiment seed `root_seed`.
pub fn trial_seed(root_seed: u64, trial: u64) -> u64 {
    splitmix64(root_seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// The RNG stream `(kind, index)` of the trial with root seed `seed`.
pub fn stream(seed: u64, kind: StreamKind, index: u64) -> StreamRng {
    assert!(index < 1 << 56, "stream index too large");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind.tag() << 56 | index);
    rng
}
