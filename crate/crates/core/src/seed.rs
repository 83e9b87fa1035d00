//! Stable seed derivation.
//!
//! Child seeds are produced by mixing the parent seed with a stream tag and an
//! index through the SplitMix64 finalizer. The mapping is fixed and does not
//! depend on the `rand` version, so recorded seeds stay meaningful.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags keep seeds for different purposes apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trial = 1,
    World = 2,
    Deployment = 3,
    Planner = 4,
    Traversal = 5,
    Oracle = 6,
}

/// Derives the `index`-th child seed of `parent` on `stream`.
pub fn derive_seed(parent: u64, stream: Stream, index: u64) -> u64 {
    let a = mix64(parent.wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream as u64)));
    mix64(a ^ index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA))
}
