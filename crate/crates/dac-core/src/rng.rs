//! Seeded random streams. Every stochastic operation derives its generator
//! from a `(seed, stream)` pair so runs are reproducible bit for bit.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as DetRng;

pub fn seeded(seed: u64, stream: u64) -> DetRng {
    let mut rng = DetRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved per subsystem so unrelated consumers of the same seed
/// never share a generator.
pub mod streams {
    pub const FPS_TRAIN: u64 = 1;
    pub const FPS_TEST: u64 = 2;
    pub const SURFACE: u64 = 3;
    pub const LOUVAIN: u64 = 4;
    pub const KMEANS: u64 = 5;
    pub const TRAIN: u64 = 16;
    pub const DISTILL: u64 = 17;
    pub const TEST_LATTICE: u64 = 18;
}
