//! Shared fixtures for the codec benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pmrc_core::{FieldCtx, FieldElement};

pub fn seeded_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen()).collect()
}

pub fn seeded_message(ctx: FieldCtx, len: usize, seed: u64) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| ctx.elem(rng.gen())).collect()
}
