//! Deterministic seed derivation.
//!
//! Every random draw in the library flows through a ChaCha8 generator whose
//! seed is derived from explicit integer parts, so identical configurations
//! reproduce identical streams regardless of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the parts into a single 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x51_7c_c1_b7_27_22_0a_95u64;
    let mut out = 0u64;
    for &p in parts {
        state ^= p;
        out ^= splitmix64(&mut state);
    }
    out
}

/// Builds a ChaCha8 generator keyed by the given parts.
pub fn rng_from_parts(parts: &[u64]) -> ChaCha8Rng {
    let mut state = derive_seed(parts);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
