//! Per-path random streams.
//!
//! Every Monte Carlo path owns a ChaCha8 stream keyed by `(seed, family)` and
//! selected by the path index, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream families used inside the crate. Distinct families never share keys.
pub mod family {
    pub const NOISE: u64 = 1;
    pub const DIRECT: u64 = 2;
    pub const GIRSANOV: u64 = 3;
    pub const GRADIENT: u64 = 4;
    pub const CONTROL: u64 = 5;
    pub const GAUSS_MC: u64 = 6;
    pub const ORACLE: u64 = 7;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for path `path` of stream family `family` under `seed`.
pub fn path_rng(seed: u64, family: u64, path: u64) -> ChaCha8Rng {
    let mut state = seed ^ family.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}

/// Fills `out` with independent standard normals.
#[inline]
pub fn fill_normals(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}
