//! Named random streams derived from a single run seed.
//!
//! Every consumer of randomness asks for a stream by component name. The
//! stream seed is `seed XOR fnv1a64(name)`, fed to ChaCha8. The FNV-1a
//! constants are fixed, so streams are reproducible across platforms and
//! across implementations in other languages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the UTF-8 bytes of `name`.
pub fn stream_id(name: &str) -> u64 {
    name.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Independent generator for component `name` under run seed `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ stream_id(name))
}
