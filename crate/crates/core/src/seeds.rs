//! Deterministic derivation of child RNG seeds from a base seed plus a
//! context path (run index, fold index, grid cell, ...), so every random
//! draw in an experiment is reproducible from one number.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `base` and an ordered list of context parts. Order matters:
/// `[1, 2]` and `[2, 1]` derive different seeds.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = base;
    for &p in parts {
        state = mix(state.wrapping_add(GOLDEN).wrapping_add(p));
    }
    mix(state.wrapping_add(GOLDEN))
}
