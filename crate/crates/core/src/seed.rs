/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derives the seed of stream `index` from `master`:
/// `splitmix64(master + (index + 1)·γ)` with γ the 64-bit golden-ratio constant.
///
/// For a fixed master the map is injective in `index` (γ is odd and the
/// finalizer is a bijection), so derived seeds never collide.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
