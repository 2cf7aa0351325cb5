//! Order-independent per-trial seeds.
//!
//! A seed is a hash of the master seed and the identity of whatever it
//! feeds: model, cell parameters (as IEEE bit patterns) and trial index.
//! Adding or removing grid cells never changes the seeds of other cells.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into one 64-bit seed.
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(GOLDEN, |acc, w| mix64(acc.wrapping_add(GOLDEN) ^ mix64(*w)))
}

/// Stable numeric tag for a short ASCII label (FNV-1a).
pub fn tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}
