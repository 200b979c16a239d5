//! Sub-seed derivation for independent random streams.
//!
//! A run is driven by one master seed; every consumer (environment, network
//! initialization, exploration noise, replay sampling) gets its own stream so
//! that adding draws to one never shifts another.

/// Derives a stream seed from a master seed and a stream tag.
///
/// Same (master, stream) always yields the same value; distinct streams are
/// decorrelated by a SplitMix64 finalizer.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
