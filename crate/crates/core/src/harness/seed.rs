//! Platform-independent RNG substream seeds.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLabel<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for SeedLabel<'a> {
    fn from(s: &'a str) -> Self {
        SeedLabel::Str(s)
    }
}

impl From<u64> for SeedLabel<'_> {
    fn from(v: u64) -> Self {
        SeedLabel::Int(v)
    }
}

impl From<usize> for SeedLabel<'_> {
    fn from(v: usize) -> Self {
        SeedLabel::Int(v as u64)
    }
}

impl From<u32> for SeedLabel<'_> {
    fn from(v: u32) -> Self {
        SeedLabel::Int(v as u64)
    }
}

/// First eight bytes (little endian) of SHA-256 over the master seed and the
/// type-tagged, length-prefixed labels. Label order is significant.
pub fn derive_seed(master_seed: u64, labels: &[SeedLabel<'_>]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"interplab-seed-v1");
    h.update(master_seed.to_le_bytes());
    for label in labels {
        match label {
            SeedLabel::Str(s) => {
                h.update([0u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            SeedLabel::Int(v) => {
                h.update([1u8]);
                h.update(v.to_le_bytes());
            }
        }
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
