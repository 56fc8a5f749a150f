//! SHA-256 digests and the ledger chaining function.

use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// ASCII seed whose SHA-256 digest is the predecessor hash of ledger record 0.
pub const GENESIS_SEED: &[u8] = b"IDC-GENESIS-V1";

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hash32(pub [u8; 32]);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid hash hex: {0}")]
pub struct HashParseError(pub String);

impl Hash32 {
    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        Hash32(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// 64 lowercase hex characters.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Accepts only the 64-character lowercase form.
    pub fn from_hex(s: &str) -> Result<Self, HashParseError> {
        if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(HashParseError(s.to_owned()));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| HashParseError(s.to_owned()))?;
        Ok(Hash32(out))
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash32({})", self.to_hex())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Hash32 {
    type Err = HashParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Hash32::from_hex(s)
    }
}

pub fn sha256(bytes: &[u8]) -> Hash32 {
    Hash32(Sha256::digest(bytes).into())
}

pub fn genesis_hash() -> Hash32 {
    sha256(GENESIS_SEED)
}

/// `SHA-256(record_bytes ∥ prev_hash)` over the raw 32 bytes of `prev_hash`.
pub fn chain_hash(record_bytes: &[u8], prev_hash: &Hash32) -> Hash32 {
    let mut h = Sha256::new();
    h.update(record_bytes);
    h.update(prev_hash.0);
    Hash32(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let h = sha256(b"abc");
        assert_eq!(
            h.to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(Hash32::from_hex(&h.to_hex()).unwrap(), h);
    }

    #[test]
    fn uppercase_and_short_hex_rejected() {
        let upper = sha256(b"abc").to_hex().to_uppercase();
        assert!(Hash32::from_hex(&upper).is_err());
        assert!(Hash32::from_hex("abcd").is_err());
    }

    #[test]
    fn chain_hash_is_pure() {
        let g = genesis_hash();
        assert_eq!(chain_hash(b"record", &g), chain_hash(b"record", &g));
        assert_ne!(chain_hash(b"record", &g), chain_hash(b"record", &sha256(b"x")));
    }
}
