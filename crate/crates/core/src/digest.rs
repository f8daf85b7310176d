//! 36-bit SHAKE128 digests identifying source files.
//!
//! A digest is the first 36 bits of the SHAKE128 output stream, read
//! big-endian bytewise. The two 18-bit halves double as the Bloom filter
//! indices, so no further hashing happens on insertion.

use std::fmt;
use std::fs::File;
use std::io::{self, Read as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake128;
use thiserror::Error;

/// Number of significant bits in a digest.
pub const DIGEST_BITS: u32 = 36;
/// Number of bits per filter index slice.
pub const INDEX_BITS: u32 = 18;

const DIGEST_MASK: u64 = (1 << DIGEST_BITS) - 1;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

/// A SHAKE128 digest truncated to 36 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest36(u64);

/// The two filter bit positions addressed by a digest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPair {
    pub hi: u32,
    pub lo: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseDigestError {
    #[error("digest must be exactly 10 hex characters, got {0}")]
    Length(usize),
    #[error("invalid hex character {0:?} in digest")]
    NonHex(char),
    #[error("trailing nibble of digest must be zero (only 36 bits are significant)")]
    TrailingNibble,
}

#[derive(Debug, Error)]
#[error("cannot hash {}: {source}", path.display())]
pub struct HashFileError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

impl Digest36 {
    /// Returns `None` when `value` has bits set above bit 35.
    pub fn new(value: u64) -> Option<Self> {
        (value <= DIGEST_MASK).then_some(Digest36(value))
    }

    /// Keeps the low 36 bits of `value`.
    pub fn from_masked(value: u64) -> Self {
        Digest36(value & DIGEST_MASK)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn indices(self) -> IndexPair {
        IndexPair {
            hi: (self.0 >> INDEX_BITS) as u32,
            lo: (self.0 & INDEX_MASK) as u32,
        }
    }

    /// Ten lowercase hex characters: the 36 bits left-aligned in 40.
    pub fn to_hex(self) -> String {
        format!("{:010x}", self.0 << 4)
    }

    pub fn from_hex(s: &str) -> Result<Self, ParseDigestError> {
        let len = s.chars().count();
        if len != 10 {
            return Err(ParseDigestError::Length(len));
        }
        let mut value = 0u64;
        for c in s.chars() {
            let nibble = c.to_digit(16).ok_or(ParseDigestError::NonHex(c))?;
            value = (value << 4) | u64::from(nibble);
        }
        if value & 0xf != 0 {
            return Err(ParseDigestError::TrailingNibble);
        }
        Ok(Digest36(value >> 4))
    }
}

impl fmt::Display for Digest36 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest36 {
    type Err = ParseDigestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Digest36::from_hex(s)
    }
}

fn finish(hasher: Shake128) -> Digest36 {
    let mut prefix = [0u8; 5];
    XofReader::read(&mut hasher.finalize_xof(), &mut prefix);
    let mut wide = [0u8; 8];
    wide[3..].copy_from_slice(&prefix);
    Digest36(u64::from_be_bytes(wide) >> 4)
}

pub fn hash_bytes(data: &[u8]) -> Digest36 {
    let mut hasher = Shake128::default();
    hasher.update(data);
    finish(hasher)
}

/// Hashes a file's raw bytes, streaming in fixed-size chunks.
pub fn hash_file(path: impl AsRef<Path>) -> Result<Digest36, HashFileError> {
    let path = path.as_ref();
    let wrap = |source| HashFileError {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::open(path).map_err(wrap)?;
    let mut hasher = Shake128::default();
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        match file.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => hasher.update(&buf[..n]),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(wrap(e)),
        }
    }
    Ok(finish(hasher))
}
