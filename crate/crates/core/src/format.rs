//! ABOM wire format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "ABOM"
//!      4     1  protocol version (1)
//!      5     2  filter count, u16 LE
//!      7     4  p(1) * (2^32 - 1), u32 LE
//!     11     4  payload length in bytes, u32 LE
//!     15     -  arithmetic-coded concatenation of all filter bit arrays
//! ```

use bitvec::prelude::*;
use thiserror::Error;

use crate::coder::{ArithModel, CoderError, Decoder, Encoder};
use crate::filter::{BloomFilter, FilterChain, M};

pub const MAGIC: [u8; 4] = *b"ABOM";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("not an ABOM (bad magic)")]
    NotAbom,
    #[error("unsupported ABOM protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated ABOM: {0}")]
    Truncated(String),
    #[error("malformed ABOM: {0}")]
    Malformed(&'static str),
    #[error("invalid arithmetic model in header: {0}")]
    InvalidModel(u32),
    #[error("corrupt ABOM payload: {0}")]
    CorruptPayload(&'static str),
    #[error("ABOM exceeds format capacity: {0}")]
    Capacity(&'static str),
}

/// Decoded header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub filter_count: u16,
    pub model: u32,
    pub payload_len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbomDocument {
    pub chain: FilterChain,
}

impl From<FilterChain> for AbomDocument {
    fn from(chain: FilterChain) -> Self {
        AbomDocument { chain }
    }
}

impl AbomDocument {
    pub fn version(&self) -> u8 {
        VERSION
    }

    pub fn model(&self) -> ArithModel {
        let ones: u64 = self.chain.filters().iter().map(|f| f.ones() as u64).sum();
        let len = (self.chain.len() * M) as u64;
        ArithModel::from_counts(ones, len).expect("chain is non-empty")
    }

    pub fn serialize(&self) -> Result<Vec<u8>, FormatError> {
        let count = u16::try_from(self.chain.len())
            .map_err(|_| FormatError::Capacity("more than 65535 filters"))?;
        let model = self.model();
        let mut enc = Encoder::new(model);
        for f in self.chain.filters() {
            enc.push_bits(f.bits());
        }
        let payload = enc.finish();
        let payload_len = u32::try_from(payload.len())
            .map_err(|_| FormatError::Capacity("payload of 2^32 bytes or more"))?;

        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&count.to_le_bytes());
        out.extend_from_slice(&model.p1_q().to_le_bytes());
        out.extend_from_slice(&payload_len.to_le_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn parse(data: &[u8]) -> Result<Self, FormatError> {
        let header = parse_header(data)?;
        if header.filter_count == 0 {
            return Err(FormatError::Malformed("filter count is zero"));
        }
        let model =
            ArithModel::new(header.model).map_err(|_| FormatError::InvalidModel(header.model))?;
        let payload = &data[HEADER_LEN..];
        let corrupt = |e: CoderError| match e {
            CoderError::Corrupt(msg) => FormatError::CorruptPayload(msg),
            _ => FormatError::CorruptPayload("coder failure"),
        };
        let mut dec = Decoder::new(payload, model).map_err(corrupt)?;
        // Filters are allocated as they decode, so a short payload fails
        // before the declared count is fully materialized.
        let mut filters = Vec::new();
        let mut bits = bitvec![u64, Lsb0; 0; M];
        for _ in 0..header.filter_count {
            dec.fill(&mut bits).map_err(corrupt)?;
            filters.push(BloomFilter::from_bits(&bits).expect("filter-sized buffer"));
        }
        dec.finish().map_err(corrupt)?;
        let chain = FilterChain::from_filters(filters).expect("count fits in u16");
        Ok(AbomDocument { chain })
    }
}

/// Validates magic, version and payload length, returning the header.
pub fn parse_header(data: &[u8]) -> Result<Header, FormatError> {
    if data.len() < MAGIC.len() || data[..4] != MAGIC {
        return Err(FormatError::NotAbom);
    }
    if data.len() < HEADER_LEN {
        return Err(FormatError::Truncated(format!(
            "{} bytes, header needs {HEADER_LEN}",
            data.len()
        )));
    }
    let version = data[4];
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let filter_count = u16::from_le_bytes([data[5], data[6]]);
    let model = u32::from_le_bytes(data[7..11].try_into().unwrap());
    let payload_len = u32::from_le_bytes(data[11..15].try_into().unwrap());
    let remaining = data.len() - HEADER_LEN;
    if payload_len as usize != remaining {
        return Err(FormatError::Truncated(format!(
            "header declares {payload_len} payload bytes, {remaining} present"
        )));
    }
    Ok(Header {
        version,
        filter_count,
        model,
        payload_len,
    })
}
