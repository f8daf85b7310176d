//! Automatic bills of materials: SHAKE128 source-file digests stored in
//! compressed Bloom filters and embedded as a section in compiled binaries.

pub mod builder;
pub mod coder;
pub mod digest;
pub mod filter;
pub mod format;
pub mod objfile;
pub mod params;

pub use digest::{hash_bytes, hash_file, Digest36, IndexPair};
pub use filter::{BloomFilter, FilterChain};
pub use format::AbomDocument;
