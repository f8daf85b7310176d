//! Binary format detection and ABOM section access.
//!
//! Only 64-bit little-endian ELF is rewritten. Mach-O and PE are recognized
//! so callers can report them, and `ar` archives are handled member by
//! member (see [`archive`]).

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::format;

pub mod archive;
mod elf;

/// Section name used in ELF (and PE) outputs.
pub const ELF_SECTION: &str = ".abom";
/// Segment and section used in Mach-O outputs. Recognized, never produced.
pub const MACHO_SECTION: &str = "__ABOM,__abom";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryKind {
    Elf64,
    MachO,
    Pe,
    ArArchive,
    Unknown,
}

impl fmt::Display for BinaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryKind::Elf64 => "ELF64",
            BinaryKind::MachO => "Mach-O",
            BinaryKind::Pe => "PE",
            BinaryKind::ArArchive => "ar archive",
            BinaryKind::Unknown => "unknown format",
        })
    }
}

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("unsupported binary format: {0}")]
    Unsupported(String),
    #[error("malformed ELF: {0}")]
    Malformed(String),
    #[error("invalid ABOM: {0}")]
    InvalidAbom(#[from] format::FormatError),
    #[error("archive: {0}")]
    Archive(#[from] std::io::Error),
}

pub fn detect(data: &[u8]) -> BinaryKind {
    if data.len() >= 5 && data[..4] == *b"\x7fELF" {
        return if data[4] == 2 {
            BinaryKind::Elf64
        } else {
            BinaryKind::Unknown
        };
    }
    if data.len() >= 4 {
        let word = [data[0], data[1], data[2], data[3]];
        if matches!(
            u32::from_be_bytes(word),
            0xFEED_FACF | 0xCFFA_EDFE | 0xCAFE_BABE
        ) {
            return BinaryKind::MachO;
        }
    }
    if data.starts_with(b"!<arch>\n") {
        return BinaryKind::ArArchive;
    }
    if data.starts_with(b"MZ") {
        return BinaryKind::Pe;
    }
    BinaryKind::Unknown
}

/// Returns the bytes of the `.abom` section, if the ELF carries one.
pub fn extract_abom(binary: &[u8]) -> Result<Option<&[u8]>, ObjError> {
    elf::extract(binary)
}

/// Returns a copy of `binary` carrying `abom` in its `.abom` section.
///
/// The first embed adds one section header (`.abom`); the section-name table
/// is rewritten at the end of the file and its existing header entry is
/// redirected, so the section count grows by exactly one. Re-embedding
/// redirects the existing `.abom` entry and leaves the count unchanged.
pub fn embed_abom(binary: &[u8], abom: &[u8]) -> Result<Vec<u8>, ObjError> {
    format::parse_header(abom)?;
    elf::embed(binary, abom)
}

/// Section count of an ELF64 file.
pub fn section_count(binary: &[u8]) -> Result<usize, ObjError> {
    elf::section_count(binary)
}

/// `libfoo.a` -> `libfoo.a.abom`.
pub fn sidecar_path(archive_path: impl AsRef<Path>) -> PathBuf {
    let mut s = archive_path.as_ref().as_os_str().to_owned();
    s.push(".abom");
    PathBuf::from(s)
}
