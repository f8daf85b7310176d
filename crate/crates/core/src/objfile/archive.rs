//! Static archives: per-member ABOMs and the `<archive>.abom` sidecar cache.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use crate::filter::{CapacityError, FilterChain};
use crate::format::AbomDocument;

use super::{detect, extract_abom, sidecar_path, BinaryKind, ObjError};

/// ABOMs found in the members of one archive.
#[derive(Debug, Default)]
pub struct ArchiveScan {
    pub chains: Vec<(String, FilterChain)>,
    /// Members without a usable ABOM.
    pub missing: Vec<String>,
}

impl ArchiveScan {
    /// Union of every member chain, in member order.
    pub fn merged(&self) -> Result<FilterChain, CapacityError> {
        let mut chain = FilterChain::new();
        for (_, c) in &self.chains {
            chain.union_with(c)?;
        }
        Ok(chain)
    }
}

fn is_index_member(name: &[u8]) -> bool {
    matches!(
        name,
        b"/" | b"//" | b"/SYM64/" | b"__.SYMDEF" | b"__.SYMDEF SORTED"
    )
}

pub fn scan_members(data: &[u8]) -> Result<ArchiveScan, ObjError> {
    if detect(data) != BinaryKind::ArArchive {
        return Err(ObjError::Unsupported(detect(data).to_string()));
    }
    let mut archive = ar::Archive::new(Cursor::new(data));
    let mut scan = ArchiveScan::default();
    while let Some(entry) = archive.next_entry() {
        let mut entry = entry?;
        let name = entry.header().identifier().to_vec();
        if is_index_member(&name) {
            continue;
        }
        let name = String::from_utf8_lossy(&name)
            .trim_end_matches('/')
            .to_string();
        let mut body = Vec::new();
        entry.read_to_end(&mut body)?;
        let chain = match detect(&body) {
            BinaryKind::Elf64 => match extract_abom(&body) {
                Ok(Some(bytes)) => AbomDocument::parse(bytes).ok().map(|d| d.chain),
                _ => None,
            },
            _ => None,
        };
        match chain {
            Some(c) => scan.chains.push((name, c)),
            None => scan.missing.push(name),
        }
    }
    Ok(scan)
}

/// Reads the sidecar when it exists and is at least as new as the archive.
pub fn fresh_sidecar(archive: &Path) -> Option<Result<FilterChain, ObjError>> {
    let sidecar = sidecar_path(archive);
    let archive_mtime = fs::metadata(archive).and_then(|m| m.modified()).ok()?;
    let sidecar_mtime = fs::metadata(&sidecar).and_then(|m| m.modified()).ok()?;
    if sidecar_mtime < archive_mtime {
        return None;
    }
    Some(
        fs::read(&sidecar)
            .map_err(ObjError::from)
            .and_then(|bytes| Ok(AbomDocument::parse(&bytes)?.chain)),
    )
}

/// Rebuilds `<archive>.abom` from the archive's members.
pub fn write_sidecar(archive: &Path) -> Result<ArchiveScan, ObjError> {
    let data = fs::read(archive)?;
    let scan = scan_members(&data)?;
    let merged = scan
        .merged()
        .map_err(|e| ObjError::Unsupported(e.to_string()))?;
    let bytes = AbomDocument::from(merged).serialize()?;
    let sidecar = sidecar_path(archive);
    let dir = sidecar
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, &bytes)?;
    tmp.persist(&sidecar)
        .map_err(|e| ObjError::Archive(e.error))?;
    Ok(scan)
}
