use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use abom_core::format::{FormatError, MAGIC};
use abom_core::objfile::{self, archive, BinaryKind, ObjError};
use abom_core::AbomDocument;

/// A parsed ABOM and the raw bytes it was read from.
#[derive(Debug)]
pub struct LoadedAbom {
    pub raw: Vec<u8>,
    pub doc: AbomDocument,
}

#[derive(Debug)]
pub enum LoadError {
    Read(PathBuf, std::io::Error),
    NoAbom(PathBuf),
    Unsupported(PathBuf, BinaryKind),
    BadObject(PathBuf, ObjError),
    BadAbom(PathBuf, FormatError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Read(p, e) => write!(f, "{}: cannot read: {e}", p.display()),
            LoadError::NoAbom(p) => write!(f, "{}: no ABOM found", p.display()),
            LoadError::Unsupported(p, kind) => {
                write!(
                    f,
                    "{}: no ABOM found (unsupported format: {kind})",
                    p.display()
                )
            }
            LoadError::BadObject(p, e) => write!(f, "{}: {e}", p.display()),
            LoadError::BadAbom(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

/// Reads the ABOM carried by `path`: an ELF64 file's `.abom` section, a raw
/// ABOM file such as an archive sidecar, or the merged member ABOMs of an
/// `ar` archive (its sidecar when fresh).
pub fn load_abom(path: &Path) -> Result<LoadedAbom, LoadError> {
    let owned = || path.to_path_buf();
    let data = fs::read(path).map_err(|e| LoadError::Read(owned(), e))?;

    let raw = if data.starts_with(&MAGIC) {
        data
    } else {
        match objfile::detect(&data) {
            BinaryKind::Elf64 => match objfile::extract_abom(&data) {
                Ok(Some(bytes)) => bytes.to_vec(),
                Ok(None) => return Err(LoadError::NoAbom(owned())),
                Err(e) => return Err(LoadError::BadObject(owned(), e)),
            },
            BinaryKind::ArArchive => from_archive(path, &data)?,
            kind => return Err(LoadError::Unsupported(owned(), kind)),
        }
    };
    let doc = AbomDocument::parse(&raw).map_err(|e| LoadError::BadAbom(owned(), e))?;
    Ok(LoadedAbom { raw, doc })
}

fn from_archive(path: &Path, data: &[u8]) -> Result<Vec<u8>, LoadError> {
    let owned = || path.to_path_buf();
    if archive::fresh_sidecar(path).is_some() {
        let sidecar = objfile::sidecar_path(path);
        return fs::read(&sidecar).map_err(|e| LoadError::Read(sidecar, e));
    }
    let scan = archive::scan_members(data).map_err(|e| LoadError::BadObject(owned(), e))?;
    if scan.chains.is_empty() {
        return Err(LoadError::NoAbom(owned()));
    }
    let merged = scan
        .merged()
        .map_err(|e| LoadError::BadObject(owned(), ObjError::Unsupported(e.to_string())))?;
    AbomDocument::from(merged)
        .serialize()
        .map_err(|e| LoadError::BadAbom(owned(), e))
}
