//! ABOMs carried by the inputs of a link.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::filter::FilterChain;
use crate::format::AbomDocument;
use crate::objfile::{self, archive, BinaryKind};

use super::plan::{InvocationPlan, LinkInput};
use super::{AbomWarning, WarningReason};

const FALLBACK_LIB_DIRS: &[&str] = &["/usr/local/lib", "/lib64", "/usr/lib64", "/lib", "/usr/lib"];

/// Reads the ABOM embedded in a single ELF object or shared library.
fn object_chain(path: &Path) -> Option<FilterChain> {
    let data = std::fs::read(path).ok()?;
    if objfile::detect(&data) != BinaryKind::Elf64 {
        return None;
    }
    let bytes = objfile::extract_abom(&data).ok()??;
    AbomDocument::parse(bytes).ok().map(|d| d.chain)
}

/// Library directories the compiler driver searches, after any `-L`.
fn default_lib_dirs(compiler: &str) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Ok(out) = Command::new(compiler)
        .arg("-print-search-dirs")
        .stdin(Stdio::null())
        .stderr(Stdio::null())
        .output()
    {
        let text = String::from_utf8_lossy(&out.stdout);
        for line in text.lines() {
            if let Some(list) = line.strip_prefix("libraries: =") {
                dirs.extend(std::env::split_paths(list).filter(|p| !p.as_os_str().is_empty()));
            }
        }
    }
    let multiarch = format!("/usr/lib/{}-linux-gnu", std::env::consts::ARCH);
    dirs.push(PathBuf::from(multiarch));
    dirs.extend(FALLBACK_LIB_DIRS.iter().map(PathBuf::from));
    dirs
}

/// Resolves `-lname` the way a Unix linker does: `-L` directories first,
/// shared before static unless linking statically, `:file` taken verbatim.
pub fn resolve_library(name: &str, search: &[PathBuf], static_link: bool) -> Option<PathBuf> {
    let candidates: Vec<String> = match name.strip_prefix(':') {
        Some(exact) => vec![exact.to_string()],
        None if static_link => vec![format!("lib{name}.a")],
        None => vec![format!("lib{name}.so"), format!("lib{name}.a")],
    };
    search.iter().find_map(|dir| {
        candidates
            .iter()
            .map(|c| dir.join(c))
            .find(|p| p.is_file())
            .map(|p| std::fs::canonicalize(&p).unwrap_or(p))
    })
}

fn missing(path: impl Into<PathBuf>) -> AbomWarning {
    AbomWarning {
        path: path.into(),
        reason: WarningReason::MissingAbom,
    }
}

fn archive_chains(path: &Path, chains: &mut Vec<FilterChain>, warnings: &mut Vec<AbomWarning>) {
    if let Some(Ok(chain)) = archive::fresh_sidecar(path) {
        chains.push(chain);
        return;
    }
    let scan = std::fs::read(path)
        .ok()
        .and_then(|data| archive::scan_members(&data).ok());
    match scan {
        Some(scan) => {
            if !scan.missing.is_empty() || scan.chains.is_empty() {
                warnings.push(missing(path));
            }
            chains.extend(scan.chains.into_iter().map(|(_, c)| c));
        }
        None => warnings.push(missing(path)),
    }
}

/// Chains from every link input, in command-line order, plus one warning
/// for each input that contributes no ABOM.
pub fn collect_upstream(plan: &InvocationPlan) -> (Vec<FilterChain>, Vec<AbomWarning>) {
    let mut chains = Vec::new();
    let mut warnings = Vec::new();

    let mut libraries: Vec<&str> = Vec::new();
    for input in &plan.link_inputs {
        match input {
            LinkInput::Object(p) | LinkInput::Shared(p) => match object_chain(p) {
                Some(c) => chains.push(c),
                None => warnings.push(missing(p)),
            },
            LinkInput::Archive(p) => archive_chains(p, &mut chains, &mut warnings),
            LinkInput::Library(name) => libraries.push(name),
        }
    }
    if plan.default_libs && !libraries.contains(&"c") {
        libraries.push("c");
    }
    if libraries.is_empty() {
        return (chains, warnings);
    }

    let mut search = plan.lib_dirs.clone();
    if let Some(compiler) = plan.compiler_argv.first() {
        search.extend(default_lib_dirs(compiler));
    }
    for name in libraries {
        match resolve_library(name, &search, plan.static_link) {
            Some(path) if path.extension().is_some_and(|e| e == "a") => {
                archive_chains(&path, &mut chains, &mut warnings)
            }
            Some(path) => match object_chain(&path) {
                Some(c) => chains.push(c),
                None => warnings.push(missing(path)),
            },
            None => warnings.push(AbomWarning {
                path: PathBuf::from(format!("-l{name}")),
                reason: WarningReason::UnresolvedLibrary,
            }),
        }
    }
    (chains, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_in_search_order() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        std::fs::write(a.path().join("libfoo.a"), b"").unwrap();
        std::fs::write(b.path().join("libfoo.so"), b"").unwrap();
        std::fs::write(b.path().join("custom.lib"), b"").unwrap();
        let search = vec![a.path().to_path_buf(), b.path().to_path_buf()];
        assert_eq!(
            resolve_library("foo", &search, false),
            Some(a.path().join("libfoo.a"))
        );
        assert_eq!(
            resolve_library("foo", &search[1..], false),
            Some(b.path().join("libfoo.so"))
        );
        assert_eq!(resolve_library("foo", &search[1..], true), None);
        assert_eq!(
            resolve_library(":custom.lib", &search, false),
            Some(b.path().join("custom.lib"))
        );
        assert_eq!(resolve_library("nope", &search, false), None);
    }
}
