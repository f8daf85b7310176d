//! The compiler wrapper: run the real command, then embed an ABOM into
//! whatever it produced.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus};

use rayon::prelude::*;
use thiserror::Error;

use crate::digest::{hash_file, HashFileError};
use crate::filter::{CapacityError, FilterChain};
use crate::format::{AbomDocument, FormatError};
use crate::objfile::{self, archive, ObjError};

pub mod deps;
pub mod plan;
pub mod upstream;

pub use deps::{enumerate_sources, parse_make_deps, DEP_FLAGS_ENV};
pub use plan::{plan, InvocationPlan, LinkInput, Mode, OutputTarget, SourceInput};
pub use upstream::{collect_upstream, resolve_library};

/// Set to any non-empty value to suppress warning lines.
pub const QUIET_ENV: &str = "ABOM_QUIET";

/// Exit status when the compiler succeeded but its output could not be tagged.
pub const EXIT_EMBED_FAILED: i32 = 3;
/// Exit status when the compiler could not be started.
pub const EXIT_SPAWN_FAILED: i32 = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarningReason {
    MissingAbom,
    UnresolvedLibrary,
    DepScanFailed,
}

impl WarningReason {
    pub fn as_str(self) -> &'static str {
        match self {
            WarningReason::MissingAbom => "missing-abom",
            WarningReason::UnresolvedLibrary => "unresolved-library",
            WarningReason::DepScanFailed => "dep-scan-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbomWarning {
    pub path: PathBuf,
    pub reason: WarningReason,
}

impl fmt::Display for AbomWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "abom: warning: {}: {}",
            self.path.display(),
            self.reason.as_str()
        )
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Hash(#[from] HashFileError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{}: {source}", path.display())]
    Object { path: PathBuf, source: ObjError },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Hashes `sources` (sorted and deduplicated by canonical path) into a fresh
/// chain, then unions each upstream chain in order.
pub fn build_abom(
    sources: &[PathBuf],
    upstream: &[FilterChain],
) -> Result<AbomDocument, BuildError> {
    let mut paths: Vec<PathBuf> = sources
        .iter()
        .map(|p| fs::canonicalize(p).unwrap_or_else(|_| p.clone()))
        .collect();
    paths.sort();
    paths.dedup();

    let digests = paths
        .par_iter()
        .map(hash_file)
        .collect::<Result<Vec<_>, _>>()?;

    let mut chain = FilterChain::new();
    for d in digests {
        chain.insert(d)?;
    }
    for up in upstream {
        chain.union_with(up)?;
    }
    Ok(AbomDocument::from(chain))
}

/// Replaces `path` with `contents`, keeping its permissions.
fn replace_file(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let perms = fs::metadata(path)?.permissions();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().set_permissions(perms)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Embeds `abom` into the compiler output at `path`.
pub fn embed_into_file(path: &Path, abom: &[u8]) -> Result<(), BuildError> {
    let io_err = |source| BuildError::Io {
        path: path.to_path_buf(),
        source,
    };
    let binary = fs::read(path).map_err(io_err)?;
    let tagged = objfile::embed_abom(&binary, abom).map_err(|source| BuildError::Object {
        path: path.to_path_buf(),
        source,
    })?;
    replace_file(path, &tagged).map_err(io_err)
}

fn exit_code(status: ExitStatus) -> i32 {
    if let Some(code) = status.code() {
        return code;
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(sig) = status.signal() {
            return 128 + sig;
        }
    }
    1
}

fn emit_warnings(warnings: &[AbomWarning]) {
    if std::env::var_os(QUIET_ENV).is_some_and(|v| !v.is_empty()) {
        return;
    }
    let mut seen = Vec::new();
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    for w in warnings {
        if !seen.contains(&w) {
            let _ = writeln!(err, "{w}");
            seen.push(w);
        }
    }
}

/// Tags every output of a successful invocation. Returns the warnings
/// gathered along the way.
pub fn tag_outputs(plan: &InvocationPlan) -> Result<Vec<AbomWarning>, BuildError> {
    let mut warnings = Vec::new();
    match plan.mode {
        Mode::Passthrough => {}
        Mode::Archive => {
            for out in &plan.outputs {
                let scan =
                    archive::write_sidecar(&out.path).map_err(|source| BuildError::Object {
                        path: out.path.clone(),
                        source,
                    })?;
                if !scan.missing.is_empty() {
                    warnings.push(AbomWarning {
                        path: out.path.clone(),
                        reason: WarningReason::MissingAbom,
                    });
                }
            }
        }
        Mode::Compile | Mode::Link | Mode::CompileAndLink => {
            let (upstream, up_warnings) = match plan.mode {
                Mode::Compile => (Vec::new(), Vec::new()),
                _ => collect_upstream(plan),
            };
            for out in &plan.outputs {
                let (sources, scan_warnings) = enumerate_sources(plan, &out.sources);
                warnings.extend(scan_warnings);
                let abom = build_abom(&sources, &upstream)?.serialize()?;
                embed_into_file(&out.path, &abom)?;
            }
            warnings.extend(up_warnings);
        }
    }
    Ok(warnings)
}

/// Runs `argv` and tags its outputs. Returns the process exit status.
pub fn wrap(argv: &[OsString]) -> i32 {
    let Some((program, args)) = argv.split_first() else {
        eprintln!("abom: no compiler given");
        return 2;
    };
    let status = match Command::new(program).args(args).status() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("abom: cannot run {}: {e}", program.to_string_lossy());
            return EXIT_SPAWN_FAILED;
        }
    };
    if !status.success() {
        return exit_code(status);
    }

    let tokens: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let plan = plan::plan(&tokens);
    match tag_outputs(&plan) {
        Ok(warnings) => {
            emit_warnings(&warnings);
            0
        }
        Err(e) => {
            eprintln!("abom: error: {e}");
            EXIT_EMBED_FAILED
        }
    }
}
