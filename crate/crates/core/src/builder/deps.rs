//! Header enumeration through the compiler's own dependency listing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use super::plan::{InvocationPlan, SourceInput};
use super::{AbomWarning, WarningReason};

/// Environment variable overriding the dependency-listing flags (default `-M`).
pub const DEP_FLAGS_ENV: &str = "ABOM_DEP_FLAGS";

/// Prerequisites of every rule in make-style dependency output.
///
/// Handles backslash-newline continuations, `\ ` escaped spaces, `$$`, and
/// multiple rules (as produced by `-MP`). Targets are discarded.
pub fn parse_make_deps(text: &str) -> Vec<String> {
    let joined = text.replace("\\\r\n", " ").replace("\\\n", " ");
    let mut deps = Vec::new();
    for line in joined.lines() {
        let Some(colon) = find_rule_colon(line) else {
            continue;
        };
        let mut cur = String::new();
        let mut chars = line[colon + 1..].chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '\\' if matches!(chars.peek(), Some(' ' | '#' | '\\')) => {
                    cur.push(chars.next().unwrap());
                }
                '$' if chars.peek() == Some(&'$') => {
                    chars.next();
                    cur.push('$');
                }
                c if c.is_whitespace() => {
                    if !cur.is_empty() {
                        deps.push(std::mem::take(&mut cur));
                    }
                }
                c => cur.push(c),
            }
        }
        if !cur.is_empty() {
            deps.push(cur);
        }
    }
    deps
}

/// Position of the colon separating targets from prerequisites.
fn find_rule_colon(line: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 1,
            // A drive-letter colon (`C:\`) belongs to the target path.
            b':' if !(i == 1 && bytes[0].is_ascii_alphabetic() && bytes.get(2) == Some(&b'\\')) => {
                return Some(i)
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn dep_flags() -> Vec<String> {
    match std::env::var(DEP_FLAGS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.split_whitespace().map(String::from).collect(),
        _ => vec!["-M".to_string()],
    }
}

fn scan_one(plan: &InvocationPlan, source: &SourceInput) -> Option<Vec<PathBuf>> {
    let program = plan.compiler_argv.first()?;
    let mut cmd = Command::new(program);
    cmd.args(&plan.scan_flags).args(dep_flags());
    if let Some(lang) = &source.language {
        cmd.arg("-x").arg(lang);
    }
    cmd.arg(&source.path);
    let out = cmd
        .stdin(Stdio::null())
        .stderr(Stdio::null())
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let deps: Vec<PathBuf> = parse_make_deps(&text)
        .into_iter()
        .map(PathBuf::from)
        .collect();
    (!deps.is_empty()).then_some(deps)
}

fn canonical(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Source files and every header they include, deduplicated by canonical
/// path and sorted.
pub fn enumerate_sources(
    plan: &InvocationPlan,
    sources: &[usize],
) -> (Vec<PathBuf>, Vec<AbomWarning>) {
    let mut all = BTreeSet::new();
    let mut warnings = Vec::new();
    for &i in sources {
        let source = &plan.source_inputs[i];
        all.insert(canonical(&source.path));
        match scan_one(plan, source) {
            Some(deps) => all.extend(deps.iter().map(|d| canonical(d))),
            None => warnings.push(AbomWarning {
                path: source.path.clone(),
                reason: WarningReason::DepScanFailed,
            }),
        }
    }
    (all.into_iter().collect(), warnings)
}
