use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use abom_core::format::HEADER_LEN;
use abom_core::Digest36;
use clap::Parser;

use crate::load::load_abom;
use crate::{parse_args, EXIT_NEGATIVE, EXIT_POSITIVE, EXIT_USAGE};

/// Report whether a binary's ABOM lists a dependency digest.
#[derive(Parser)]
#[command(name = "abom-check", version)]
struct CheckArgs {
    /// ELF binary, archive, or raw ABOM file.
    binary: PathBuf,
    /// 10-character hex digest as printed by abom-hash.
    digest: String,
}

/// Summarize the ABOM embedded in a binary.
#[derive(Parser)]
#[command(name = "abom-inspect", version)]
struct InspectArgs {
    /// ELF binary, archive, or raw ABOM file.
    binary: PathBuf,
}

pub fn run_check(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args: CheckArgs = match parse_args(args, out, err) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let digest: Digest36 = match args.digest.parse() {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "abom-check: invalid digest {:?}: {e}", args.digest);
            return EXIT_USAGE;
        }
    };
    let loaded = match load_abom(&args.binary) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "abom-check: {e}");
            return EXIT_USAGE;
        }
    };
    if loaded.doc.chain.contains(digest) {
        let _ = writeln!(out, "Dependency Present");
        EXIT_POSITIVE
    } else {
        let _ = writeln!(out, "Dependency Absent");
        EXIT_NEGATIVE
    }
}

pub fn run_inspect(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args: InspectArgs = match parse_args(args, out, err) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let loaded = match load_abom(&args.binary) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "abom-inspect: {e}");
            return EXIT_USAGE;
        }
    };
    let doc = &loaded.doc;
    let model = doc.model();
    let mut text = format!(
        "version: {}\nfilters: {}\np(1): {:.6e} (quantized {})\npayload bytes: {}\nsection bytes: {}\n",
        doc.version(),
        doc.chain.len(),
        model.p1(),
        model.p1_q(),
        loaded.raw.len() - HEADER_LEN,
        loaded.raw.len(),
    );
    text.push_str("filter  ones  n*\n");
    for (i, f) in doc.chain.filters().iter().enumerate() {
        text.push_str(&format!("{i:>6}  {:>4}  {:.1}\n", f.ones(), f.estimate_n()));
    }
    let _ = out.write_all(text.as_bytes());
    EXIT_POSITIVE
}
