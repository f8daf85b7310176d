use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::{parse_args, EXIT_NEGATIVE, EXIT_POSITIVE};

/// Print the 36-bit SHAKE128 digest of each file.
#[derive(Parser)]
#[command(name = "abom-hash", version)]
struct Args {
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

pub fn run_hash(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args: Args = match parse_args(args, out, err) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let single = args.files.len() == 1;
    let mut code = EXIT_POSITIVE;
    for path in &args.files {
        match abom_core::hash_file(path) {
            Ok(d) if single => {
                let _ = writeln!(out, "{d}");
            }
            Ok(d) => {
                let _ = writeln!(out, "{d}  {}", path.display());
            }
            Err(e) => {
                let _ = writeln!(err, "abom-hash: {e}");
                code = EXIT_NEGATIVE;
            }
        }
    }
    code
}
