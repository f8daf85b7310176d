//! Front ends for the `abom` command suite.
//!
//! Each `run_*` function takes the full argument vector (program name
//! first) plus output and diagnostic streams, and returns the exit status.

use std::ffi::OsString;
use std::io::Write;

mod check;
mod hash;
mod load;
mod params;

pub use check::{run_check, run_inspect};
pub use hash::run_hash;
pub use load::{load_abom, LoadError, LoadedAbom};
pub use params::run_params;

/// Query hit, or the command did what was asked.
pub const EXIT_POSITIVE: i32 = 0;
/// Query miss, or some input could not be processed.
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EMBED_FAILED: i32 = abom_core::builder::EXIT_EMBED_FAILED;

const ABOM_USAGE: &str = "\
usage: abom <compiler> [compiler args...]
       abom hash <file>...
       abom check <binary> <digest>
       abom inspect <binary>
       abom params [options]

Runs the compiler unchanged, then embeds an ABOM section listing every
source and header it read into each object or executable it produced.

environment:
  ABOM_DEP_FLAGS  dependency-listing flags passed to the compiler (default -M)
  ABOM_QUIET      suppress warnings about inputs without an ABOM
";

/// Parses with clap, routing help to `out` and errors to `err`.
pub(crate) fn parse_args<P: clap::Parser>(
    args: Vec<OsString>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<P, i32> {
    P::try_parse_from(args).map_err(|e| {
        if e.use_stderr() {
            let _ = write!(err, "{}", e.render());
            EXIT_USAGE
        } else {
            let _ = write!(out, "{}", e.render());
            EXIT_POSITIVE
        }
    })
}

/// `abom`: the compiler wrapper, also dispatching the other commands as
/// subcommands.
pub fn run_abom<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let Some(first) = args.get(1) else {
        let _ = write!(err, "{ABOM_USAGE}");
        return EXIT_USAGE;
    };
    let rest = || {
        let mut v = vec![OsString::from(format!("abom {}", first.to_string_lossy()))];
        v.extend(args[2..].iter().cloned());
        v
    };
    match first.to_str() {
        Some("hash") => run_hash(rest(), out, err),
        Some("check") => run_check(rest(), out, err),
        Some("inspect") => run_inspect(rest(), out, err),
        Some("params") => run_params(rest(), out, err),
        Some("-h" | "--help") => {
            let _ = write!(out, "{ABOM_USAGE}");
            EXIT_POSITIVE
        }
        Some("-V" | "--version") => {
            let _ = writeln!(out, "abom {}", env!("CARGO_PKG_VERSION"));
            EXIT_POSITIVE
        }
        _ => abom_core::builder::wrap(&args[1..]),
    }
}

/// Shared `main` body for the binaries.
pub fn main_with(run: fn(Vec<OsString>, &mut dyn Write, &mut dyn Write) -> i32) -> ! {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(
        std::env::args_os().collect(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    );
    std::process::exit(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_abom(args.iter().copied(), &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn bare_abom_prints_usage() {
        let (code, out, err) = run(&["abom"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.starts_with("usage: abom <compiler>"));
    }

    #[test]
    fn help_and_version() {
        assert_eq!(run(&["abom", "--help"]).0, EXIT_POSITIVE);
        let (code, out, _) = run(&["abom", "--version"]);
        assert_eq!(code, EXIT_POSITIVE);
        assert!(out.starts_with("abom "));
    }

    #[test]
    fn failing_compiler_status_passes_through() {
        assert_eq!(run(&["abom", "false"]).0, 1);
        assert_eq!(run(&["abom", "true"]).0, 0);
        assert_eq!(run(&["abom", "/nonexistent/cc"]).0, 127);
    }

    #[test]
    fn subcommands_dispatch() {
        let (code, out, _) = run(&["abom", "params", "--top", "1"]);
        assert_eq!(code, EXIT_POSITIVE);
        assert_eq!(out.lines().count(), 2);
        assert_eq!(run(&["abom", "check"]).0, EXIT_USAGE);
    }
}
