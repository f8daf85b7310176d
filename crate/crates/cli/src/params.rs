use std::ffi::OsString;
use std::io::Write;

use abom_core::params::{sweep, SweepBounds};
use clap::Parser;

use crate::{parse_args, EXIT_POSITIVE, EXIT_USAGE};

/// Enumerate Bloom filter parameters under a false-positive bound, as CSV
/// sorted by compressed size.
#[derive(Parser)]
#[command(name = "abom-params", version, allow_negative_numbers = true)]
struct Args {
    /// Largest filter size considered, as log2 of the bit count.
    #[arg(long, default_value_t = 24, value_parser = clap::value_parser!(u32).range(1..=40))]
    max_log2_m: u32,
    /// Largest hash count considered.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=64))]
    max_k: u32,
    /// Smallest admissible capacity.
    #[arg(long, default_value_t = 1000)]
    min_n: u64,
    /// False-positive bound, as a negative power of two.
    #[arg(long, default_value_t = -14)]
    max_f_log2: i32,
    /// Print only the first N rows.
    #[arg(long)]
    top: Option<usize>,
}

pub fn run_params(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args: Args = match parse_args(args, out, err) {
        Ok(a) => a,
        Err(code) => return code,
    };
    if !(-1074..0).contains(&args.max_f_log2) {
        let _ = writeln!(
            err,
            "abom-params: --max-f-log2 must be a negative integer, got {}",
            args.max_f_log2
        );
        return EXIT_USAGE;
    }
    let bounds = SweepBounds {
        max_log2_m: args.max_log2_m,
        max_k: args.max_k,
        min_n: args.min_n,
        f_bound: f64::from(args.max_f_log2).exp2(),
    };
    let rows = sweep(&bounds);
    let limit = args.top.unwrap_or(rows.len());
    let mut text = String::from("m_log2,k,n_max,f,z_bytes,bytes_per_item\n");
    for r in rows.iter().take(limit) {
        text.push_str(&format!(
            "{},{},{},{:.6e},{},{:.3}\n",
            r.m_log2, r.k, r.n_max, r.f, r.z_bytes, r.bytes_per_item
        ));
    }
    let _ = out.write_all(text.as_bytes());
    EXIT_POSITIVE
}
