use std::ffi::OsString;
use std::fs;
use std::path::Path;

use abom_cli::{run_check, run_hash, run_inspect, run_params};
use abom_core::{hash_bytes, AbomDocument, FilterChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Run = fn(Vec<OsString>, &mut dyn std::io::Write, &mut dyn std::io::Write) -> i32;

fn call(run: Run, args: &[&dyn AsRef<std::ffi::OsStr>]) -> (i32, String, String) {
    let argv = std::iter::once(OsString::from("tool"))
        .chain(args.iter().map(|a| a.as_ref().to_os_string()))
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_abom(path: &Path, chain: FilterChain) {
    fs::write(path, AbomDocument::from(chain).serialize().unwrap()).unwrap();
}

fn three_file_chain() -> FilterChain {
    let mut c = FilterChain::new();
    for s in [&b"a.c"[..], b"b.c", b"shared.h"] {
        c.insert(hash_bytes(s)).unwrap();
    }
    c
}

#[test]
fn hash_formats() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.c");
    let b = dir.path().join("b.c");
    fs::write(&a, b"").unwrap();
    fs::write(&b, b"abc").unwrap();

    assert_eq!(
        call(run_hash, &[&a]),
        (0, "7f9c2ba4e0\n".into(), String::new())
    );
    let (code, out, _) = call(run_hash, &[&a, &b]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        format!("7f9c2ba4e0  {}\n5881092dd0  {}\n", a.display(), b.display())
    );

    let missing = dir.path().join("missing.c");
    let (code, out, err) = call(run_hash, &[&a, &missing]);
    assert_eq!(code, 1);
    assert_eq!(out.lines().count(), 1);
    assert!(err.contains("missing.c"));
    assert_eq!(call(run_hash, &[]).0, 2);
}

#[test]
fn check_present_absent_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let abom = dir.path().join("x.abom");
    write_abom(&abom, three_file_chain());

    let present = hash_bytes(b"a.c").to_hex();
    assert_eq!(
        call(run_check, &[&abom, &present]),
        (0, "Dependency Present\n".into(), String::new())
    );
    let (code, out, _) = call(run_check, &[&abom, &hash_bytes(b"nope").to_hex()]);
    assert_eq!((code, out.as_str()), (1, "Dependency Absent\n"));

    let text = dir.path().join("notes.txt");
    fs::write(&text, "plain text\n").unwrap();
    let (code, out, err) = call(run_check, &[&text, &present]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("no ABOM found"), "{err}");

    let elf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/hello.o");
    let (code, _, err) = call(run_check, &[&elf, &present]);
    assert_eq!(code, 2);
    assert!(err.ends_with("no ABOM found\n"), "{err}");

    let (code, _, err) = call(run_check, &[&abom, &"7f9c2ba4e"]);
    assert_eq!(code, 2);
    assert!(err.contains("invalid digest"));

    let mut bytes = fs::read(&abom).unwrap();
    bytes.truncate(bytes.len() - 1);
    fs::write(&abom, bytes).unwrap();
    let (code, _, err) = call(run_check, &[&abom, &present]);
    assert_eq!(code, 2);
    assert!(err.contains("ABOM"), "{err}");
}

#[test]
fn check_reads_embedded_sections() {
    let fixture = include_bytes!("../../core/tests/fixtures/hello");
    let abom = AbomDocument::from(three_file_chain()).serialize().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("hello");
    fs::write(
        &bin,
        abom_core::objfile::embed_abom(fixture, &abom).unwrap(),
    )
    .unwrap();
    assert_eq!(
        call(run_check, &[&bin, &hash_bytes(b"shared.h").to_hex()]).0,
        0
    );
}

#[test]
fn inspect_reports_filters() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.abom");
    write_abom(&one, three_file_chain());
    let (code, out, _) = call(run_inspect, &[&one]);
    assert_eq!(code, 0);
    assert!(out.starts_with("version: 1\nfilters: 1\n"), "{out}");
    let row: Vec<&str> = out.lines().last().unwrap().split_whitespace().collect();
    let ones: usize = row[1].parse().unwrap();
    let est: f64 = row[2].parse().unwrap();
    assert!((3..=6).contains(&ones));
    assert!((est - 3.0).abs() < 0.5);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut big = FilterChain::new();
    for _ in 0..1500 {
        big.insert(abom_core::Digest36::from_masked(rng.gen()))
            .unwrap();
    }
    let two = dir.path().join("two.abom");
    write_abom(&two, big);
    let (code, out, _) = call(run_inspect, &[&two]);
    assert_eq!(code, 0);
    assert!(out.contains("filters: 2\n"));
    let table = out.split("filter  ones  n*\n").nth(1).unwrap();
    assert_eq!(table.lines().count(), 2);

    let text = dir.path().join("t");
    fs::write(&text, "x").unwrap();
    assert_eq!(call(run_inspect, &[&text]).0, 2);
}

#[test]
fn params_flags() {
    let (code, out, _) = call(run_params, &[&"--min-n", &"0", &"--max-log2-m", &"10"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("m_log2,k,n_max,f,z_bytes,bytes_per_item")
    );
    assert!(lines.clone().count() > 0);
    assert!(lines.all(|l| l.split(',').next().unwrap().parse::<u32>().unwrap() <= 10));

    assert_eq!(call(run_params, &[&"--max-f-log2", &"0"]).0, 2);
    assert_eq!(call(run_params, &[&"--max-f-log2", &"3"]).0, 2);
    assert_eq!(call(run_params, &[&"--max-k", &"zero"]).0, 2);
    assert_eq!(call(run_params, &[&"--bogus"]).0, 2);

    let (_, all, _) = call(run_params, &[]);
    assert_eq!(all.lines().count(), 46);
}
