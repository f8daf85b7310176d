//! Classification of compiler, linker and archiver command lines.

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Compile,
    Link,
    CompileAndLink,
    /// `ar` creating or updating an archive; the sidecar is rebuilt.
    Archive,
    Passthrough,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceInput {
    pub path: PathBuf,
    /// Language forced with `-x`, if any.
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputTarget {
    pub path: PathBuf,
    /// Indices into `InvocationPlan::source_inputs`.
    pub sources: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkInput {
    Object(PathBuf),
    Archive(PathBuf),
    Shared(PathBuf),
    /// `-lname`, resolved against library search paths later.
    Library(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvocationPlan {
    pub compiler_argv: Vec<String>,
    pub mode: Mode,
    pub outputs: Vec<OutputTarget>,
    pub source_inputs: Vec<SourceInput>,
    pub link_inputs: Vec<LinkInput>,
    pub lib_dirs: Vec<PathBuf>,
    /// Flags forwarded to the dependency scan (outputs and inputs removed).
    pub scan_flags: Vec<String>,
    pub static_link: bool,
    pub default_libs: bool,
}

impl InvocationPlan {
    fn passthrough(argv: Vec<String>) -> Self {
        InvocationPlan {
            compiler_argv: argv,
            mode: Mode::Passthrough,
            outputs: Vec::new(),
            source_inputs: Vec::new(),
            link_inputs: Vec::new(),
            lib_dirs: Vec::new(),
            scan_flags: Vec::new(),
            static_link: false,
            default_libs: false,
        }
    }

    pub fn sources_of(&self, output: &OutputTarget) -> Vec<PathBuf> {
        output
            .sources
            .iter()
            .map(|&i| self.source_inputs[i].path.clone())
            .collect()
    }
}

const SOURCE_EXTS: &[&str] = &[
    "c", "h", "i", "cc", "cp", "cpp", "cxx", "c++", "C", "CPP", "hh", "hpp", "hxx", "h++", "H",
    "ii", "tcc", "m", "mm", "M", "mi", "mii", "s", "S", "sx", "asm", "f", "for", "ftn", "f90",
    "f95", "f03", "f08", "F", "FOR", "F90", "F95", "F03", "F08", "cu", "cl", "d", "go", "ads",
    "adb",
];
const HEADER_EXTS: &[&str] = &["h", "hh", "hpp", "hxx", "h++", "H", "tcc"];

/// Flags whose value is the following token.
const FLAGS_WITH_ARG: &[&str] = &[
    "-o",
    "-I",
    "-L",
    "-D",
    "-U",
    "-include",
    "-imacros",
    "-isystem",
    "-iquote",
    "-idirafter",
    "-iprefix",
    "-iwithprefix",
    "-iwithprefixbefore",
    "-isysroot",
    "-imultilib",
    "-MF",
    "-MT",
    "-MQ",
    "-x",
    "-Xlinker",
    "-Xassembler",
    "-Xpreprocessor",
    "-Xclang",
    "-T",
    "-u",
    "-z",
    "-e",
    "-l",
    "-aux-info",
    "-arch",
    "-target",
    "--param",
    "-A",
    "--sysroot",
    "-B",
    "-V",
    "-b",
];

/// Flags that also accept their value joined, as in `-Iinc` or `-lm`.
const JOINED_PREFIXES: &[&str] = &[
    "-MF", "-MT", "-MQ", "-o", "-I", "-L", "-D", "-U", "-l", "-x",
];

/// Returns the flag name, its value, and whether the value was the next token.
fn split_flag(arg: &str, next: Option<String>) -> (&str, Option<String>, bool) {
    if FLAGS_WITH_ARG.contains(&arg) {
        return (arg, next, true);
    }
    for prefix in JOINED_PREFIXES {
        if let Some(v) = arg.strip_prefix(prefix).filter(|v| !v.is_empty()) {
            return (prefix, Some(v.to_string()), false);
        }
    }
    (arg, None, false)
}

/// Flags that select a mode producing no binary.
const NO_OUTPUT_FLAGS: &[&str] = &[
    "-E",
    "-S",
    "-fsyntax-only",
    "--version",
    "-dumpversion",
    "-dumpfullversion",
    "-dumpmachine",
    "-dumpspecs",
    "-###",
    "--help",
    "-print-search-dirs",
    "-print-libgcc-file-name",
    "-print-multiarch",
    "-print-multi-directory",
    "-print-multi-lib",
    "-print-sysroot",
];

/// Dependency-file flags dropped from the dependency scan.
const DEP_FLAGS: &[&str] = &["-M", "-MM", "-MD", "-MMD", "-MP", "-MG"];

/// Link-only flags dropped from the dependency scan.
const LINK_ONLY: &[&str] = &["-shared", "-static", "-pie", "-no-pie", "-rdynamic", "-s"];

fn extension(path: &str) -> Option<&str> {
    Path::new(path).extension().and_then(|e| e.to_str())
}

fn is_source(path: &str) -> bool {
    extension(path).is_some_and(|e| SOURCE_EXTS.contains(&e))
}

fn is_header(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| HEADER_EXTS.contains(&e))
}

fn is_shared(path: &str) -> bool {
    let name = Path::new(path)
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(path);
    name.ends_with(".so") || name.contains(".so.") || name.ends_with(".dylib")
}

fn is_archiver(program: &str) -> bool {
    let name = Path::new(program)
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(program);
    name == "ar" || name.ends_with("-ar")
}

/// Splits a response file the way GCC does: whitespace separated, with
/// single quotes, double quotes and backslash escapes.
pub fn split_response_file(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_token = false;
    let mut quote: Option<char> = None;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match (quote, c) {
            (_, '\\') => {
                if let Some(next) = chars.next() {
                    cur.push(next);
                }
                in_token = true;
            }
            (Some(q), c) if c == q => quote = None,
            (Some(_), c) => cur.push(c),
            (None, '\'' | '"') => {
                quote = Some(c);
                in_token = true;
            }
            (None, c) if c.is_whitespace() => {
                if in_token {
                    out.push(std::mem::take(&mut cur));
                    in_token = false;
                }
            }
            (None, c) => {
                cur.push(c);
                in_token = true;
            }
        }
    }
    if in_token {
        out.push(cur);
    }
    out
}

/// Expands `@file` arguments recursively. Unreadable files stay literal.
pub fn expand_response_files(argv: &[String]) -> Vec<String> {
    fn expand(args: &[String], depth: usize, out: &mut Vec<String>) {
        for a in args {
            match a.strip_prefix('@') {
                Some(file) if depth < 16 && !file.is_empty() => match std::fs::read_to_string(file)
                {
                    Ok(text) => expand(&split_response_file(&text), depth + 1, out),
                    Err(_) => out.push(a.clone()),
                },
                _ => out.push(a.clone()),
            }
        }
    }
    let mut out = Vec::new();
    expand(argv, 0, &mut out);
    out
}

/// Classifies a command line. Anything not understood becomes passthrough.
pub fn plan(argv: &[String]) -> InvocationPlan {
    let Some(program) = argv.first() else {
        return InvocationPlan::passthrough(Vec::new());
    };
    if is_archiver(program) {
        return plan_archive(argv);
    }
    let args = expand_response_files(&argv[1..]);

    let mut compile_only = false;
    let mut no_output = false;
    let mut preprocess_deps_only = false;
    let mut writes_dep_file = false;
    let mut output: Option<String> = None;
    let mut language: Option<String> = None;
    let mut sources = Vec::new();
    let mut link_inputs = Vec::new();
    let mut lib_dirs = Vec::new();
    let mut scan_flags = Vec::new();
    let mut static_link = false;
    let mut default_libs = true;

    let mut i = 0;
    while i < args.len() {
        let arg = args[i].as_str();
        let next = args.get(i + 1).cloned();
        i += 1;

        if arg == "-" {
            return InvocationPlan::passthrough(argv.to_vec());
        }
        if !arg.starts_with('-') || arg.len() == 1 {
            let lang = language.clone().filter(|l| l != "none");
            if lang.is_some() || is_source(arg) {
                sources.push(SourceInput {
                    path: PathBuf::from(arg),
                    language: lang,
                });
            } else if arg.ends_with(".a") {
                link_inputs.push(LinkInput::Archive(PathBuf::from(arg)));
            } else if is_shared(arg) {
                link_inputs.push(LinkInput::Shared(PathBuf::from(arg)));
            } else {
                link_inputs.push(LinkInput::Object(PathBuf::from(arg)));
            }
            continue;
        }

        match arg {
            "-c" => compile_only = true,
            "-v" if args.len() == 1 => no_output = true,
            a if NO_OUTPUT_FLAGS.contains(&a)
                || a.starts_with("-print-file-name=")
                || a.starts_with("-print-prog-name=") =>
            {
                no_output = true
            }
            "-M" | "-MM" => preprocess_deps_only = true,
            "-MD" | "-MMD" => writes_dep_file = true,
            "-static" => static_link = true,
            "-nostdlib" | "-nodefaultlibs" => default_libs = false,
            _ => {}
        }

        let (flag, value, takes_arg) = split_flag(arg, next);
        if takes_arg {
            i += 1;
        }
        match flag {
            "-o" => output = value,
            "-x" => language = value,
            "-L" => lib_dirs.extend(value.map(PathBuf::from)),
            "-l" => {
                if let Some(v) = value {
                    link_inputs.push(LinkInput::Library(v));
                }
            }
            "-MF" | "-MT" | "-MQ" | "-Xlinker" | "-T" | "-u" | "-z" | "-e" => {}
            _ if DEP_FLAGS.contains(&flag) || LINK_ONLY.contains(&flag) || flag == "-c" => {}
            _ if flag.starts_with("-Wl,") => {}
            _ => {
                scan_flags.push(arg.to_string());
                if takes_arg {
                    if let Some(v) = value {
                        scan_flags.push(v);
                    }
                }
            }
        }
    }

    if no_output || (preprocess_deps_only && !writes_dep_file) {
        return InvocationPlan::passthrough(argv.to_vec());
    }

    let mode = if compile_only {
        Mode::Compile
    } else if !sources.is_empty() {
        Mode::CompileAndLink
    } else if !link_inputs
        .iter()
        .all(|l| matches!(l, LinkInput::Library(_)))
    {
        Mode::Link
    } else {
        Mode::Passthrough
    };

    let outputs = match mode {
        Mode::Compile => {
            let compiled: Vec<usize> = sources
                .iter()
                .enumerate()
                .filter(|(_, s)| s.language.is_some() || !is_header(&s.path))
                .map(|(i, _)| i)
                .collect();
            match (&output, compiled.as_slice()) {
                (_, []) => Vec::new(),
                (Some(o), [_]) => vec![OutputTarget {
                    path: PathBuf::from(o),
                    sources: compiled.clone(),
                }],
                (Some(_), _) => Vec::new(),
                (None, _) => compiled
                    .iter()
                    .map(|&i| {
                        let stem = sources[i].path.file_stem().unwrap_or_default();
                        let mut name = stem.to_os_string();
                        name.push(".o");
                        OutputTarget {
                            path: PathBuf::from(name),
                            sources: vec![i],
                        }
                    })
                    .collect(),
            }
        }
        Mode::CompileAndLink | Mode::Link => vec![OutputTarget {
            path: PathBuf::from(output.as_deref().unwrap_or("a.out")),
            sources: (0..sources.len()).collect(),
        }],
        _ => Vec::new(),
    };
    if outputs.is_empty() {
        return InvocationPlan::passthrough(argv.to_vec());
    }
    if mode == Mode::Compile {
        link_inputs.clear();
    }

    InvocationPlan {
        compiler_argv: argv.to_vec(),
        mode,
        outputs,
        source_inputs: sources,
        link_inputs,
        lib_dirs,
        scan_flags,
        static_link,
        default_libs: default_libs && mode != Mode::Compile,
    }
}

fn plan_archive(argv: &[String]) -> InvocationPlan {
    let mut positional = argv[1..].iter().filter(|a| !a.starts_with("--"));
    let Some(key) = positional.next() else {
        return InvocationPlan::passthrough(argv.to_vec());
    };
    let ops = key.trim_start_matches('-');
    if !ops
        .chars()
        .any(|c| matches!(c, 'r' | 'q' | 'd' | 'm' | 's'))
    {
        return InvocationPlan::passthrough(argv.to_vec());
    }
    if ops.contains(['a', 'b', 'i']) && ops.contains(['r', 'm']) {
        positional.next();
    }
    if ops.contains('N') {
        positional.next();
    }
    let Some(archive) = positional.next() else {
        return InvocationPlan::passthrough(argv.to_vec());
    };
    let mut plan = InvocationPlan::passthrough(argv.to_vec());
    plan.mode = Mode::Archive;
    plan.outputs = vec![OutputTarget {
        path: PathBuf::from(archive),
        sources: Vec::new(),
    }];
    plan
}
