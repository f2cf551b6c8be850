use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use psml_core::export::{write_obj, write_stats, ExportOptions, GroupBy, StatsFormat};
use psml_core::geometry::set_default_segments;
use psml_core::interp::{
    check_program, load_program, resolve_imports, run_program, Library, LoadError, RunOptions, Value,
};
use psml_core::scene::{collect_stats, leaf_stats, NodeKind};

/// `println!` that ignores a closed stdout instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "psml", version, about = "Derive and export volumetric shape-grammar models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, derive and export a grammar.
    Run(RunArgs),
    /// Parse and statically validate a grammar without deriving it.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Entry grammar (`.psm`).
    file: PathBuf,
    /// Output stem; writes STEM.obj, STEM.mtl and STEM.stats.{txt,csv}.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Segments per full turn for curved surfaces.
    #[arg(long, default_value_t = psml_core::geometry::DEFAULT_SEGMENTS)]
    segments: usize,
    /// Also write void terminals to STEM.voids.obj.
    #[arg(long)]
    include_voids: bool,
    /// Path patterns for the stats report (default: one row per leaf symbol).
    #[arg(long, num_args = 1..)]
    stats: Vec<String>,
    /// Directory searched for attribute files (repeatable).
    #[arg(long = "attr-dir")]
    attr_dirs: Vec<PathBuf>,
    /// Directory searched for imported grammars (repeatable).
    #[arg(long = "import-dir")]
    import_dirs: Vec<PathBuf>,
    /// Override a field of the entry grammar, e.g. `--set t=1` (repeatable).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    /// Name OBJ groups by full parse-tree path instead of leaf symbol.
    #[arg(long)]
    full_paths: bool,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long = "import-dir")]
    import_dirs: Vec<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_override(s: &str) -> Result<(String, Value), Failure> {
    let Some((name, value)) = s.split_once('=') else {
        return Err(fail(EXIT_USAGE, format!("--set expects NAME=VALUE, got `{s}`")));
    };
    let value = value.trim();
    let v = if let Some(inner) = value.strip_prefix('{').and_then(|v| v.strip_suffix('}')) {
        let items: Result<Vec<Value>, _> = inner.split(',').map(|x| x.trim().parse::<f64>().map(Value::Num)).collect();
        Value::Array(items.map_err(|_| fail(EXIT_USAGE, format!("bad number list in `{s}`")))?)
    } else if let Ok(n) = value.parse::<f64>() {
        Value::Num(n)
    } else {
        Value::Str(value.to_string())
    };
    Ok((name.trim().to_string(), v))
}

fn load_entry(file: &Path, import_dirs: &[PathBuf]) -> Result<(psml_core::frontend::Program, Library), Failure> {
    let program = load_program(file).map_err(|e| match e {
        LoadError::Io(..) => fail(EXIT_IO, e.to_string()),
        LoadError::Parse(..) => fail(EXIT_CHECK, e.to_string()),
    })?;
    let mut dirs: Vec<PathBuf> = file.parent().map(Path::to_path_buf).into_iter().collect();
    dirs.extend(import_dirs.iter().cloned());
    let mut lib = Library::new();
    resolve_imports(&program, &mut lib, &dirs).map_err(|e| fail(EXIT_CHECK, e.to_string()))?;
    Ok((program, lib))
}

fn cmd_check(args: CheckArgs) -> Result<(), Failure> {
    let program = load_program(&args.file).map_err(|e| match e {
        LoadError::Io(..) => fail(EXIT_IO, e.to_string()),
        LoadError::Parse(..) => fail(EXIT_CHECK, e.to_string()),
    })?;
    let mut dirs: Vec<PathBuf> = args.file.parent().map(Path::to_path_buf).into_iter().collect();
    dirs.extend(args.import_dirs);
    let mut lib = Library::new();
    let import_error = resolve_imports(&program, &mut lib, &dirs).err();
    let diagnostics = check_program(&program, &lib);
    if diagnostics.is_empty() && import_error.is_none() {
        say!("{}: OK", args.file.display());
        return Ok(());
    }
    let mut n = diagnostics.len();
    for d in &diagnostics {
        say!("{d}");
    }
    if let Some(e) = import_error {
        if !diagnostics.iter().any(|d| matches!(d.issue, psml_core::interp::CheckIssue::UnresolvedImport(_))) {
            say!("{e}");
            n += 1;
        }
    }
    Err(fail(EXIT_CHECK, format!("{n} problem(s) found")))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let start = Instant::now();
    if args.segments < 3 {
        return Err(fail(EXIT_USAGE, format!("--segments must be at least 3, got {}", args.segments)));
    }
    let overrides = args.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let (program, lib) = load_entry(&args.file, &args.import_dirs)?;
    set_default_segments(args.segments);
    let opts = RunOptions {
        import_dirs: args.import_dirs.clone(),
        attr_dirs: args.attr_dirs.clone(),
        seed: args.seed,
        overrides,
        ..RunOptions::default()
    };
    let out = run_program(&program, args.file.parent(), &lib, &opts).map_err(|e| fail(EXIT_RUNTIME, e.to_string()))?;
    for line in &out.log {
        say!("{line}");
    }
    let tree = out.tree;

    let stem_path = match &args.output {
        Some(p) => p.clone(),
        None => PathBuf::from(args.file.file_stem().unwrap_or_default()),
    };
    let stem_name = stem_path.file_name().and_then(|s| s.to_str()).unwrap_or("model").to_string();
    let export = ExportOptions {
        include_voids: args.include_voids,
        segments: args.segments,
        group_by: if args.full_paths { GroupBy::FullPath } else { GroupBy::LeafSymbol },
        stem: stem_name,
    };
    let files = write_obj(&tree, &export).map_err(|e| fail(EXIT_RUNTIME, e.to_string()))?;
    let table = if args.stats.is_empty() { leaf_stats(&tree) } else { collect_stats(&tree, &args.stats) };

    let with_ext = |ext: &str| {
        let mut s = stem_path.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    let mut outputs = vec![
        (with_ext(".obj"), files.obj),
        (with_ext(".mtl"), files.mtl),
        (with_ext(".stats.txt"), write_stats(&table, StatsFormat::Text)),
        (with_ext(".stats.csv"), write_stats(&table, StatsFormat::Csv)),
    ];
    if let Some(v) = files.voids {
        outputs.push((with_ext(".voids.obj"), v));
    }
    write_all(&outputs).map_err(|e| fail(EXIT_IO, e))?;

    let terminals = tree.count(NodeKind::Terminal);
    let voids = tree.count(NodeKind::VoidTerminal);
    say!("terminals: {terminals}");
    say!("voids: {voids}");
    say!("visible volume: {:.6}", tree.visible_volume());
    for (path, _) in &outputs {
        say!("wrote {}", path.display());
    }
    say!("time: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are complete.
fn write_all(outputs: &[(PathBuf, String)]) -> Result<(), String> {
    let mut staged = Vec::new();
    for (path, content) in outputs {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        tmp.write_all(content.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| format!("{}: {}", path.display(), e.error))?;
    }
    Ok(())
}
