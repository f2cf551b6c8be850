//! Program execution: sequential statements, depth-first rule derivation,
//! method invocation, and attribute loading.

#![allow(clippy::result_large_err)]

mod check;
mod machine;
mod value;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::frontend::{parse_attributes, parse_program_named, AttributeFile, Loc, ParseError, Program};
use crate::geometry::GeometryError;
use crate::scene::{BooleanError, ParseTree};

pub use check::{check_program, CheckIssue, Diagnostic};
pub use value::Value;

pub const DEFAULT_DEPTH_LIMIT: usize = 10_000;
/// Symbol of the root node, which holds the unit cube passed to `main`.
pub const ROOT_SYMBOL: &str = "Axiom";
const STACK_SIZE: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeErrorKind {
    #[error("cannot resolve import `{0}`")]
    UnresolvedImport(String),
    #[error("in {file}: {error}")]
    ImportParse { file: String, error: ParseError },
    #[error("no applicable rule for symbol `{0}`")]
    NoApplicableRule(String),
    #[error("derivation depth exceeded {0}")]
    DepthLimit(usize),
    #[error("rule yields {got} shapes but names {expected} successors")]
    SuccessorArity { expected: usize, got: usize },
    #[error("void() cannot be combined with I(), split() or repeat()")]
    VoidWithGeometry,
    #[error("`{0}` cannot follow split() or repeat() in a rule")]
    FunctionAfterSplit(String),
    #[error("unknown rule function `{0}`")]
    UnknownFunction(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unknown member `{member}` on {on}")]
    UnknownMember { on: String, member: String },
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("`{name}` expects {expected} arguments, got {got}")]
    ArgumentCount { name: String, expected: usize, got: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("attribute file `{0}` not found")]
    MissingAttributeFile(String),
    #[error("attribute group `{group}` not found in `{file}`")]
    MissingGroup { file: String, group: String },
    #[error("in attribute file {file}: {error}")]
    AttributeParse { file: String, error: ParseError },
    #[error("unresolved attribute `@{0}`")]
    UnresolvedAttribute(String),
    #[error("no field `{0}` to override")]
    UnknownOverride(String),
    #[error("loop exceeded {0} iterations")]
    LoopLimit(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Boolean(#[from] BooleanError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{grammar}.psm:{loc}: {kind}")]
pub struct RuntimeError {
    pub grammar: String,
    pub loc: Loc,
    pub kind: RuntimeErrorKind,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Extra directories searched for imported grammars.
    pub import_dirs: Vec<PathBuf>,
    /// Directories searched for attribute files before the grammar's own directory.
    pub attr_dirs: Vec<PathBuf>,
    pub seed: u64,
    /// Replacement values for fields of the entry grammar.
    pub overrides: Vec<(String, Value)>,
    pub depth_limit: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            import_dirs: Vec::new(),
            attr_dirs: Vec::new(),
            seed: 0,
            overrides: Vec::new(),
            depth_limit: DEFAULT_DEPTH_LIMIT,
        }
    }
}

/// Grammars and attribute files available to a run, keyed by name.
#[derive(Debug, Clone, Default)]
pub struct Library {
    programs: HashMap<String, (Arc<Program>, Option<PathBuf>)>,
    attributes: HashMap<String, Arc<AttributeFile>>,
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a grammar; `dir` is where its attribute files are looked up.
    pub fn add_program(&mut self, program: Program, dir: Option<PathBuf>) {
        self.programs.insert(program.name.clone(), (Arc::new(program), dir));
    }

    pub fn add_attributes(&mut self, name: &str, file: AttributeFile) {
        self.attributes.insert(name.to_string(), Arc::new(file));
    }

    pub fn program(&self, name: &str) -> Option<&Program> {
        self.programs.get(name).map(|(p, _)| p.as_ref())
    }
}

/// Reads and parses a grammar file, checking the file stem against the grammar name.
pub fn load_program(path: &Path) -> Result<Program, LoadError> {
    let src = fs::read_to_string(path).map_err(|e| LoadError::Io(path.display().to_string(), e.to_string()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    parse_program_named(&src, stem).map_err(|e| LoadError::Parse(path.display().to_string(), e))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}:{1}")]
    Parse(String, ParseError),
}

/// Resolves the transitive imports of `entry` from `lib` or from `.psm` files in `dirs`.
pub fn resolve_imports(entry: &Program, lib: &mut Library, dirs: &[PathBuf]) -> Result<(), RuntimeError> {
    let mut queue: Vec<String> = entry.imports.clone();
    while let Some(name) = queue.pop() {
        if lib.programs.contains_key(&name) || name == entry.name {
            continue;
        }
        let stem = name.rsplit('.').next().unwrap_or(&name).to_string();
        if lib.programs.contains_key(&stem) {
            continue;
        }
        let found = dirs.iter().map(|d| d.join(format!("{stem}.psm"))).find(|p| p.is_file());
        let Some(path) = found else {
            return Err(RuntimeError {
                grammar: entry.name.clone(),
                loc: entry.loc,
                kind: RuntimeErrorKind::UnresolvedImport(name),
            });
        };
        let program = match load_program(&path) {
            Ok(p) => p,
            Err(LoadError::Parse(file, error)) => {
                return Err(RuntimeError {
                    grammar: entry.name.clone(),
                    loc: entry.loc,
                    kind: RuntimeErrorKind::ImportParse { file, error },
                })
            }
            Err(LoadError::Io(..)) => {
                return Err(RuntimeError {
                    grammar: entry.name.clone(),
                    loc: entry.loc,
                    kind: RuntimeErrorKind::UnresolvedImport(name),
                })
            }
        };
        queue.extend(program.imports.iter().cloned());
        lib.add_program(program, path.parent().map(Path::to_path_buf));
    }
    Ok(())
}

pub(crate) fn read_attribute_file(path: &Path) -> Result<Option<AttributeFile>, RuntimeErrorKind> {
    let Ok(src) = fs::read_to_string(path) else {
        return Ok(None);
    };
    parse_attributes(&src)
        .map(Some)
        .map_err(|error| RuntimeErrorKind::AttributeParse { file: path.display().to_string(), error })
}

/// Executes `entry` (whose imports must already be in `lib`) and returns the derived tree.
///
/// `dir` is the entry grammar's directory, used for attribute-file lookup. The
/// derivation runs on a dedicated thread with a large stack so that deeply
/// nested method invocations do not overflow.
pub fn run_program(
    entry: &Program,
    dir: Option<&Path>,
    lib: &Library,
    opts: &RunOptions,
) -> Result<RunOutput, RuntimeError> {
    let entry = entry.clone();
    let dir = dir.map(Path::to_path_buf);
    let lib = lib.clone();
    let opts = opts.clone();
    std::thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(move || machine::run(entry, dir, lib, opts))
        .expect("spawn derivation thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tree: ParseTree,
    /// Lines written by `print(...)`.
    pub log: Vec<String>,
}
