//! Command-line support: corpus access, reference oracles and the
//! exhaustive verifier.

use std::path::{Path, PathBuf};

use rasp_core::interp::{default_n, eval, render_trace, EvalError, Format};
use rasp_core::lang::{load, LoadError, TypedProgram};

pub mod oracles;
pub mod verify;

pub use oracles::{oracle, Oracle, ORACLES};
pub use verify::{verify, words, Lens, Report, Target, VerifyError};

/// Directory of the shipped example programs.
pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn goldens_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("goldens")
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Load { path: String, source: LoadError },
}

pub fn read(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io { path: path.display().to_string(), source })
}

pub fn load_program(path: &Path) -> Result<TypedProgram, FileError> {
    load(&read(path)?).map_err(|source| FileError::Load { path: path.display().to_string(), source })
}

/// A corpus program by name, such as `increment`.
pub fn corpus(name: &str) -> Result<TypedProgram, FileError> {
    load_program(&corpus_dir().join(format!("{name}.rasp")))
}

/// Every corpus program, sorted by name.
pub fn corpus_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .map(|d| {
            d.filter_map(|e| {
                let p = e.ok()?.path();
                (p.extension()? == "rasp").then(|| p.file_stem()?.to_str().map(str::to_string))?
            })
            .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

/// The program name an oracle is looked up by: the file stem.
pub fn program_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

/// The trace of `tp` on `w` as printed by `rasp trace`.
pub fn trace_text(tp: &TypedProgram, w: &str, n: Option<usize>, format: Format) -> Result<String, EvalError> {
    let chars: Vec<char> = w.chars().collect();
    let n = match n {
        Some(n) => n,
        None => default_n(tp, chars.len())?,
    };
    Ok(render_trace(&eval(tp, &chars, n)?, format))
}
