//! Batch checking and localization over a directory of programs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::asm::assemble;
use crate::classfile::parse_class;
use crate::error::{Error, Result};
use crate::localize::{check, diagnose, select_method, LocalizeOptions};
use crate::method::Program;
use crate::spec::parse_spec;

fn io_error(path: &Path, err: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), message: err.to_string() }
}

/// Reads a program, choosing the format by extension.
pub fn load_program(path: &Path) -> Result<Program> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bcasm") => assemble(&fs::read_to_string(path).map_err(|e| io_error(path, e))?),
        Some("class") => parse_class(&fs::read(path).map_err(|e| io_error(path, e))?),
        _ => Err(Error::Input(format!("{}: expected a .bcasm or .class file", path.display()))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Consistent,
    Faulty,
    Error { kind: &'static str, message: String },
    MissingSpec,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Consistent => "consistent",
            Status::Faulty => "faulty",
            Status::Error { .. } => "error",
            Status::MissingSpec => "missing-spec",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProgramResult {
    pub stem: String,
    pub status: Status,
    pub candidates: Vec<u32>,
    /// Offset named by the `<stem>.fault` sidecar.
    pub fault: Option<u32>,
}

impl ProgramResult {
    /// Whether the golden fault offset was among the candidates.
    pub fn hit(&self) -> Option<bool> {
        self.fault.map(|f| self.candidates.contains(&f))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusSummary {
    pub programs: Vec<ProgramResult>,
}

impl CorpusSummary {
    fn count(&self, status: &str) -> usize {
        self.programs.iter().filter(|p| p.status.as_str() == status).count()
    }

    pub fn consistent(&self) -> usize {
        self.count("consistent")
    }

    pub fn faulty(&self) -> usize {
        self.count("faulty")
    }

    pub fn errors(&self) -> usize {
        self.count("error")
    }

    pub fn missing_specs(&self) -> usize {
        self.count("missing-spec")
    }

    /// `(hits, programs with a golden fault)`.
    pub fn hits(&self) -> (usize, usize) {
        let judged: Vec<bool> = self.programs.iter().filter_map(ProgramResult::hit).collect();
        (judged.iter().filter(|&&h| h).count(), judged.len())
    }
}

fn program_paths(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let is_program = matches!(path.extension().and_then(|e| e.to_str()), Some("bcasm" | "class"));
        if let (true, Some(stem)) = (is_program, path.file_stem().and_then(|s| s.to_str())) {
            paths.push((stem.to_owned(), path.clone()));
        }
    }
    paths.sort();
    Ok(paths)
}

fn read_fault(path: &Path) -> Option<u32> {
    fs::read_to_string(path.with_extension("fault")).ok()?.trim().parse().ok()
}

fn run_one(stem: &str, path: &Path, spec_dir: &Path, options: &LocalizeOptions) -> ProgramResult {
    let fault = read_fault(path);
    let spec_path = spec_dir.join(format!("{stem}.spec.json"));
    let outcome = (|| -> Result<Option<(bool, Vec<u32>)>> {
        let Ok(text) = fs::read_to_string(&spec_path) else { return Ok(None) };
        let program = load_program(path)?;
        let spec = parse_spec(&text)?;
        let method = select_method(&program, &spec)?;
        let bound = spec.bind(method)?;
        let verdict = check(method, &bound, options.check)?;
        let diagnosis = diagnose(method, &bound, &verdict, options)?;
        let candidates = diagnosis.map(|d| d.offsets().collect()).unwrap_or_default();
        Ok(Some((verdict.is_consistent(), candidates)))
    })();
    let (status, candidates) = match outcome {
        Ok(None) => (Status::MissingSpec, Vec::new()),
        Ok(Some((true, c))) => (Status::Consistent, c),
        Ok(Some((false, c))) => (Status::Faulty, c),
        Err(e) => (Status::Error { kind: e.kind(), message: e.to_string() }, Vec::new()),
    };
    ProgramResult { stem: stem.to_owned(), status, candidates, fault }
}

/// Checks and localizes every program in `dir` against
/// `<spec_dir>/<stem>.spec.json`. A failure in one program is recorded
/// in its result and never stops the run.
pub fn corpus_run(dir: &Path, spec_dir: &Path, options: &LocalizeOptions) -> Result<CorpusSummary> {
    let paths = program_paths(dir)?;
    let programs = paths.par_iter().map(|(stem, path)| run_one(stem, path, spec_dir, options)).collect();
    Ok(CorpusSummary { programs })
}
