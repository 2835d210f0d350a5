//! Corpus manifest: one JSON file listing cases and their expected
//! uninstrumented behavior.
//!
//! ```json
//! { "name": "minij", "seeding": "seeding/shop",
//!   "cases": [{ "name": "c01", "path": "crash/c01.mj", "entry": "Main",
//!               "expect": { "crash": "NullPointerException" }, "tags": ["void-method"] }] }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, HarnessError};
use crate::frontend::check::CheckedProgram;
use crate::frontend::{parse, SourceUnit};
use crate::runtime::{run, Controller, Exit, RunOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    /// Normal exit with exactly this standard output.
    Output(String),
    /// Uncaught exception of this type.
    Crash(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCase {
    pub name: String,
    /// Relative to the manifest's directory; also the file id in crash-point keys.
    pub path: String,
    #[serde(default = "default_entry")]
    pub entry: String,
    pub expect: Expected,
    #[serde(default)]
    pub tags: Vec<String>,
}

fn default_entry() -> String {
    "Main".into()
}

impl CorpusCase {
    pub fn is_crash(&self) -> bool {
        matches!(self.expect, Expected::Crash(_))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    name: String,
    #[serde(default)]
    seeding: Option<String>,
    cases: Vec<CorpusCase>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub root: PathBuf,
    pub cases: Vec<CorpusCase>,
    pub seeding: Option<PathBuf>,
}

impl Corpus {
    pub fn load(manifest: &Path) -> Result<Corpus, HarnessError> {
        let text = std::fs::read_to_string(manifest).map_err(io_err(manifest))?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|source| HarnessError::Manifest { path: manifest.into(), source })?;
        let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(Corpus { name: m.name, seeding: m.seeding.map(|s| root.join(s)), root, cases: m.cases })
    }

    pub fn crashing(&self) -> Vec<&CorpusCase> {
        self.cases.iter().filter(|c| c.is_crash()).collect()
    }

    pub fn normal(&self) -> Vec<&CorpusCase> {
        self.cases.iter().filter(|c| !c.is_crash()).collect()
    }

    pub fn case(&self, name: &str) -> Result<&CorpusCase, HarnessError> {
        self.cases.iter().find(|c| c.name == name).ok_or_else(|| HarnessError::UnknownCase(name.into()))
    }

    pub fn source(&self, case: &CorpusCase) -> Result<SourceUnit, HarnessError> {
        let path = self.root.join(&case.path);
        let text = std::fs::read_to_string(&path).map_err(io_err(path))?;
        Ok(SourceUnit::new(case.path.clone(), text))
    }

    pub fn program(&self, case: &CorpusCase) -> Result<CheckedProgram, HarnessError> {
        Ok(parse(&self.source(case)?)?)
    }
}

/// Whether an uninstrumented run matches the expectation.
pub fn matches_expected(expected: &Expected, stdout: &str, exit: &Exit) -> bool {
    match expected {
        Expected::Output(out) => exit.is_normal() && stdout == out,
        Expected::Crash(e) => exit.exception() == Some(e.as_str()),
    }
}

/// Runs every case uninstrumented; returns one message per mismatch.
pub fn validate_corpus(corpus: &Corpus) -> Vec<String> {
    let mut problems = Vec::new();
    for case in &corpus.cases {
        let r = corpus
            .program(case)
            .map_err(|e| e.to_string())
            .and_then(|p| run(&p, &case.entry, &mut Controller::off(), &RunOptions::default()).map_err(|e| e.to_string()));
        match r {
            Err(e) => problems.push(format!("{}: {e}", case.name)),
            Ok(r) if !matches_expected(&case.expect, &r.stdout, &r.exit) => {
                problems.push(format!("{}: expected {:?}, got {} with output {:?}", case.name, case.expect, r.exit, r.stdout))
            }
            Ok(_) => {}
        }
    }
    problems
}
