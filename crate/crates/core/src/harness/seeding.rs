//! Seeded-failure campaign: remove the application's null checks, run its
//! tests, then try every strategy on the NullPointerException failures.
//!
//! A project directory holds application files under `src/` and tests under
//! `test/`. Every `void testX()` method of a test class is one test.

use std::path::Path;

use serde::Serialize;

use super::matrix::{matrix_for, MatrixInput, OutcomeMatrix};
use super::{io_err, par_map, HarnessError};
use crate::frontend::ast::Program;
use crate::frontend::check::{check, CheckedProgram};
use crate::frontend::types::{ASSERTION_ERROR, NPE};
use crate::frontend::{line_col, parse_units, SourceUnit};
use crate::runtime::{run, Controller, Exit, RunOptions, StrategyId};
use crate::transform::{seed_remove_null_checks, transform_all, SeedReport, TransformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Pass,
    Npe,
    Assertion,
    Other,
}

impl TestStatus {
    pub fn of(exit: &Exit) -> TestStatus {
        match exit {
            Exit::Normal => TestStatus::Pass,
            e if e.exception() == Some(NPE) => TestStatus::Npe,
            e if e.exception() == Some(ASSERTION_ERROR) => TestStatus::Assertion,
            _ => TestStatus::Other,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub name: String,
    pub baseline: TestStatus,
    pub seeded: TestStatus,
}

/// One removed check, located by line for comparison with a hand inventory.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RemovedAt {
    pub file: String,
    pub line: usize,
    pub target: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedingReport {
    pub project: String,
    pub removed_checks: usize,
    pub removed: Vec<RemovedAt>,
    pub tests: Vec<TestResult>,
    pub failing_npe: usize,
    pub failing_assertion: usize,
    pub failing_other: usize,
    /// Strategies over the NullPointerException failures.
    pub matrix: OutcomeMatrix,
    pub union_rate_pct: f64,
}

fn read_dir_units(dir: &Path, rel: &str) -> Result<Vec<SourceUnit>, HarnessError> {
    let sub = dir.join(rel);
    if !sub.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<_> = std::fs::read_dir(&sub)
        .map_err(io_err(&sub))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mj"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
            let name = format!("{rel}/{}", p.file_name().unwrap().to_string_lossy());
            Ok(SourceUnit::new(name, text))
        })
        .collect()
}

/// `Class.method` for every `void testX()` in the test files.
pub fn test_entries(program: &Program) -> Vec<String> {
    program
        .classes
        .iter()
        .filter(|c| c.file.starts_with("test/"))
        .flat_map(|c| {
            c.methods
                .iter()
                .filter(|m| m.name.starts_with("test") && m.params.is_empty() && m.ret.is_void() && m.body.is_some())
                .map(move |m| format!("{}.{}", c.name, m.name))
        })
        .collect()
}

/// Removes null checks from application classes only.
pub fn seed_application(program: &CheckedProgram) -> Result<(CheckedProgram, SeedReport), HarnessError> {
    let (app, tests): (Vec<_>, Vec<_>) =
        program.program.classes.iter().cloned().partition(|c| c.file.starts_with("src/"));
    let (seeded, report) = seed_remove_null_checks(Program { classes: app });
    Ok((check(seeded.merge(Program { classes: tests }))?, report))
}

pub fn run_seeding_campaign(dir: &Path, jobs: usize) -> Result<SeedingReport, HarnessError> {
    let mut units = read_dir_units(dir, "src")?;
    units.extend(read_dir_units(dir, "test")?);
    let original = parse_units(&units)?;
    let (seeded, seed_report) = seed_application(&original)?;
    let mut removed: Vec<RemovedAt> = seed_report
        .removed
        .iter()
        .map(|r| {
            let text = &units.iter().find(|u| u.path == r.file).unwrap().text;
            RemovedAt { file: r.file.clone(), line: line_col(text, r.start).0, target: r.target.clone() }
        })
        .collect();
    removed.sort();

    let entries = test_entries(&original.program);
    let opts = RunOptions::default();
    let tests = par_map(&entries, jobs, |entry| -> Result<TestResult, HarnessError> {
        let base = run(&original, entry, &mut Controller::off(), &opts)?;
        let seeded_run = run(&seeded, entry, &mut Controller::off(), &opts)?;
        Ok(TestResult { name: entry.clone(), baseline: TestStatus::of(&base.exit), seeded: TestStatus::of(&seeded_run.exit) })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let count = |s: TestStatus| tests.iter().filter(|t| t.seeded == s && t.baseline == TestStatus::Pass).count();
    let instrumented = transform_all(&seeded, &TransformConfig::all())?;
    let inputs: Vec<MatrixInput> = tests
        .iter()
        .filter(|t| t.seeded == TestStatus::Npe && t.baseline == TestStatus::Pass)
        .map(|t| MatrixInput { name: t.name.clone(), program: instrumented.clone(), entry: t.name.clone() })
        .collect();
    let project = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let matrix = matrix_for(&project, &inputs, &StrategyId::ALL, jobs)?;
    let union_rate_pct = if inputs.is_empty() { 0.0 } else { 100.0 * matrix.union as f64 / inputs.len() as f64 };
    Ok(SeedingReport {
        project,
        removed_checks: seed_report.count(),
        removed,
        failing_npe: count(TestStatus::Npe),
        failing_assertion: count(TestStatus::Assertion),
        failing_other: count(TestStatus::Other),
        tests,
        matrix,
        union_rate_pct,
    })
}
