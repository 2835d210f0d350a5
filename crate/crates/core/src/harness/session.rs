//! Explore-then-deploy sessions: the failing entry is re-run with one
//! persistent controller until a run succeeds or nothing is left to try.

use serde::Serialize;

use crate::frontend::check::CheckedProgram;
use crate::frontend::CrashPointKey;
use crate::runtime::{
    run, suggest_patch, Controller, DeploymentTable, Exit, LogRecord, Outcome, PatchSuggestion, RepairMode, RunError,
    RunOptions, Strategy,
};

pub const DEFAULT_MAX_RUNS: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionEnd {
    /// A run succeeded after repairs; its strategies are deployed.
    Deployed,
    /// A run crashed without trying anything new.
    Exhausted,
    /// The first run succeeded without any repair.
    NoCrash,
    /// Stopped by the run cap.
    Cap,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionRun {
    pub run: u32,
    pub outcome: Outcome,
    pub exit: Exit,
    pub applied: Vec<(CrashPointKey, Strategy)>,
    pub draws: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub entry: String,
    pub seed: u64,
    pub end: SessionEnd,
    pub runs: Vec<SessionRun>,
    pub log: Vec<LogRecord>,
    pub deployments: DeploymentTable,
    pub patches: Vec<PatchSuggestion>,
    /// Sum over explored crash points of their candidate-set sizes.
    pub candidates: usize,
    pub final_stdout: String,
    #[serde(skip)]
    pub controller: Controller,
}

impl Session {
    pub fn invocations(&self) -> usize {
        self.runs.len()
    }

    pub fn final_exit(&self) -> &Exit {
        &self.runs.last().expect("a session has at least one run").exit
    }
}

/// `original` is the uninstrumented program the patches are rendered
/// against; `instrumented` is what runs.
pub fn run_exploration_session(
    original: &CheckedProgram,
    instrumented: &CheckedProgram,
    entry: &str,
    seed: u64,
    max_runs: u32,
) -> Result<Session, RunError> {
    let ctl = Controller::new(RepairMode::explore_all(), seed);
    continue_session(original, instrumented, entry, ctl, max_runs)
}

/// Like [`run_exploration_session`] with a caller-configured controller,
/// e.g. one with deployments already loaded.
pub fn continue_session(
    original: &CheckedProgram,
    instrumented: &CheckedProgram,
    entry: &str,
    mut ctl: Controller,
    max_runs: u32,
) -> Result<Session, RunError> {
    let seed = ctl.seed;
    let opts = RunOptions::default();
    let mut runs = Vec::new();
    let mut patches = Vec::new();
    let (end, final_stdout) = loop {
        let before = ctl.draws();
        let r = run(instrumented, entry, &mut ctl, &opts)?;
        runs.push(SessionRun {
            run: ctl.run_index(),
            outcome: r.outcome,
            exit: r.exit.clone(),
            applied: r.applied.clone(),
            draws: ctl.draws() - before,
        });
        if r.exit.is_normal() {
            for (key, s) in &r.deployed {
                if let Ok(p) = suggest_patch(original, key, s) {
                    patches.push(p);
                }
            }
            break (if r.applied.is_empty() { SessionEnd::NoCrash } else { SessionEnd::Deployed }, r.stdout);
        }
        if ctl.draws() == before {
            break (SessionEnd::Exhausted, r.stdout);
        }
        if runs.len() as u32 >= max_runs {
            break (SessionEnd::Cap, r.stdout);
        }
    };
    Ok(Session {
        entry: entry.into(),
        seed,
        end,
        runs,
        log: ctl.log().to_vec(),
        deployments: ctl.deployments(),
        patches,
        candidates: ctl.states().values().filter_map(|s| s.candidates).sum(),
        final_stdout,
        controller: ctl,
    })
}
