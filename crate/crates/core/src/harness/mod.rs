//! Corpus runner: outcome matrices, seeding campaigns, overhead measurement
//! and exploration sessions.

pub mod corpus;
pub mod matrix;
pub mod overhead;
pub mod report;
pub mod seeding;
pub mod session;

use std::path::PathBuf;

use crate::frontend::FrontendError;
use crate::runtime::RunError;
use crate::transform::TransformError;

pub use corpus::{validate_corpus, Corpus, CorpusCase, Expected};
pub use matrix::{run_matrix, MatrixRow, OutcomeMatrix};
pub use overhead::{measure_overhead, overhead_percent, OverheadCase, OverheadReport};
pub use report::{emit_report, Format, Report};
pub use seeding::{run_seeding_campaign, SeedingReport, TestStatus};
pub use session::{run_exploration_session, Session, SessionEnd};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("case `{0}` does not crash with NullPointerException when uninstrumented")]
    NotCrashing(String),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}

/// Applies `f` to every item on `jobs` worker threads, keeping input order.
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let mut slots: Vec<Option<U>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                s.spawn(move || {
                    items.iter().enumerate().skip(w).step_by(jobs).map(|(i, x)| (i, f(x))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, u) in h.join().expect("worker panicked") {
                slots[i] = Some(u);
            }
        }
    });
    slots.into_iter().map(|u| u.unwrap()).collect()
}
