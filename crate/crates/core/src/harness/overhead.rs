//! Execution time of original versus instrumented programs.

use std::time::Instant;

use serde::Serialize;

use super::corpus::Corpus;
use super::HarnessError;
use crate::frontend::check::CheckedProgram;
use crate::runtime::{run, Controller, RepairMode, RunOptions, DEFAULT_SEED};
use crate::transform::{transform_all, TransformConfig};

pub const DEFAULT_REPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadCase {
    pub name: String,
    pub original_ms: f64,
    pub transformed_ms: f64,
    pub overhead_pct: i64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadReport {
    pub cases: Vec<OverheadCase>,
}

/// Whole percent, truncated toward zero.
pub fn overhead_percent(original_ms: f64, transformed_ms: f64) -> i64 {
    if original_ms <= 0.0 {
        return 0;
    }
    ((transformed_ms - original_ms) / original_ms * 100.0).trunc() as i64
}

fn time_once(program: &CheckedProgram, entry: &str, repair: bool) -> Result<(f64, String), HarnessError> {
    let mut ctl = if repair { Controller::new(RepairMode::explore_all(), DEFAULT_SEED) } else { Controller::off() };
    let start = Instant::now();
    let r = run(program, entry, &mut ctl, &RunOptions::default())?;
    Ok((start.elapsed().as_secs_f64() * 1000.0, r.stdout))
}

/// Mean wall time of `reps` runs of each program. After one warm-up each the
/// two programs are interleaved, swapping which goes first every repetition,
/// so drift affects both alike.
pub fn measure_pair(
    name: &str,
    original: &CheckedProgram,
    transformed: &CheckedProgram,
    entry: &str,
    reps: usize,
) -> Result<OverheadCase, HarnessError> {
    let reps = reps.max(1);
    let repair = !std::ptr::eq(original, transformed);
    let (_, expected) = time_once(original, entry, false)?;
    let (_, got) = time_once(transformed, entry, repair)?;
    assert_eq!(expected, got, "{name}: instrumented output differs");
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..reps {
        if i % 2 == 0 {
            a += time_once(original, entry, false)?.0;
            b += time_once(transformed, entry, repair)?.0;
        } else {
            b += time_once(transformed, entry, repair)?.0;
            a += time_once(original, entry, false)?.0;
        }
    }
    let (original_ms, transformed_ms) = (a / reps as f64, b / reps as f64);
    Ok(OverheadCase {
        name: name.into(),
        original_ms,
        transformed_ms,
        overhead_pct: overhead_percent(original_ms, transformed_ms),
        reps,
    })
}

/// Times the non-crashing cases tagged `bench` (all of them when none is
/// tagged), original against instrumented with repair idle. With
/// `self_check` the first case is also timed against itself.
pub fn measure_overhead(corpus: &Corpus, reps: usize, self_check: bool) -> Result<OverheadReport, HarnessError> {
    let normal = corpus.normal();
    let tagged: Vec<_> = normal.iter().copied().filter(|c| c.tags.iter().any(|t| t == "bench")).collect();
    let selected = if tagged.is_empty() { normal } else { tagged };
    let mut cases = Vec::new();
    for (i, case) in selected.into_iter().enumerate() {
        let original = corpus.program(case)?;
        if self_check && i == 0 {
            cases.push(measure_pair(&format!("{} (self)", case.name), &original, &original, &case.entry, reps)?);
        }
        let transformed = transform_all(&original, &TransformConfig::all())?;
        cases.push(measure_pair(&case.name, &original, &transformed, &case.entry, reps)?);
    }
    Ok(OverheadReport { cases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_is_truncated() {
        assert_eq!(overhead_percent(336.0, 381.0), 13);
        assert_eq!(overhead_percent(25885.0, 29090.0), 12);
        assert_eq!(overhead_percent(9857.0, 15657.0), 58);
        assert_eq!(overhead_percent(100.0, 99.5), 0);
        assert_eq!(overhead_percent(0.0, 5.0), 0);
    }
}
