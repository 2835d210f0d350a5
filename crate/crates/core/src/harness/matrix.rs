//! Fixed-strategy outcome matrices: every crashing case under each strategy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::{par_map, HarnessError};
use crate::frontend::check::CheckedProgram;
use crate::runtime::{run, Controller, Outcome, RepairMode, RunError, RunOptions, StrategyId, DEFAULT_SEED};
use crate::transform::{transform_all, TransformConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub name: String,
    pub cells: BTreeMap<StrategyId, Outcome>,
    pub success_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    pub corpus: String,
    pub strategies: Vec<StrategyId>,
    pub cases: Vec<MatrixRow>,
    /// OK cells per strategy.
    pub totals: BTreeMap<StrategyId, usize>,
    /// Cases repaired by at least one strategy.
    pub union: usize,
}

/// An instrumented program and the entry whose failure is being repaired.
pub struct MatrixInput {
    pub name: String,
    pub program: CheckedProgram,
    pub entry: String,
}

impl OutcomeMatrix {
    pub fn build(corpus: &str, strategies: &[StrategyId], rows: Vec<MatrixRow>) -> OutcomeMatrix {
        let totals = strategies
            .iter()
            .map(|id| (*id, rows.iter().filter(|r| r.cells.get(id) == Some(&Outcome::OK)).count()))
            .collect();
        let union = rows.iter().filter(|r| r.success_count > 0).count();
        OutcomeMatrix { corpus: corpus.into(), strategies: strategies.to_vec(), cases: rows, totals, union }
    }

    pub fn cell(&self, case: &str, id: StrategyId) -> Option<Outcome> {
        self.cases.iter().find(|r| r.name == case).and_then(|r| r.cells.get(&id).copied())
    }

    /// How often each outcome code occurs over all cells.
    pub fn code_counts(&self) -> BTreeMap<Outcome, usize> {
        let mut counts: BTreeMap<Outcome, usize> = Outcome::ALL.iter().map(|o| (*o, 0)).collect();
        for r in &self.cases {
            for o in r.cells.values() {
                *counts.get_mut(o).unwrap() += 1;
            }
        }
        counts
    }
}

pub fn matrix_row(input: &MatrixInput, strategies: &[StrategyId], opts: &RunOptions) -> Result<MatrixRow, RunError> {
    let mut cells = BTreeMap::new();
    for id in strategies {
        let mut ctl = Controller::new(RepairMode::Fixed(*id), DEFAULT_SEED);
        let r = run(&input.program, &input.entry, &mut ctl, opts)?;
        cells.insert(*id, r.outcome);
    }
    let success_count = cells.values().filter(|o| **o == Outcome::OK).count();
    Ok(MatrixRow { name: input.name.clone(), cells, success_count })
}

pub fn matrix_for(
    corpus: &str,
    inputs: &[MatrixInput],
    strategies: &[StrategyId],
    jobs: usize,
) -> Result<OutcomeMatrix, HarnessError> {
    let opts = RunOptions::default();
    let rows = par_map(inputs, jobs, |i| matrix_row(i, strategies, &opts)).into_iter().collect::<Result<_, _>>()?;
    Ok(OutcomeMatrix::build(corpus, strategies, rows))
}

/// Instruments every crashing case and runs it under each strategy.
/// Cases that do not crash with a NullPointerException uninstrumented are
/// rejected.
pub fn run_matrix(corpus: &Corpus, strategies: &[StrategyId], jobs: usize) -> Result<OutcomeMatrix, HarnessError> {
    let mut inputs = Vec::new();
    for case in corpus.crashing() {
        let program = corpus.program(case)?;
        let r = run(&program, &case.entry, &mut Controller::off(), &RunOptions::default())?;
        if !r.exit.is_npe() {
            return Err(HarnessError::NotCrashing(case.name.clone()));
        }
        let program = transform_all(&program, &TransformConfig::all())?;
        inputs.push(MatrixInput { name: case.name.clone(), program, entry: case.entry.clone() });
    }
    matrix_for(&corpus.name, &inputs, strategies, jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, cells: &[(StrategyId, Outcome)]) -> MatrixRow {
        let cells: BTreeMap<_, _> = cells.iter().copied().collect();
        let success_count = cells.values().filter(|o| **o == Outcome::OK).count();
        MatrixRow { name: name.into(), cells, success_count }
    }

    #[test]
    fn totals_and_union() {
        let ids = [StrategyId::S1a, StrategyId::S3];
        let m = OutcomeMatrix::build(
            "t",
            &ids,
            vec![
                row("a", &[(StrategyId::S1a, Outcome::OK), (StrategyId::S3, Outcome::OK)]),
                row("b", &[(StrategyId::S1a, Outcome::NoV), (StrategyId::S3, Outcome::OK)]),
                row("c", &[(StrategyId::S1a, Outcome::NPE), (StrategyId::S3, Outcome::US)]),
            ],
        );
        assert_eq!(m.totals[&StrategyId::S1a], 1);
        assert_eq!(m.totals[&StrategyId::S3], 2);
        assert_eq!(m.union, 2);
        assert_eq!(m.code_counts()[&Outcome::US], 1);
    }

    #[test]
    fn empty_matrix() {
        let m = OutcomeMatrix::build("t", &StrategyId::ALL, vec![]);
        assert!(m.cases.is_empty());
        assert_eq!(m.union, 0);
        assert!(m.totals.values().all(|n| *n == 0));
    }

    #[test]
    fn json_shape() {
        let m = OutcomeMatrix::build("t", &[StrategyId::S4d], vec![row("a", &[(StrategyId::S4d, Outcome::RI)])]);
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["cases"][0]["cells"]["S4d"], "RI");
        assert_eq!(v["totals"]["S4d"], 0);
        assert_eq!(serde_json::from_value::<OutcomeMatrix>(v).unwrap(), m);
    }
}
