mod common;

use common::{corpus, patch_check};
use npefix::frontend::parser::parse_statements;
use npefix::frontend::CrashPointKey;
use npefix::runtime::{apply_patch, PatchError, run, suggest_patch, Controller, RepairMode, RunOptions, StrategyId};
use npefix::transform::{transform_all, TransformConfig};

/// Crash point and parameter the fixed-strategy run picks for `id`.
fn first_application(case: &str, id: StrategyId) -> Option<(CrashPointKey, npefix::runtime::Strategy)> {
    let c = corpus();
    let case = c.case(case).unwrap();
    let t = transform_all(&c.program(case).unwrap(), &TransformConfig::all()).unwrap();
    let mut ctl = Controller::new(RepairMode::Fixed(id), 1);
    let r = run(&t, &case.entry, &mut ctl, &RunOptions::default()).unwrap();
    r.exit.is_normal().then(|| r.applied.into_iter().next()).flatten()
}

fn check(case: &str, id: StrategyId) {
    if let Err(e) = patch_check(case, id) {
        panic!("{case} {id}: {e}");
    }
}

#[test]
fn global_reuse_patches_fix_their_cases() {
    check("02_catalog_registry", StrategyId::S1b);
    check("09_shelf_pick", StrategyId::S1b);
    check("14_app_logger", StrategyId::S1b);
}

#[test]
fn line_skip_patches_fix_their_cases() {
    check("07_pool_release", StrategyId::S3);
    check("12_car_engine", StrategyId::S3);
    check("04_event_bus", StrategyId::S3);
}

#[test]
fn method_skip_patches_fix_their_cases() {
    check("01_report_header", StrategyId::S4d);
    check("10_ledger_deposit", StrategyId::S4d);
    check("12_car_engine", StrategyId::S4d);
}

#[test]
fn every_ok_cell_yields_a_parsing_patch() {
    let c = corpus();
    for case in c.crashing() {
        let original = c.program(case).unwrap();
        for id in StrategyId::ALL {
            if let Some((key, s)) = first_application(&case.name, id) {
                let patch = match suggest_patch(&original, &key, &s) {
                    Err(PatchError::FieldInitializer(_)) => continue,
                    r => r.unwrap(),
                };
                parse_statements("snippet.mj", &patch.snippet).unwrap();
                apply_patch(&original, &patch).unwrap();
            }
        }
    }
}
