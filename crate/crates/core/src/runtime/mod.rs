//! Interpreter and repair framework: catch stack, value pool, strategies,
//! exploration and patch suggestion.

pub mod catch_stack;
pub mod controller;
pub mod interp;
pub mod manufacture;
pub mod patch;
pub mod pool;
pub mod strategy;
pub mod value;

pub use catch_stack::CatchStack;
pub use controller::{
    log_to_json_lines, Controller, CrashPointState, Decision, DeploymentEntry, DeploymentTable, Event, LogRecord,
    RepairMode, DEFAULT_SEED,
};
pub use interp::{classify, run, run_here, ExecutionResult, Exit, RunError, RunOptions, TraceEvent};
pub use manufacture::{new_var, Recipes, DEFAULT_DEPTH};
pub use patch::{apply_patch, suggest_patch, PatchError, PatchSuggestion};
pub use pool::{get_var, ValuePool};
pub use strategy::{Outcome, Strategy, StrategyId};
pub use value::Value;
