//! Runtime repair of null dereferences for the MiniJ language.

pub mod cli;
pub mod frontend;
pub mod harness;
pub mod runtime;
pub mod transform;
