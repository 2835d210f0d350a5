//! Runtime model of the open try blocks and what they catch.

use serde::Serialize;

use crate::frontend::types::TypeTable;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Frame {
    pub id: i64,
    pub types: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CatchStack {
    frames: Vec<Frame>,
}

impl CatchStack {
    pub fn new() -> Self {
        CatchStack::default()
    }

    pub fn add(&mut self, id: i64, types: Vec<String>) {
        self.frames.push(Frame { id, types });
    }

    /// Removes the frame with `id` wherever it sits. Unknown ids are ignored,
    /// so the remove at the head of a catch and again in the finally is safe.
    pub fn remove(&mut self, id: i64) {
        if let Some(i) = self.frames.iter().rposition(|f| f.id == id) {
            self.frames.remove(i);
        }
    }

    pub fn will_be_caught(&self, table: &TypeTable, exception: &str) -> bool {
        self.frames.iter().any(|f| f.types.iter().any(|t| table.is_subclass(exception, t)))
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}
