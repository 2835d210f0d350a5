//! Per-activation registry of named values available for replacement.

use super::value::Value;
use crate::frontend::types::{Type, TypeTable};

#[derive(Debug, Clone)]
pub struct Entry {
    pub name: String,
    pub ty: Type,
    pub value: Value,
}

#[derive(Debug, Clone)]
pub struct PoolFrame {
    pub id: i64,
    pub this: Value,
    pub params: Vec<Entry>,
    /// Locals in order of first registration.
    pub locals: Vec<Entry>,
}

impl PoolFrame {
    pub fn lookup(&self, name: &str) -> Option<&Entry> {
        self.locals.iter().chain(&self.params).find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValuePool {
    frames: Vec<PoolFrame>,
}

impl ValuePool {
    pub fn start(&mut self, id: i64, this: Value, params: Vec<Entry>) {
        self.frames.push(PoolFrame { id, this, params, locals: Vec::new() });
    }

    /// Pops the activation `id` and anything opened above it.
    pub fn end(&mut self, id: i64) {
        if let Some(i) = self.frames.iter().rposition(|f| f.id == id) {
            self.frames.truncate(i);
        }
    }

    pub fn set(&mut self, id: i64, name: &str, ty: Type, value: Value) {
        let Some(frame) = self.frames.iter_mut().rev().find(|f| f.id == id) else { return };
        if let Some(e) = frame.locals.iter_mut().find(|e| e.name == name) {
            e.ty = ty;
            e.value = value;
        } else if let Some(e) = frame.params.iter_mut().find(|e| e.name == name) {
            e.value = value;
        } else {
            frame.locals.push(Entry { name: name.to_string(), ty, value });
        }
    }

    pub fn top(&self) -> Option<&PoolFrame> {
        self.frames.last()
    }

    pub fn top_id(&self) -> Option<i64> {
        self.frames.last().map(|f| f.id)
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }
}

/// Whether a runtime value is a non-null inhabitant of `required`.
pub fn fits(table: &TypeTable, value: &Value, required: &Type) -> bool {
    match (value, required) {
        (Value::Obj(o), Type::Class(c)) => table.is_subclass(&o.class, c),
        (Value::Str(_), Type::Str) => true,
        (Value::Int(_), Type::Int) => true,
        (Value::Bool(_), Type::Bool) => true,
        _ => false,
    }
}

/// Well-typed non-null candidates in order: locals, parameters, fields of
/// `this` (named `this.f`), statics (named `C.f`).
pub fn get_var(
    table: &TypeTable,
    required: &Type,
    frame: Option<&PoolFrame>,
    this_fields: &[(String, Value)],
    statics: &[(String, Value)],
) -> Vec<(String, Value)> {
    let mut out = Vec::new();
    if let Some(f) = frame {
        for e in f.locals.iter().chain(&f.params) {
            out.push((e.name.clone(), e.value.clone()));
        }
    }
    for (n, v) in this_fields {
        out.push((format!("this.{n}"), v.clone()));
    }
    out.extend(statics.iter().cloned());
    out.retain(|(_, v)| fits(table, v, required));
    out
}
