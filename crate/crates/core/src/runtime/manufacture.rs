//! Recipes for building fresh values of a required type.
//!
//! A recipe is an ordinary `new` expression; the interpreter evaluates it
//! with repair disabled, and patch suggestions print it verbatim.

use crate::frontend::ast::{Expr, ExprKind};
use crate::frontend::types::{Type, TypeTable};

pub const DEFAULT_DEPTH: u32 = 3;

/// One constructible type with a recipe per usable constructor, in
/// constructor declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipes {
    pub type_name: String,
    pub recipes: Vec<Expr>,
}

pub fn default_literal(t: &Type) -> Option<Expr> {
    let kind = match t {
        Type::Int => ExprKind::Int(0),
        Type::Bool => ExprKind::Bool(false),
        Type::Str => ExprKind::Str(String::new()),
        _ => return None,
    };
    Some(Expr::synthetic(kind))
}

/// Concrete subtypes of `required` (itself first, then declaration order)
/// that can be built within `depth` nested constructor calls.
pub fn new_var(table: &TypeTable, required: &Type, depth: u32) -> Vec<Recipes> {
    if let Some(lit) = default_literal(required) {
        return vec![Recipes { type_name: required.to_string(), recipes: vec![lit] }];
    }
    let Type::Class(name) = required else { return Vec::new() };
    if depth == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for info in table.concrete_subtypes(name) {
        if info.name == crate::transform::hooks::FORCE_RETURN {
            continue;
        }
        let mut recipes = Vec::new();
        if info.ctors.is_empty() {
            recipes.push(new_expr(&info.name, vec![]));
        }
        for k in &info.ctors {
            let args: Option<Vec<Expr>> = k.params.iter().map(|p| first_recipe(table, p, depth - 1)).collect();
            if let Some(args) = args {
                recipes.push(new_expr(&info.name, args));
            }
        }
        if !recipes.is_empty() {
            out.push(Recipes { type_name: info.name.clone(), recipes });
        }
    }
    out
}

fn first_recipe(table: &TypeTable, t: &Type, depth: u32) -> Option<Expr> {
    if let Some(lit) = default_literal(t) {
        return Some(lit);
    }
    new_var(table, t, depth).into_iter().next().and_then(|r| r.recipes.into_iter().next())
}

fn new_expr(class: &str, args: Vec<Expr>) -> Expr {
    Expr::synthetic(ExprKind::New { class: class.to_string(), args })
}
