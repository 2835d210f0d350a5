//! Source patches equivalent to a deployed strategy.
//!
//! The guard is placed around the statement holding the crash point:
//!
//! ```text
//! S1a/S2a  if (a == null) { stmt[a := b] } else { stmt }
//! S1b/S2b  if (a == null) { a = b; } stmt
//! S3       if (a != null) { stmt }
//! S4x      if (a == null) { return ...; } stmt
//! ```
//!
//! A declaration with initializer is split first so the declared name stays
//! in scope after the guard.

use serde::Serialize;

use super::manufacture::{new_var, DEFAULT_DEPTH};
use super::strategy::{Strategy, StrategyId};
use crate::frontend::ast::*;
use crate::frontend::check::{self, CheckedProgram};
use crate::frontend::derefs::is_access_path;
use crate::frontend::printer::stmts_to_string;
use crate::frontend::types::{Type, TypeTable};
use crate::frontend::{CrashPointKey, FrontendError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchSuggestion {
    pub crash_point: CrashPointKey,
    pub strategy: Strategy,
    pub snippet: String,
    #[serde(skip)]
    pub replacement: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("no statement holds crash point {0}")]
    NotFound(CrashPointKey),
    #[error("crash point {0} is in a field initializer, which has no statement to guard")]
    FieldInitializer(CrashPointKey),
    #[error("strategy {0} needs a parameter")]
    MissingParameter(StrategyId),
    #[error("type `{0}` cannot be constructed")]
    NotConstructible(String),
    #[error("patched program does not type-check: {0}")]
    Invalid(#[from] FrontendError),
}

struct Site<'a> {
    stmt: &'a Stmt,
    receiver: &'a Expr,
    ret: &'a TypeRef,
}

fn find_in_block<'a>(b: &'a Block, key: &CrashPointKey, ret: &'a TypeRef) -> Option<Site<'a>> {
    for s in &b.stmts {
        let mut hit = None;
        for e in stmt_own_exprs(s) {
            visit_expr(e, &mut |x| {
                if hit.is_none() && x.is_dereference() && x.span.start == key.start && x.span.end == key.end {
                    hit = x.receiver();
                }
            });
        }
        if let Some(receiver) = hit {
            return Some(Site { stmt: s, receiver, ret });
        }
        if let Some(site) = stmt_blocks(s).into_iter().find_map(|b| find_in_block(b, key, ret)) {
            return Some(site);
        }
    }
    None
}

fn find_site<'a>(program: &'a Program, key: &CrashPointKey) -> Option<Site<'a>> {
    static VOID: TypeRef = TypeRef::Void;
    for c in program.classes.iter().filter(|c| c.file == key.file) {
        for k in &c.ctors {
            if let Some(s) = find_in_block(&k.body, key, &VOID) {
                return Some(s);
            }
        }
        for m in &c.methods {
            if let Some(s) = m.body.as_ref().and_then(|b| find_in_block(b, key, &m.ret)) {
                return Some(s);
            }
        }
    }
    None
}

/// Expression for a pool entry name: `x`, `this.f` or `C.f`.
fn entry_expr(name: &str) -> Expr {
    if let Some(f) = name.strip_prefix("this.") {
        return Expr::synthetic(ExprKind::Field { obj: Box::new(Expr::synthetic(ExprKind::This)), name: f.into() });
    }
    if let Some((c, f)) = name.split_once('.') {
        return Expr::synthetic(ExprKind::StaticField { class: c.into(), name: f.into() });
    }
    Expr::var(name)
}

fn recipe(table: &TypeTable, type_name: &str) -> Result<Expr, PatchError> {
    new_var(table, &Type::parse_name(type_name), DEFAULT_DEPTH)
        .into_iter()
        .find(|r| r.type_name == type_name)
        .and_then(|r| r.recipes.into_iter().next())
        .ok_or_else(|| PatchError::NotConstructible(type_name.into()))
}

fn null_test(receiver: &Expr, op: BinOp) -> Expr {
    Expr::synthetic(ExprKind::Binary {
        op,
        lhs: Box::new(receiver.clone()),
        rhs: Box::new(Expr::synthetic(ExprKind::Null)),
    })
}

fn guard(cond: Expr, then: Vec<Stmt>, els: Option<Vec<Stmt>>) -> Stmt {
    Stmt::synthetic(StmtKind::If { cond, then: Block::new(then), els: els.map(Block::new) })
}

/// Copy of `s` where the receiver at `key` is replaced by `with`.
fn substitute(s: &Stmt, key: &CrashPointKey, with: &Expr) -> Stmt {
    let mut s = s.clone();
    walk_stmt_exprs_mut(&mut s, &mut |e| {
        if e.is_dereference() && e.span.start == key.start && e.span.end == key.end {
            if let Some(r) = e.receiver_mut() {
                *r = with.clone();
            }
        }
    });
    s
}

/// Splits `T x = e;` into `T x;` and `x = e;`.
fn split_decl(s: &Stmt) -> (Option<Stmt>, Stmt) {
    match &s.kind {
        StmtKind::VarDecl { ty, name, init: Some(init) } => (
            Some(Stmt::synthetic(StmtKind::VarDecl { ty: ty.clone(), name: name.clone(), init: None })),
            Stmt { kind: StmtKind::Assign { target: Expr::var(name), value: init.clone() }, span: s.span },
        ),
        _ => (None, s.clone()),
    }
}

fn in_field_initializer(program: &Program, key: &CrashPointKey) -> bool {
    program.classes.iter().filter(|c| c.file == key.file).flat_map(|c| &c.fields).any(|f| {
        f.init.as_ref().is_some_and(|e| e.span.start <= key.start && key.end <= e.span.end)
    })
}

pub fn suggest_patch(
    program: &CheckedProgram,
    crash_point: &CrashPointKey,
    strategy: &Strategy,
) -> Result<PatchSuggestion, PatchError> {
    if in_field_initializer(&program.program, crash_point) {
        return Err(PatchError::FieldInitializer(crash_point.clone()));
    }
    let site = find_site(&program.program, crash_point).ok_or_else(|| PatchError::NotFound(crash_point.clone()))?;
    let param = || strategy.parameter.as_deref().ok_or(PatchError::MissingParameter(strategy.id));
    let a = site.receiver;
    let (decl, stmt) = split_decl(site.stmt);
    let replacement_value = match strategy.id {
        StrategyId::S1a | StrategyId::S1b | StrategyId::S4b => Some(entry_expr(param()?)),
        StrategyId::S2a | StrategyId::S2b | StrategyId::S4c => Some(recipe(&program.table, param()?)?),
        _ => None,
    };
    let ret = |value: Option<Expr>| vec![Stmt::synthetic(StmtKind::Return(value))];
    let mut out: Vec<Stmt> = decl.into_iter().collect();
    match strategy.id {
        StrategyId::S1b | StrategyId::S2b if is_access_path(a) => {
            let assign = Stmt::synthetic(StmtKind::Assign { target: a.clone(), value: replacement_value.unwrap() });
            out.push(guard(null_test(a, BinOp::Eq), vec![assign], None));
            out.push(stmt);
        }
        StrategyId::S1a | StrategyId::S1b | StrategyId::S2a | StrategyId::S2b => {
            let patched = substitute(&stmt, crash_point, &replacement_value.unwrap());
            out.push(guard(null_test(a, BinOp::Eq), vec![patched], Some(vec![stmt])));
        }
        StrategyId::S3 => out.push(guard(null_test(a, BinOp::Ne), vec![stmt], None)),
        StrategyId::S4a | StrategyId::S4b | StrategyId::S4c | StrategyId::S4d => {
            let value = match strategy.id {
                StrategyId::S4a => Some(Expr::synthetic(ExprKind::Null)),
                StrategyId::S4d => None,
                _ => replacement_value,
            };
            let value = if site.ret.is_void() { None } else { value };
            out.push(guard(null_test(a, BinOp::Eq), ret(value), None));
            out.push(stmt);
        }
    }
    Ok(PatchSuggestion {
        crash_point: crash_point.clone(),
        strategy: strategy.clone(),
        snippet: stmts_to_string(&out, 0),
        replacement: out,
    })
}

fn replace_in_block(b: &mut Block, key: &CrashPointKey, with: &[Stmt]) -> bool {
    for i in 0..b.stmts.len() {
        let here = stmt_own_exprs(&b.stmts[i]).into_iter().any(|e| {
            let mut hit = false;
            visit_expr(e, &mut |x| hit |= x.is_dereference() && x.span.start == key.start && x.span.end == key.end);
            hit
        });
        if here {
            b.stmts.splice(i..=i, with.iter().cloned());
            return true;
        }
        if stmt_blocks_mut(&mut b.stmts[i]).into_iter().any(|c| replace_in_block(c, key, with)) {
            return true;
        }
    }
    false
}

/// Substitutes the patch at its crash site and re-checks the program.
pub fn apply_patch(program: &CheckedProgram, patch: &PatchSuggestion) -> Result<CheckedProgram, PatchError> {
    let mut p = program.program.clone();
    let key = &patch.crash_point;
    let mut done = false;
    for c in p.classes.iter_mut().filter(|c| c.file == key.file) {
        for body in c.ctors.iter_mut().map(|k| &mut k.body).chain(c.methods.iter_mut().filter_map(|m| m.body.as_mut())) {
            if !done && replace_in_block(body, key, &patch.replacement) {
                done = true;
            }
        }
    }
    if !done {
        return Err(PatchError::NotFound(key.clone()));
    }
    Ok(check::check(p)?)
}
