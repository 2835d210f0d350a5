//! Inventory of dereference sites and the statement skippability rules used
//! by line skipping.
//!
//! A statement cannot be skipped when it is:
//! - a declaration whose variable is read later before being reassigned,
//! - a `return`/`throw` with no later return or throw on the same path,
//! - the condition of an `if` or `while`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::check::CheckedProgram;
use super::types::Type;

/// Identity of a dereference site: the file and byte span of the field
/// access or method call expression in the original source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CrashPointKey {
    pub file: String,
    pub start: u32,
    pub end: u32,
}

impl CrashPointKey {
    pub fn new(file: &str, span: Span) -> Self {
        CrashPointKey { file: file.to_string(), start: span.start, end: span.end }
    }

    pub fn span(&self) -> Span {
        Span { start: self.start, end: self.end }
    }
}

impl fmt::Display for CrashPointKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.file, self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed crash point key `{0}`")]
pub struct BadKey(pub String);

impl FromStr for CrashPointKey {
    type Err = BadKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadKey(s.to_string());
        let (file, range) = s.rsplit_once(':').ok_or_else(bad)?;
        let (a, b) = range.split_once('-').ok_or_else(bad)?;
        Ok(CrashPointKey {
            file: file.to_string(),
            start: a.parse().map_err(|_| bad())?,
            end: b.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for CrashPointKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CrashPointKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerefSite {
    pub key: CrashPointKey,
    /// Static type of the receiver; the required type for replacements.
    pub receiver_type: Type,
    /// e.g. `Shop.total(Cart)`
    pub method: String,
    pub skippable: bool,
}

impl Serialize for Type {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Every field access and method call on a non-`this` receiver, in
/// evaluation order per method.
pub fn enumerate_dereferences(checked: &CheckedProgram) -> Vec<DerefSite> {
    let mut out = Vec::new();
    for class in &checked.program.classes {
        for f in &class.fields {
            if let Some(init) = &f.init {
                let method = format!("{}.{}", class.name, f.name);
                for e in deref_sites(init) {
                    out.push(site(&class.file, e, &method, false));
                }
            }
        }
        for k in &class.ctors {
            let method = signature(&class.name, "<init>", &k.params);
            collect_block(&class.file, &method, &k.body, true, &mut out);
        }
        for m in &class.methods {
            if let Some(body) = &m.body {
                let method = signature(&class.name, &m.name, &m.params);
                collect_block(&class.file, &method, body, m.ret.is_void(), &mut out);
            }
        }
    }
    out
}

pub fn signature(class: &str, name: &str, params: &[Param]) -> String {
    let ps: Vec<String> = params.iter().map(|p| p.ty.to_string()).collect();
    format!("{class}.{name}({})", ps.join(", "))
}

fn site(file: &str, e: &Expr, method: &str, skippable: bool) -> DerefSite {
    DerefSite {
        key: CrashPointKey::new(file, e.span),
        receiver_type: e.receiver().and_then(|r| r.ty.clone()).unwrap_or(Type::Null),
        method: method.to_string(),
        skippable,
    }
}

fn collect_block(file: &str, method: &str, body: &Block, void: bool, out: &mut Vec<DerefSite>) {
    for_each_stmt(body, void, &mut |stmt, skippable| {
        for e in stmt_own_exprs(stmt) {
            for d in deref_sites(e) {
                out.push(site(file, d, method, skippable));
            }
        }
    });
}

/// Dereference sites inside `e`, in the order their null checks fire:
/// receiver subtree, the site itself, then arguments.
pub fn deref_sites(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    sites_into(e, &mut out);
    out
}

fn sites_into<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match &e.kind {
        ExprKind::Field { obj, .. } => {
            sites_into(obj, out);
            if e.is_dereference() {
                out.push(e);
            }
        }
        ExprKind::Call { recv, args, .. } => {
            if let Some(r) = recv {
                sites_into(r, out);
            }
            if e.is_dereference() {
                out.push(e);
            }
            for a in args {
                sites_into(a, out);
            }
        }
        ExprKind::New { args, .. } => args.iter().for_each(|a| sites_into(a, out)),
        ExprKind::Binary { lhs, rhs, .. } => {
            sites_into(lhs, out);
            sites_into(rhs, out);
        }
        ExprKind::Unary { operand, .. } => sites_into(operand, out),
        _ => {}
    }
}

/// Whether every path through `stmts` ends in `return` or `throw`.
pub fn always_exits(stmts: &[Stmt]) -> bool {
    stmts.iter().any(stmt_always_exits)
}

fn stmt_always_exits(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) | StmtKind::Throw(_) => true,
        StmtKind::If { then, els: Some(els), .. } => always_exits(&then.stmts) && always_exits(&els.stmts),
        StmtKind::Block(b) => always_exits(&b.stmts),
        StmtKind::Try { body, catches, finally } => {
            (always_exits(&body.stmts) && catches.iter().all(|c| always_exits(&c.body.stmts)))
                || finally.as_ref().is_some_and(|f| always_exits(&f.stmts))
        }
        _ => false,
    }
}

/// Visits every statement of a method body with its skippability.
/// `void` is true for void methods and constructors, where falling off the
/// end is a valid exit.
pub fn for_each_stmt(body: &Block, void: bool, f: &mut dyn FnMut(&Stmt, bool)) {
    walk(body, void, f);
}

fn walk(block: &Block, exit_after: bool, f: &mut dyn FnMut(&Stmt, bool)) {
    for (i, s) in block.stmts.iter().enumerate() {
        let rest = &block.stmts[i + 1..];
        let cont_exits = always_exits(rest) || exit_after;
        f(s, skippable(s, rest, cont_exits));
        match &s.kind {
            StmtKind::While { body, .. } => walk(body, false, f),
            _ => {
                for b in stmt_blocks(s) {
                    walk(b, cont_exits, f);
                }
            }
        }
    }
}

/// Skippability of `s` given the statements after it in its block and
/// whether control is guaranteed to exit after them.
pub fn skippable(s: &Stmt, rest: &[Stmt], cont_exits: bool) -> bool {
    match &s.kind {
        StmtKind::If { .. } | StmtKind::While { .. } => false,
        StmtKind::Return(_) | StmtKind::Throw(_) => cont_exits,
        StmtKind::VarDecl { name, init: Some(_), .. } => !read_before_assigned(name, rest),
        _ => true,
    }
}

/// True when `name` is read in `rest` before a top-level plain assignment to it.
pub fn read_before_assigned(name: &str, rest: &[Stmt]) -> bool {
    for s in rest {
        if let StmtKind::Assign { target, value } = &s.kind {
            if matches!(&target.kind, ExprKind::Var(v) if v == name) {
                return expr_reads(value, name);
            }
        }
        if stmt_reads(s, name) {
            return true;
        }
    }
    false
}

fn stmt_reads(s: &Stmt, name: &str) -> bool {
    let own = match &s.kind {
        StmtKind::Assign { target, value } => {
            let target_reads = match &target.kind {
                ExprKind::Var(_) => false,
                _ => expr_reads(target, name),
            };
            target_reads || expr_reads(value, name)
        }
        _ => stmt_own_exprs(s).into_iter().any(|e| expr_reads(e, name)),
    };
    own || stmt_blocks(s).into_iter().any(|b| b.stmts.iter().any(|s| stmt_reads(s, name)))
}

fn expr_reads(e: &Expr, name: &str) -> bool {
    let mut found = false;
    visit_expr(e, &mut |x| {
        if matches!(&x.kind, ExprKind::Var(v) if v == name) {
            found = true;
        }
    });
    found
}

/// Receivers that can be evaluated before a statement runs without side
/// effects: variables, static fields, `this.f`, and field chains over those.
pub fn is_access_path(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Var(_) | ExprKind::StaticField { .. } => true,
        ExprKind::Field { obj, .. } => matches!(obj.kind, ExprKind::This) || is_access_path(obj),
        _ => false,
    }
}
