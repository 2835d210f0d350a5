//! Fault seeding: deletes null-check guards so the guarded code can crash.
//!
//! `if (x != null) { A } else { B }` becomes `A`; `if (x == null) { A } else { B }`
//! becomes `B`. Negated and reversed comparisons are recognised. The kept
//! branch is spliced in place unless it declares variables, in which case it
//! stays a nested block.

use serde::Serialize;

use super::method_bodies_mut;
use crate::frontend::ast::*;
use crate::frontend::derefs::is_access_path;
use crate::frontend::printer::expr_to_string;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RemovedCheck {
    pub file: String,
    pub start: u32,
    pub end: u32,
    /// The tested variable or field, e.g. `this.owner`.
    pub target: String,
    /// First statement kind of the branch that now always runs, or `none`.
    pub guarded: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SeedReport {
    pub removed: Vec<RemovedCheck>,
}

impl SeedReport {
    pub fn count(&self) -> usize {
        self.removed.len()
    }
}

pub fn seed_remove_null_checks(mut program: Program) -> (Program, SeedReport) {
    let mut report = SeedReport::default();
    for class in &mut program.classes {
        let file = class.file.clone();
        for (body, _, _) in method_bodies_mut(class) {
            *body = rewrite_block(std::mem::take(body), &file, &mut report);
        }
    }
    (program, report)
}

/// `Some((target, true))` when `cond` holds exactly when `target != null`.
fn null_test(cond: &Expr) -> Option<(&Expr, bool)> {
    match &cond.kind {
        ExprKind::Binary { op: op @ (BinOp::Eq | BinOp::Ne), lhs, rhs } => {
            let target = match (&lhs.kind, &rhs.kind) {
                (_, ExprKind::Null) => lhs,
                (ExprKind::Null, _) => rhs,
                _ => return None,
            };
            is_access_path(target).then_some((target, *op == BinOp::Ne))
        }
        ExprKind::Unary { op: UnOp::Not, operand } => null_test(operand).map(|(t, nonnull)| (t, !nonnull)),
        _ => None,
    }
}

fn kind_name(b: Option<&Block>) -> &'static str {
    match b.and_then(|b| b.stmts.first()).map(|s| &s.kind) {
        None => "none",
        Some(StmtKind::VarDecl { .. }) => "declaration",
        Some(StmtKind::Assign { .. }) => "assignment",
        Some(StmtKind::Expr(_)) => "expression",
        Some(StmtKind::If { .. }) => "if",
        Some(StmtKind::While { .. }) => "while",
        Some(StmtKind::Return(_)) => "return",
        Some(StmtKind::Throw(_)) => "throw",
        Some(StmtKind::Try { .. }) => "try",
        Some(StmtKind::Block(_)) => "block",
    }
}

fn rewrite_block(block: Block, file: &str, report: &mut SeedReport) -> Block {
    let mut out = Vec::with_capacity(block.stmts.len());
    for s in block.stmts {
        let span = s.span;
        if let StmtKind::If { cond, then, els } = &s.kind {
            if let Some((target, nonnull)) = null_test(cond) {
                let target = expr_to_string(target);
                let kept = if nonnull { Some(then.clone()) } else { els.clone() };
                report.removed.push(RemovedCheck {
                    file: file.to_string(),
                    start: span.start,
                    end: span.end,
                    target,
                    guarded: kind_name(kept.as_ref()).to_string(),
                });
                if let Some(kept) = kept {
                    let kept = rewrite_block(kept, file, report);
                    if kept.stmts.iter().any(|s| matches!(s.kind, StmtKind::VarDecl { .. })) {
                        out.push(Stmt { kind: StmtKind::Block(kept), span });
                    } else {
                        out.extend(kept.stmts);
                    }
                }
                continue;
            }
        }
        let mut s = s;
        for b in stmt_blocks_mut(&mut s) {
            *b = rewrite_block(std::mem::take(b), file, report);
        }
        out.push(s);
    }
    Block { stmts: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, printer, SourceUnit};

    fn run(src: &str) -> (String, SeedReport) {
        let p = parse(&SourceUnit::new("t.mj", src)).unwrap();
        let (out, report) = seed_remove_null_checks(p.program);
        crate::frontend::check::check(out.clone()).unwrap();
        (printer::print_file(&out, "t.mj"), report)
    }

    #[test]
    fn keeps_nonnull_branch() {
        let (out, r) = run("class A { int n; void m(A a) { if (a != null) { a.n = 1; } print(2); } }");
        assert!(out.contains("        a.n = 1;\n        print(2);"), "{out}");
        assert_eq!(r.count(), 1);
        assert_eq!(r.removed[0].target, "a");
        assert_eq!(r.removed[0].guarded, "assignment");
    }

    #[test]
    fn drops_early_return_guard() {
        let (out, r) = run("class A { int n; void m(A a) { if (a == null) { return; } a.n = 1; } }");
        assert!(!out.contains("if"), "{out}");
        assert_eq!(r.removed[0].guarded, "none");
    }

    #[test]
    fn recognises_reversed_and_negated_forms() {
        let src = "class A { A f; void m(A a) { if (null != this.f) { print(1); } if (!(a == null)) { print(2); } if (!(null != a)) { print(3); } else { print(4); } } }";
        let (out, r) = run(src);
        assert_eq!(r.count(), 3);
        assert!(out.contains("print(1);\n        print(2);\n        print(4);"), "{out}");
    }

    #[test]
    fn declarations_stay_scoped() {
        let (out, _) = run("class A { A f; void m(A a) { if (a != null) { A b = a.f; } A b = a; } }");
        assert!(out.contains("        {\n            A b = a.f;\n        }"), "{out}");
    }

    #[test]
    fn nested_checks_are_all_removed() {
        let (_, r) = run("class A { A f; void m(A a) { if (a != null) { if (a.f != null) { print(1); } } } }");
        assert_eq!(r.count(), 2);
    }

    #[test]
    fn other_conditions_are_kept() {
        let (out, r) = run("class A { void m(A a, int n) { if (n == 0) { print(1); } if (a == a) { print(2); } } }");
        assert_eq!(r.count(), 0);
        assert_eq!(out.matches("if (").count(), 2);
    }
}
