//! Guards skippable statements with `__npefix_skipLine`.
//!
//! A statement whose dereferences have access-path receivers becomes
//! `if (__npefix_skipLine("key", recv, ...)) { stmt }`. A declaration with an
//! initializer is split so the variable stays in scope:
//! `T a; if (__npefix_skipLine(...)) { a = e; }`.

use super::hooks::*;
use super::{method_bodies_mut, TransformConfig};
use crate::frontend::ast::*;
use crate::frontend::derefs::{always_exits, deref_sites, is_access_path, skippable, CrashPointKey};

pub fn inject_line_skip(mut program: Program, _config: &TransformConfig) -> Program {
    for class in &mut program.classes {
        let file = class.file.clone();
        for (body, ret, _) in method_bodies_mut(class) {
            let void = ret.is_void();
            *body = rewrite_block(std::mem::take(body), void, &file);
        }
    }
    program
}

fn rewrite_block(block: Block, exit_after: bool, file: &str) -> Block {
    let stmts = block.stmts;
    let mut out = Vec::with_capacity(stmts.len());
    for i in 0..stmts.len() {
        let rest = &stmts[i + 1..];
        let cont_exits = always_exits(rest) || exit_after;
        let mut s = stmts[i].clone();
        let can_skip = skippable(&s, rest, cont_exits);
        let child_exit = !matches!(s.kind, StmtKind::While { .. }) && cont_exits;
        for b in stmt_blocks_mut(&mut s) {
            *b = rewrite_block(std::mem::take(b), child_exit, file);
        }
        if !can_skip {
            out.push(s);
            continue;
        }
        let args = skip_args(&s, file);
        if args.is_empty() {
            out.push(s);
            continue;
        }
        let guard = |body: Stmt| {
            Stmt::synthetic(StmtKind::If {
                cond: Expr::call(SKIP_LINE, args.clone()),
                then: Block::new(vec![body]),
                els: None,
            })
        };
        match s.kind {
            StmtKind::VarDecl { ty, name, init: Some(init) } => {
                out.push(Stmt { kind: StmtKind::VarDecl { ty, name: name.clone(), init: None }, span: s.span });
                out.push(guard(Stmt::synthetic(StmtKind::Assign { target: Expr::var(name), value: init })));
            }
            _ => out.push(guard(s)),
        }
    }
    Block { stmts: out }
}

/// `("key", receiver)` pairs for the statement's own dereference sites whose
/// receivers are access paths, in evaluation order.
fn skip_args(s: &Stmt, file: &str) -> Vec<Expr> {
    let mut args = Vec::new();
    for e in stmt_own_exprs(s) {
        for site in deref_sites(e) {
            if site.span.is_synthetic() {
                continue;
            }
            let recv = site.receiver().expect("dereference has a receiver");
            if is_access_path(recv) {
                args.push(Expr::str_lit(CrashPointKey::new(file, site.span).to_string()));
                args.push(recv.clone());
            }
        }
    }
    args
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, printer, SourceUnit};

    const B: &str = "class B { int v; B next; int f() { return 1; } B h() { return this; } }\n";

    fn run(src: &str) -> String {
        let src = format!("{B}{src}");
        let p = parse(&SourceUnit::new("t.mj", &src)).unwrap();
        let out = inject_line_skip(p.program, &TransformConfig::all());
        crate::frontend::check::check(out.clone()).unwrap();
        printer::print_file(&out, "t.mj")
    }

    #[test]
    fn guards_expression_statement() {
        let out = run("class A { void m(B b) { b.f(); } }");
        assert!(out.contains("if (__npefix_skipLine(\"t.mj:"), "{out}");
        assert!(out.contains("\", b)) {\n            b.f();\n        }"), "{out}");
    }

    #[test]
    fn splits_unread_declaration() {
        let out = run("class A { void m(B b) { int x = b.f(); print(1); } }");
        assert!(out.contains("int x;\n        if (__npefix_skipLine("), "{out}");
        assert!(out.contains("x = b.f();"), "{out}");
    }

    #[test]
    fn read_declaration_is_not_wrapped() {
        let out = run("class A { void m(B b) { int x = b.f(); print(x); } }");
        assert!(!out.contains("skipLine"), "{out}");
    }

    #[test]
    fn conditions_and_value_returns_are_not_wrapped() {
        let out = run("class A { int m(B b) { if (b.v > 0) { print(1); } return b.f(); } }");
        assert!(!out.contains("skipLine"), "{out}");
    }

    #[test]
    fn return_followed_by_exit_is_wrapped() {
        let out = run("class A { B m(B b) { if (true) { return b.h(); } return b; } }");
        assert!(out.contains("return b.h();"), "{out}");
        assert_eq!(out.matches("skipLine").count(), 1, "{out}");
    }

    #[test]
    fn non_path_receivers_are_omitted() {
        let out = run("class A { void m(B b) { b.h().f(); } }");
        assert_eq!(out.matches(", b").count(), 1, "{out}");
    }

    #[test]
    fn chain_lists_each_path_receiver() {
        let out = run("class A { void m(B b) { b.next.f(); } }");
        assert!(out.contains("\", b, \"t.mj:"), "{out}");
        assert!(out.contains("\", b.next))"), "{out}");
    }
}
