//! Routes every dereference receiver through `__npefix_checkForNull`.
//!
//! `a.b().c()` becomes
//! `checkForNull(checkForNull(a, k1, "A").b(), k2, "B").c()`. Receivers passed
//! to `__npefix_skipLine` are left alone.

use super::hooks::*;
use super::TransformConfig;
use crate::frontend::ast::*;
use crate::frontend::derefs::CrashPointKey;
use crate::frontend::types::Type;

pub fn inject_deref_checks(mut program: Program, _config: &TransformConfig) -> Program {
    for class in &mut program.classes {
        let file = class.file.clone();
        for f in &mut class.fields {
            if let Some(init) = &mut f.init {
                rewrite(init, &file);
            }
        }
        let mut bodies: Vec<&mut Block> = class.ctors.iter_mut().map(|k| &mut k.body).collect();
        bodies.extend(class.methods.iter_mut().filter_map(|m| m.body.as_mut()));
        for b in bodies {
            for_each_stmt(b, &mut |s| match &mut s.kind {
                StmtKind::VarDecl { init, .. } => init.iter_mut().for_each(|e| rewrite(e, &file)),
                StmtKind::Assign { target, value } => {
                    rewrite(target, &file);
                    rewrite(value, &file);
                }
                StmtKind::Expr(e) | StmtKind::Throw(e) => rewrite(e, &file),
                StmtKind::Return(e) => e.iter_mut().for_each(|e| rewrite(e, &file)),
                StmtKind::If { cond, .. } => {
                    if !is_hook_call(cond, SKIP_LINE) {
                        rewrite(cond, &file);
                    }
                }
                StmtKind::While { cond, .. } => rewrite(cond, &file),
                StmtKind::Try { .. } | StmtKind::Block(_) => {}
            });
        }
    }
    program
}

fn for_each_stmt(b: &mut Block, f: &mut dyn FnMut(&mut Stmt)) {
    for s in &mut b.stmts {
        f(s);
        for child in stmt_blocks_mut(s) {
            for_each_stmt(child, f);
        }
    }
}

/// Post-order: inner receivers are wrapped before the enclosing site.
fn rewrite(e: &mut Expr, file: &str) {
    match &mut e.kind {
        ExprKind::Field { obj, .. } => rewrite(obj, file),
        ExprKind::Call { recv, args, name } => {
            if recv.is_none() && name == SKIP_LINE {
                return;
            }
            if let Some(r) = recv {
                rewrite(r, file);
            }
            args.iter_mut().for_each(|a| rewrite(a, file));
        }
        ExprKind::New { args, .. } => args.iter_mut().for_each(|a| rewrite(a, file)),
        ExprKind::Binary { lhs, rhs, .. } => {
            rewrite(lhs, file);
            rewrite(rhs, file);
        }
        ExprKind::Unary { operand, .. } => rewrite(operand, file),
        _ => {}
    }
    if !e.is_dereference() || e.span.is_synthetic() {
        return;
    }
    let key = CrashPointKey::new(file, e.span).to_string();
    let recv = e.receiver_mut().unwrap();
    let ty = recv.ty.clone().unwrap_or(Type::Null);
    let inner = std::mem::replace(recv, Expr::synthetic(ExprKind::Null));
    let mut wrapped = Expr::call(CHECK_FOR_NULL, vec![inner, Expr::str_lit(key), Expr::str_lit(ty.to_string())]);
    wrapped.ty = Some(ty);
    *recv = wrapped;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, printer, SourceUnit};

    const B: &str = "class B { int v; B next; int f() { return 1; } B h() { return this; } }\n";

    fn run(src: &str) -> (String, String) {
        let src = format!("{B}{src}");
        let p = parse(&SourceUnit::new("t.mj", &src)).unwrap();
        let out = inject_deref_checks(p.program, &TransformConfig::all());
        crate::frontend::check::check(out.clone()).unwrap();
        (src, printer::print_file(&out, "t.mj"))
    }

    fn key(src: &str, needle: &str) -> String {
        let start = src.rfind(needle).unwrap();
        format!("t.mj:{}-{}", start, start + needle.len())
    }

    #[test]
    fn wraps_field_access_with_key_and_type() {
        let (src, out) = run("class A { void m(B b) { int x = b.v; } }");
        let k = key(&src, "b.v");
        assert!(out.contains(&format!("int x = __npefix_checkForNull(b, \"{k}\", \"B\").v;")), "{out}");
    }

    #[test]
    fn chained_calls_wrap_twice() {
        let (src, out) = run("class A { void m(B b) { b.h().f(); } }");
        let inner = key(&src, "b.h()");
        let outer = key(&src, "b.h().f()");
        let expected = format!(
            "__npefix_checkForNull(__npefix_checkForNull(b, \"{inner}\", \"B\").h(), \"{outer}\", \"B\").f();"
        );
        assert!(out.contains(&expected), "{out}");
    }

    #[test]
    fn this_receivers_are_not_wrapped() {
        let (_, out) = run("class A { int n; void m() { this.n = 1; this.m(); } }");
        assert!(!out.contains("checkForNull"), "{out}");
    }

    #[test]
    fn assignment_target_receiver_is_wrapped() {
        let (_, out) = run("class A { void m(B b) { b.v = 2; } }");
        assert!(out.contains("__npefix_checkForNull(b, "), "{out}");
    }
}
