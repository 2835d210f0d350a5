//! Lets a forced return leave any method or constructor.
//!
//! The body is wrapped in `try { body } catch (__npefix_ForceReturn f) { ... }`.
//! Value methods dispatch on the strategy carried by the signal; void
//! methods and constructors simply return.

use super::hooks::*;
use super::{method_bodies_mut, TransformConfig};
use crate::frontend::ast::*;

pub fn inject_method_skip(mut program: Program, config: &TransformConfig) -> Program {
    let f = config.fresh("f");
    for class in &mut program.classes {
        for (body, ret, _) in method_bodies_mut(class) {
            let handler = if ret.is_void() {
                vec![Stmt::synthetic(StmtKind::Return(None))]
            } else {
                value_handler(&f, ret)
            };
            let inner = std::mem::take(body);
            body.stmts = vec![Stmt::synthetic(StmtKind::Try {
                body: inner,
                catches: vec![CatchClause { ty: FORCE_RETURN.to_string(), name: f.clone(), body: Block::new(handler) }],
                finally: None,
            })];
        }
    }
    program
}

fn value_handler(f: &str, ret: &TypeRef) -> Vec<Stmt> {
    let ty = ret.to_string();
    let branch = |strategy: &str, value: Expr| {
        Stmt::synthetic(StmtKind::If {
            cond: Expr::call(IS_STRATEGY, vec![Expr::var(f), Expr::str_lit(strategy)]),
            then: Block::new(vec![Stmt::synthetic(StmtKind::Return(Some(value)))]),
            els: None,
        })
    };
    let mut out = Vec::new();
    // `return null` only type-checks for reference results.
    if matches!(ret, TypeRef::Class(_) | TypeRef::Str) {
        out.push(branch("S4a", Expr::synthetic(ExprKind::Null)));
    }
    out.push(branch("S4b", Expr::call(GET_VAR, vec![Expr::var(f), Expr::str_lit(&ty)])));
    out.push(branch("S4c", Expr::call(NEW_VAR, vec![Expr::var(f), Expr::str_lit(&ty)])));
    out.push(Stmt::synthetic(StmtKind::Throw(Expr::var(f))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, printer, SourceUnit};

    fn run(src: &str) -> String {
        let p = parse(&SourceUnit::new("t.mj", src)).unwrap();
        let out = inject_method_skip(p.program, &TransformConfig::all());
        crate::frontend::check::check(out.clone()).unwrap();
        printer::print_file(&out, "t.mj")
    }

    #[test]
    fn value_method_dispatches_on_strategy() {
        let out = run("class A { A m(A a) { return a; } }");
        let expected = "\
        } catch (__npefix_ForceReturn __npefix_f) {
            if (__npefix_isStrategy(__npefix_f, \"S4a\")) {
                return null;
            }
            if (__npefix_isStrategy(__npefix_f, \"S4b\")) {
                return __npefix_getVar(__npefix_f, \"A\");
            }
            if (__npefix_isStrategy(__npefix_f, \"S4c\")) {
                return __npefix_newVar(__npefix_f, \"A\");
            }
            throw __npefix_f;
        }";
        assert!(out.contains(expected), "{out}");
    }

    #[test]
    fn void_method_and_ctor_just_return() {
        let out = run("class A { A() { } void m() { print(1); } }");
        assert_eq!(out.matches("catch (__npefix_ForceReturn __npefix_f) {\n            return;").count(), 2, "{out}");
    }

    #[test]
    fn int_method_has_no_null_branch() {
        let out = run("class A { int m() { return 1; } }");
        assert!(!out.contains("S4a"), "{out}");
        assert!(out.contains("__npefix_getVar(__npefix_f, \"int\")"));
    }
}
