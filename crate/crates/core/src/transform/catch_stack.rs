//! Keeps the runtime catch stack in sync with the dynamic try nesting.
//!
//! ```text
//! int __npefix_tryN = __npefix_freeId();
//! try { __npefix_catchAdd(__npefix_tryN, "E1", ...); body }
//! catch (E1 e) { __npefix_catchRemove(__npefix_tryN); handler }
//! finally { __npefix_catchRemove(__npefix_tryN); cleanup }
//! ```
//!
//! Tries introduced by the value-pool rewrite (whose finally starts with
//! `endMethod`) are left alone.

use super::hooks::*;
use super::{expr_stmt, method_bodies_mut, TransformConfig};
use crate::frontend::ast::*;

pub fn inject_catch_stack(mut program: Program, config: &TransformConfig) -> Program {
    let mut counter = 0usize;
    for class in &mut program.classes {
        for (body, _, _) in method_bodies_mut(class) {
            *body = rewrite_block(std::mem::take(body), config, &mut counter);
        }
    }
    program
}

fn is_synthetic_try(finally: &Option<Block>) -> bool {
    finally
        .as_ref()
        .and_then(|f| f.stmts.first())
        .is_some_and(|s| matches!(&s.kind, StmtKind::Expr(e) if is_hook_call(e, END_METHOD)))
}

fn rewrite_block(block: Block, config: &TransformConfig, counter: &mut usize) -> Block {
    let mut out = Vec::with_capacity(block.stmts.len());
    for s in block.stmts {
        let span = s.span;
        match s.kind {
            StmtKind::Try { body, catches, finally } if !is_synthetic_try(&finally) => {
                let id = config.fresh(&format!("try{counter}"));
                *counter += 1;
                let remove = || expr_stmt(Expr::call(CATCH_REMOVE, vec![Expr::var(&id)]));
                let mut add_args = vec![Expr::var(&id)];
                add_args.extend(catches.iter().map(|c| Expr::str_lit(&c.ty)));

                let mut body = rewrite_block(body, config, counter);
                body.stmts.insert(0, expr_stmt(Expr::call(CATCH_ADD, add_args)));
                let catches = catches
                    .into_iter()
                    .map(|c| {
                        let mut b = rewrite_block(c.body, config, counter);
                        b.stmts.insert(0, remove());
                        CatchClause { body: b, ..c }
                    })
                    .collect();
                let mut fin = finally.map(|f| rewrite_block(f, config, counter)).unwrap_or_default();
                fin.stmts.insert(0, remove());

                out.push(Stmt::synthetic(StmtKind::VarDecl {
                    ty: TypeRef::Int,
                    name: id.clone(),
                    init: Some(Expr::call(FREE_ID, vec![])),
                }));
                out.push(Stmt { kind: StmtKind::Try { body, catches, finally: Some(fin) }, span });
            }
            kind => {
                let mut s = Stmt { kind, span };
                for b in stmt_blocks_mut(&mut s) {
                    *b = rewrite_block(std::mem::take(b), config, counter);
                }
                out.push(s);
            }
        }
    }
    Block { stmts: out }
}
