//! Registers method parameters and locals with the runtime value pool.
//!
//! ```text
//! int __npefix_mid = __npefix_freeId();
//! __npefix_startMethod(__npefix_mid, this, "p", "T", p, ...);
//! try { ...T a = __npefix_initVar(e, __npefix_mid, "a", "T")... }
//! finally { __npefix_endMethod(__npefix_mid); }
//! ```

use std::collections::HashMap;

use super::hooks::*;
use super::{expr_stmt, method_bodies_mut, TransformConfig};
use crate::frontend::ast::*;

pub fn inject_value_pool(mut program: Program, config: &TransformConfig) -> Program {
    let mid = config.fresh("mid");
    for class in &mut program.classes {
        for (body, _, params) in method_bodies_mut(class) {
            let mut scopes = Scopes { frames: vec![params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect()] };
            let inner = rewrite_block(std::mem::take(body), &mut scopes, &mid);
            let mut start_args = vec![Expr::var(&mid), Expr::synthetic(ExprKind::This)];
            for p in params {
                start_args.push(Expr::str_lit(&p.name));
                start_args.push(Expr::str_lit(p.ty.to_string()));
                start_args.push(Expr::var(&p.name));
            }
            body.stmts = vec![
                Stmt::synthetic(StmtKind::VarDecl {
                    ty: TypeRef::Int,
                    name: mid.clone(),
                    init: Some(Expr::call(FREE_ID, vec![])),
                }),
                expr_stmt(Expr::call(START_METHOD, start_args)),
                Stmt::synthetic(StmtKind::Try {
                    body: inner,
                    catches: vec![],
                    finally: Some(Block::new(vec![expr_stmt(Expr::call(END_METHOD, vec![Expr::var(&mid)]))])),
                }),
            ];
        }
    }
    program
}

struct Scopes {
    frames: Vec<HashMap<String, TypeRef>>,
}

impl Scopes {
    fn lookup(&self, name: &str) -> Option<&TypeRef> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    fn declare(&mut self, name: &str, ty: &TypeRef) {
        self.frames.last_mut().unwrap().insert(name.to_string(), ty.clone());
    }
}

fn wrap(hook: &str, e: Expr, mid: &str, name: &str, ty: &TypeRef) -> Expr {
    Expr::call(hook, vec![e, Expr::var(mid), Expr::str_lit(name), Expr::str_lit(ty.to_string())])
}

fn rewrite_block(block: Block, scopes: &mut Scopes, mid: &str) -> Block {
    scopes.frames.push(HashMap::new());
    let stmts = block.stmts.into_iter().map(|s| rewrite_stmt(s, scopes, mid)).collect();
    scopes.frames.pop();
    Block { stmts }
}

fn rewrite_stmt(s: Stmt, scopes: &mut Scopes, mid: &str) -> Stmt {
    let span = s.span;
    let kind = match s.kind {
        StmtKind::VarDecl { ty, name, init } => {
            let init = init.map(|e| wrap(INIT_VAR, e, mid, &name, &ty));
            scopes.declare(&name, &ty);
            StmtKind::VarDecl { ty, name, init }
        }
        StmtKind::Assign { target, value } => {
            let local = match &target.kind {
                ExprKind::Var(v) => scopes.lookup(v).cloned().map(|t| (v.clone(), t)),
                _ => None,
            };
            match local {
                Some((name, ty)) => StmtKind::Assign { value: wrap(MODIF_VAR, value, mid, &name, &ty), target },
                None => StmtKind::Assign { target, value },
            }
        }
        StmtKind::If { cond, then, els } => StmtKind::If {
            cond,
            then: rewrite_block(then, scopes, mid),
            els: els.map(|b| rewrite_block(b, scopes, mid)),
        },
        StmtKind::While { cond, body } => StmtKind::While { cond, body: rewrite_block(body, scopes, mid) },
        StmtKind::Try { body, catches, finally } => StmtKind::Try {
            body: rewrite_block(body, scopes, mid),
            catches: catches
                .into_iter()
                .map(|c| {
                    scopes.frames.push(HashMap::from([(c.name.clone(), TypeRef::Class(c.ty.clone()))]));
                    let body = rewrite_block(c.body, scopes, mid);
                    scopes.frames.pop();
                    CatchClause { body, ..c }
                })
                .collect(),
            finally: finally.map(|b| rewrite_block(b, scopes, mid)),
        },
        StmtKind::Block(b) => StmtKind::Block(rewrite_block(b, scopes, mid)),
        other => other,
    };
    Stmt { kind, span }
}
