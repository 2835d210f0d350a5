//! Source-to-source instrumentation of MiniJ programs.
//!
//! Five rewrites prepare a program for runtime repair:
//! value pool registration, catch-stack maintenance, method skipping, line
//! skipping, and dereference checks. They are applied in that order by
//! [`transform_all`]. [`seed_remove_null_checks`] is the fault seeder used by
//! the seeding campaign.

pub mod catch_stack;
pub mod deref_checks;
pub mod hooks;
pub mod line_skip;
pub mod method_skip;
pub mod seed;
pub mod value_pool;

use crate::frontend::ast::*;
use crate::frontend::check::{self, CheckedProgram};
use crate::frontend::FrontendError;

pub use catch_stack::inject_catch_stack;
pub use deref_checks::inject_deref_checks;
pub use line_skip::inject_line_skip;
pub use method_skip::inject_method_skip;
pub use seed::{seed_remove_null_checks, RemovedCheck, SeedReport};
pub use value_pool::inject_value_pool;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformConfig {
    pub enable_catch_stack: bool,
    pub enable_deref_checks: bool,
    pub enable_value_pool: bool,
    pub enable_line_skip: bool,
    pub enable_method_skip: bool,
    /// Prefix for injected local names.
    pub prefix: String,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig::all()
    }
}

impl TransformConfig {
    pub fn all() -> Self {
        TransformConfig {
            enable_catch_stack: true,
            enable_deref_checks: true,
            enable_value_pool: true,
            enable_line_skip: true,
            enable_method_skip: true,
            prefix: hooks::RESERVED_PREFIX.to_string(),
        }
    }

    pub fn none() -> Self {
        TransformConfig {
            enable_catch_stack: false,
            enable_deref_checks: false,
            enable_value_pool: false,
            enable_line_skip: false,
            enable_method_skip: false,
            ..TransformConfig::all()
        }
    }

    pub fn fresh(&self, what: &str) -> String {
        format!("{}{what}", self.prefix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("program is already instrumented (found `{0}`)")]
    AlreadyInstrumented(String),
    #[error("identifier `{name}` uses the reserved prefix `{prefix}`")]
    ReservedIdentifier { name: String, prefix: String },
    #[error("instrumented program does not type-check: {0}")]
    Output(#[from] FrontendError),
}

/// Applies the enabled rewrites in the order value pool, catch stack,
/// method skip, line skip, dereference checks, then re-checks the result.
pub fn transform_all(input: &CheckedProgram, config: &TransformConfig) -> Result<CheckedProgram, TransformError> {
    ensure_uninstrumented(&input.program, config)?;
    let mut program = input.program.clone();
    if config.enable_value_pool {
        program = inject_value_pool(program, config);
    }
    if config.enable_catch_stack {
        program = inject_catch_stack(program, config);
    }
    if config.enable_method_skip {
        program = inject_method_skip(program, config);
    }
    if config.enable_line_skip {
        program = inject_line_skip(program, config);
    }
    if config.enable_deref_checks {
        program = inject_deref_checks(program, config);
    }
    Ok(check::check(program)?)
}

/// Rejects programs that already contain hooks or reserved identifiers.
pub fn ensure_uninstrumented(program: &Program, config: &TransformConfig) -> Result<(), TransformError> {
    let prefixes = [config.prefix.as_str(), hooks::RESERVED_PREFIX];
    let reserved = |n: &str| prefixes.iter().any(|p| !p.is_empty() && n.starts_with(p));
    let mut found: Option<TransformError> = None;
    let mut note = |name: &str, is_hook: bool| {
        // The catch-stack probe is the one hook user programs may call.
        if found.is_none() && reserved(name) && name != hooks::PROBE_CAUGHT {
            found = Some(if is_hook {
                TransformError::AlreadyInstrumented(name.to_string())
            } else {
                TransformError::ReservedIdentifier { name: name.to_string(), prefix: config.prefix.clone() }
            });
        }
    };
    let mut program = program.clone();
    for c in &mut program.classes {
        note(&c.name, false);
        for f in &mut c.fields {
            note(&f.name, false);
        }
        let mut bodies: Vec<&mut Block> = Vec::new();
        for k in &mut c.ctors {
            k.params.iter().for_each(|p| note(&p.name, false));
            bodies.push(&mut k.body);
        }
        for m in &mut c.methods {
            note(&m.name, false);
            m.params.iter().for_each(|p| note(&p.name, false));
            if let Some(b) = &mut m.body {
                bodies.push(b);
            }
        }
        for b in bodies {
            for_each_stmt_mut(b, &mut |s| match &s.kind {
                StmtKind::VarDecl { name, .. } => note(name, false),
                StmtKind::Try { catches, .. } => catches.iter().for_each(|c| note(&c.name, false)),
                _ => {}
            });
            walk_block_exprs_mut(b, &mut |e| match &e.kind {
                ExprKind::Call { recv, name, .. } => note(name, recv.is_none() && hooks::is_hook(name)),
                ExprKind::Var(v) => note(v, false),
                _ => {}
            });
        }
        for f in &mut c.fields {
            if let Some(init) = &mut f.init {
                walk_expr_mut(init, &mut |e| {
                    if let ExprKind::Call { recv, name, .. } = &e.kind {
                        note(name, recv.is_none() && hooks::is_hook(name));
                    }
                });
            }
        }
    }
    match found {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn for_each_stmt_mut(b: &mut Block, f: &mut dyn FnMut(&mut Stmt)) {
    for s in &mut b.stmts {
        f(s);
        for child in stmt_blocks_mut(s) {
            for_each_stmt_mut(child, f);
        }
    }
}

/// Bodies of every constructor and concrete method with their "void" flag
/// (constructors count as void).
pub(crate) fn method_bodies_mut(class: &mut ClassDecl) -> Vec<(&mut Block, &TypeRef, &[Param])> {
    static VOID: TypeRef = TypeRef::Void;
    let mut out: Vec<(&mut Block, &TypeRef, &[Param])> = Vec::new();
    for k in &mut class.ctors {
        out.push((&mut k.body, &VOID, &k.params));
    }
    for m in &mut class.methods {
        if let Some(b) = &mut m.body {
            out.push((b, &m.ret, &m.params));
        }
    }
    out
}

pub(crate) fn expr_stmt(e: Expr) -> Stmt {
    Stmt::synthetic(StmtKind::Expr(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, print, SourceUnit};

    fn checked(src: &str) -> CheckedProgram {
        parse(&SourceUnit::new("t.mj", src)).unwrap()
    }

    #[test]
    fn all_off_is_identity() {
        let p = checked("class A { int x; void m(A a) { try { a.m(null); } catch (Exception e) { } } }");
        let out = transform_all(&p, &TransformConfig::none()).unwrap();
        assert_eq!(out.program, p.program);
    }

    #[test]
    fn all_on_empty_class_is_valid() {
        let p = checked("class A { }");
        let out = transform_all(&p, &TransformConfig::all()).unwrap();
        assert_eq!(out.program, p.program);
    }

    #[test]
    fn second_transformation_is_rejected() {
        let p = checked("class A { void m(A a) { a.m(null); } }");
        let once = transform_all(&p, &TransformConfig::all()).unwrap();
        let reparsed = parse(&print(&once.program)[0]).unwrap();
        let err = transform_all(&reparsed, &TransformConfig::all()).unwrap_err();
        assert!(matches!(err, TransformError::AlreadyInstrumented(_) | TransformError::ReservedIdentifier { .. }), "{err}");
    }

    #[test]
    fn full_pipeline_output_reparses_to_the_same_tree() {
        let p = checked(
            "class B { B next; int v; B get() { return next; } }\n\
             class A { static B shared; B m(B b, int n) { B c = b.get(); try { b.next.v = n; } catch (NullPointerException e) { n = 0; } if (c != null) { return c.get().next; } return b; } }",
        );
        let out = transform_all(&p, &TransformConfig::all()).unwrap();
        let text = print(&out.program);
        let back = parse(&text[0]).unwrap();
        assert_eq!(back.program, out.program, "{}", text[0].text);
    }

    #[test]
    fn reserved_user_identifier_is_rejected() {
        let p = checked("class A { void m() { int __npefix_x = 1; } }");
        assert!(matches!(
            transform_all(&p, &TransformConfig::all()),
            Err(TransformError::ReservedIdentifier { .. })
        ));
    }
}
