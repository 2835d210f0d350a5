//! Names and builders for the runtime hooks injected by the rewrites.
//!
//! Every hook is a free call to an intrinsic whose name carries the reserved
//! `__npefix_` prefix. The interpreter dispatches on these names.

use crate::frontend::ast::{Expr, ExprKind};

pub const RESERVED_PREFIX: &str = "__npefix_";

pub const FORCE_RETURN: &str = "__npefix_ForceReturn";

pub const FREE_ID: &str = "__npefix_freeId";
pub const CATCH_ADD: &str = "__npefix_catchAdd";
pub const CATCH_REMOVE: &str = "__npefix_catchRemove";
pub const CHECK_FOR_NULL: &str = "__npefix_checkForNull";
pub const START_METHOD: &str = "__npefix_startMethod";
pub const END_METHOD: &str = "__npefix_endMethod";
pub const INIT_VAR: &str = "__npefix_initVar";
pub const MODIF_VAR: &str = "__npefix_modifVar";
pub const SKIP_LINE: &str = "__npefix_skipLine";
pub const IS_STRATEGY: &str = "__npefix_isStrategy";
pub const GET_VAR: &str = "__npefix_getVar";
pub const NEW_VAR: &str = "__npefix_newVar";
/// Records `will_be_caught` for the named exception type; used by the catch-stack oracle.
pub const PROBE_CAUGHT: &str = "__npefix_probeCaught";

pub const ALL: &[&str] = &[
    FREE_ID,
    CATCH_ADD,
    CATCH_REMOVE,
    CHECK_FOR_NULL,
    START_METHOD,
    END_METHOD,
    INIT_VAR,
    MODIF_VAR,
    SKIP_LINE,
    IS_STRATEGY,
    GET_VAR,
    NEW_VAR,
    PROBE_CAUGHT,
];

pub fn is_hook(name: &str) -> bool {
    ALL.contains(&name)
}

/// Name of the hook a free call targets, if any.
pub fn hook_name(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Call { recv: None, name, .. } if is_hook(name) => Some(name),
        _ => None,
    }
}

pub fn is_hook_call(e: &Expr, hook: &str) -> bool {
    hook_name(e) == Some(hook)
}

pub fn int_lit(i: i64) -> Expr {
    Expr::synthetic(ExprKind::Int(i))
}
