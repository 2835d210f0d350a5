//! Static typing for MiniJ. Annotates every expression with its type and
//! rewrites `C.f` on class names into static field accesses.

use std::collections::HashSet;

use super::ast::*;
use super::types::{table_for, Type, TypeTable};
use super::{prelude, FrontendError};
use crate::transform::hooks;

/// A parsed program whose expressions all carry static types.
#[derive(Debug, Clone)]
pub struct CheckedProgram {
    pub program: Program,
    pub table: TypeTable,
}

pub const BUILTIN_FUNCTIONS: &[&str] = &["print", "assertTrue", "assertEquals"];

pub fn check(mut program: Program) -> Result<CheckedProgram, FrontendError> {
    let table = table_for(prelude(), &program).map_err(|e| {
        let file = program.classes.first().map(|c| c.file.clone()).unwrap_or_default();
        type_err(&file, Span::default(), e.to_string())
    })?;
    for class in &mut program.classes {
        check_class(&table, class)?;
    }
    Ok(CheckedProgram { program, table })
}

fn type_err(file: &str, span: Span, message: impl Into<String>) -> FrontendError {
    FrontendError::Type { file: file.to_string(), line: 0, col: 0, span, message: message.into() }
}

fn check_type_ref(table: &TypeTable, file: &str, span: Span, t: &TypeRef) -> Result<(), FrontendError> {
    if let TypeRef::Class(c) = t {
        if !table.contains(c) {
            return Err(type_err(file, span, format!("unknown type `{c}`")));
        }
    }
    Ok(())
}

pub(crate) fn check_class(table: &TypeTable, class: &mut ClassDecl) -> Result<(), FrontendError> {
    let file = class.file.clone();
    let name = class.name.clone();

    let mut seen = HashSet::new();
    for f in &class.fields {
        check_type_ref(table, &file, f.span, &f.ty)?;
        if !seen.insert(f.name.clone()) {
            return Err(type_err(&file, f.span, format!("duplicate field `{}`", f.name)));
        }
    }
    let mut seen = HashSet::new();
    for m in &class.methods {
        if !seen.insert(m.name.clone()) {
            return Err(type_err(&file, m.span, format!("duplicate method `{}` (no overloading)", m.name)));
        }
        if m.body.is_none() && class.kind == ClassKind::Class {
            return Err(type_err(&file, m.span, format!("concrete class `{name}` declares bodiless method `{}`", m.name)));
        }
        if m.body.is_some() && class.kind == ClassKind::Interface {
            return Err(type_err(&file, m.span, "interface methods cannot have bodies"));
        }
    }
    let mut arities = HashSet::new();
    for k in &class.ctors {
        if class.kind == ClassKind::Interface {
            return Err(type_err(&file, k.span, "interfaces cannot declare constructors"));
        }
        if !arities.insert(k.params.len()) {
            return Err(type_err(&file, k.span, "constructors must differ in arity"));
        }
    }

    for f in &mut class.fields {
        if let Some(init) = &mut f.init {
            let mut cx = Ctx::new(table, &file, &name, Type::Void, !f.is_static);
            let t = cx.expr(init)?;
            cx.expect_assignable(&t, &Type::from_ref(&f.ty), init.span)?;
        }
    }
    for k in &mut class.ctors {
        let mut cx = Ctx::new(table, &file, &name, Type::Void, true);
        cx.params(&k.params, k.span)?;
        cx.block(&mut k.body)?;
    }
    for m in &mut class.methods {
        check_type_ref(table, &file, m.span, &m.ret)?;
        let mut cx = Ctx::new(table, &file, &name, Type::from_ref(&m.ret), true);
        cx.params(&m.params, m.span)?;
        if let Some(body) = &mut m.body {
            cx.block(body)?;
        }
    }
    Ok(())
}

struct Ctx<'a> {
    table: &'a TypeTable,
    file: &'a str,
    class: &'a str,
    ret: Type,
    has_this: bool,
    scopes: Vec<Vec<(String, Type)>>,
}

impl<'a> Ctx<'a> {
    fn new(table: &'a TypeTable, file: &'a str, class: &'a str, ret: Type, has_this: bool) -> Self {
        Ctx { table, file, class, ret, has_this, scopes: vec![Vec::new()] }
    }

    fn err(&self, span: Span, msg: impl Into<String>) -> FrontendError {
        type_err(self.file, span, msg)
    }

    fn params(&mut self, ps: &[Param], span: Span) -> Result<(), FrontendError> {
        for p in ps {
            check_type_ref(self.table, self.file, span, &p.ty)?;
            self.declare(&p.name, Type::from_ref(&p.ty), span)?;
        }
        Ok(())
    }

    fn lookup_local(&self, name: &str) -> Option<&Type> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn declare(&mut self, name: &str, ty: Type, span: Span) -> Result<(), FrontendError> {
        if self.lookup_local(name).is_some() {
            return Err(self.err(span, format!("variable `{name}` is already defined")));
        }
        self.scopes.last_mut().unwrap().push((name.to_string(), ty));
        Ok(())
    }

    fn expect_assignable(&self, from: &Type, to: &Type, span: Span) -> Result<(), FrontendError> {
        if self.table.is_assignable(from, to) {
            Ok(())
        } else {
            Err(self.err(span, format!("type mismatch: expected `{to}`, found `{from}`")))
        }
    }

    fn block(&mut self, b: &mut Block) -> Result<(), FrontendError> {
        self.scopes.push(Vec::new());
        for s in &mut b.stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &mut Stmt) -> Result<(), FrontendError> {
        let span = s.span;
        match &mut s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                check_type_ref(self.table, self.file, span, ty)?;
                if ty.is_void() {
                    return Err(self.err(span, "variables cannot have type void"));
                }
                let declared = Type::from_ref(ty);
                if let Some(e) = init {
                    let t = self.expr(e)?;
                    self.expect_assignable(&t, &declared, e.span)?;
                }
                self.declare(name, declared, span)?;
            }
            StmtKind::Assign { target, value } => {
                let tt = self.expr(target)?;
                if !matches!(target.kind, ExprKind::Var(_) | ExprKind::Field { .. } | ExprKind::StaticField { .. }) {
                    return Err(self.err(target.span, "invalid assignment target"));
                }
                if let ExprKind::Var(v) = &target.kind {
                    if self.table.contains(v) && self.lookup_local(v).is_none() {
                        return Err(self.err(target.span, "cannot assign to a class name"));
                    }
                }
                let vt = self.expr(value)?;
                self.expect_assignable(&vt, &tt, value.span)?;
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::If { cond, then, els } => {
                let t = self.expr(cond)?;
                self.expect_assignable(&t, &Type::Bool, cond.span)?;
                self.block(then)?;
                if let Some(b) = els {
                    self.block(b)?;
                }
            }
            StmtKind::While { cond, body } => {
                let t = self.expr(cond)?;
                self.expect_assignable(&t, &Type::Bool, cond.span)?;
                self.block(body)?;
            }
            StmtKind::Return(value) => match (value, &self.ret) {
                (None, Type::Void) => {}
                (None, r) => return Err(self.err(span, format!("missing return value of type `{r}`"))),
                (Some(e), Type::Void) => return Err(self.err(e.span, "void method cannot return a value")),
                (Some(e), r) => {
                    let r = r.clone();
                    let t = self.expr(e)?;
                    self.expect_assignable(&t, &r, e.span)?;
                }
            },
            StmtKind::Throw(e) => {
                let t = self.expr(e)?;
                match t.class_name() {
                    Some(c) if self.table.is_throwable(c) => {}
                    _ => return Err(self.err(e.span, format!("cannot throw value of type `{t}`"))),
                }
            }
            StmtKind::Try { body, catches, finally } => {
                self.block(body)?;
                for c in catches {
                    if !self.table.contains(&c.ty) || !self.table.is_throwable(&c.ty) {
                        return Err(self.err(span, format!("`{}` is not an exception type", c.ty)));
                    }
                    self.scopes.push(Vec::new());
                    self.declare(&c.name, Type::Class(c.ty.clone()), span)?;
                    self.block(&mut c.body)?;
                    self.scopes.pop();
                }
                if let Some(b) = finally {
                    self.block(b)?;
                }
            }
            StmtKind::Block(b) => self.block(b)?,
        }
        Ok(())
    }

    fn expr(&mut self, e: &mut Expr) -> Result<Type, FrontendError> {
        let t = self.expr_inner(e)?;
        e.ty = Some(t.clone());
        Ok(t)
    }

    fn field_of(&self, class: &str, field: &str, span: Span) -> Result<Type, FrontendError> {
        match self.table.find_field(class, field) {
            Some(f) => Ok(f.ty.clone()),
            None => Err(self.err(span, format!("type `{class}` has no field `{field}`"))),
        }
    }

    fn expr_inner(&mut self, e: &mut Expr) -> Result<Type, FrontendError> {
        let span = e.span;
        // Static field access `C.f` on a class name that is not shadowed.
        if let ExprKind::Field { obj, name } = &e.kind {
            if let ExprKind::Var(c) = &obj.kind {
                if self.lookup_local(c).is_none()
                    && self.table.find_field(self.class, c).is_none()
                    && self.table.contains(c)
                {
                    let (class, name) = (c.clone(), name.clone());
                    let ty = match self.table.find_field(&class, &name) {
                        Some(f) if f.is_static => f.ty.clone(),
                        Some(_) => return Err(self.err(span, format!("field `{class}.{name}` is not static"))),
                        None => return Err(self.err(span, format!("type `{class}` has no field `{name}`"))),
                    };
                    e.kind = ExprKind::StaticField { class, name };
                    return Ok(ty);
                }
            }
        }
        match &mut e.kind {
            ExprKind::Int(_) => Ok(Type::Int),
            ExprKind::Bool(_) => Ok(Type::Bool),
            ExprKind::Str(_) => Ok(Type::Str),
            ExprKind::Null => Ok(Type::Null),
            ExprKind::This => {
                if self.has_this {
                    Ok(Type::Class(self.class.to_string()))
                } else {
                    Err(self.err(span, "`this` is not available in a static initializer"))
                }
            }
            ExprKind::Var(name) => {
                if let Some(t) = self.lookup_local(name) {
                    return Ok(t.clone());
                }
                match self.table.find_field(self.class, name) {
                    Some(f) if f.is_static || self.has_this => Ok(f.ty.clone()),
                    Some(_) => Err(self.err(span, format!("instance field `{name}` used in static context"))),
                    None => Err(self.err(span, format!("unknown variable `{name}`"))),
                }
            }
            ExprKind::StaticField { class, name } => match self.table.find_field(class, name) {
                Some(f) if f.is_static => Ok(f.ty.clone()),
                _ => Err(self.err(span, format!("unknown static field `{class}.{name}`"))),
            },
            ExprKind::Field { obj, name } => {
                let name = name.clone();
                let ot = self.expr(obj)?;
                match ot {
                    Type::Class(c) => self.field_of(&c, &name, span),
                    other => Err(self.err(span, format!("cannot access field `{name}` on `{other}`"))),
                }
            }
            ExprKind::Call { recv: Some(recv), name, args } => {
                let name = name.clone();
                let rt = self.expr(recv)?;
                let Type::Class(c) = rt else {
                    return Err(self.err(span, format!("cannot call `{name}` on `{rt}`")));
                };
                self.method_call(&c, &name, args, span)
            }
            ExprKind::Call { recv: None, name, args } => {
                let name = name.clone();
                if hooks::is_hook(&name) {
                    return self.hook_call(&name, args, span);
                }
                if BUILTIN_FUNCTIONS.contains(&name.as_str()) {
                    return self.builtin_call(&name, args, span);
                }
                if !self.has_this {
                    return Err(self.err(span, format!("method `{name}` called without receiver in static context")));
                }
                let class = self.class.to_string();
                self.method_call(&class, &name, args, span)
            }
            ExprKind::New { class, args } => {
                let class = class.clone();
                let Some(info) = self.table.get(&class) else {
                    return Err(self.err(span, format!("unknown type `{class}`")));
                };
                if !info.is_instantiable() {
                    return Err(self.err(span, format!("`{class}` is abstract or an interface and cannot be instantiated")));
                }
                let ctors = info.ctors.clone();
                let arg_types = self.args(args)?;
                if ctors.is_empty() {
                    if !arg_types.is_empty() {
                        return Err(self.err(span, format!("`{class}` only has a default constructor")));
                    }
                } else {
                    let Some(k) = ctors.iter().find(|k| k.params.len() == arg_types.len()) else {
                        return Err(self.err(span, format!("no constructor of `{class}` takes {} arguments", arg_types.len())));
                    };
                    for (a, p) in arg_types.iter().zip(&k.params) {
                        self.expect_assignable(a, p, span)?;
                    }
                }
                Ok(Type::Class(class))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                let lt = self.expr(lhs)?;
                let rt = self.expr(rhs)?;
                self.binary(op, &lt, &rt, span)
            }
            ExprKind::Unary { op, operand } => {
                let op = *op;
                let t = self.expr(operand)?;
                match (op, &t) {
                    (UnOp::Not, Type::Bool) => Ok(Type::Bool),
                    (UnOp::Neg, Type::Int) => Ok(Type::Int),
                    _ => Err(self.err(span, format!("invalid operand type `{t}` for unary operator"))),
                }
            }
        }
    }

    fn binary(&self, op: BinOp, lt: &Type, rt: &Type, span: Span) -> Result<Type, FrontendError> {
        use BinOp::*;
        let ok = |t: Type| Ok(t);
        match op {
            Add if *lt == Type::Str || *rt == Type::Str => {
                if *lt == Type::Void || *rt == Type::Void {
                    Err(self.err(span, "cannot concatenate void"))
                } else {
                    ok(Type::Str)
                }
            }
            Add | Sub | Mul | Div | Mod if *lt == Type::Int && *rt == Type::Int => ok(Type::Int),
            Lt | Le | Gt | Ge if *lt == Type::Int && *rt == Type::Int => ok(Type::Bool),
            And | Or if *lt == Type::Bool && *rt == Type::Bool => ok(Type::Bool),
            Eq | Ne => {
                let compatible = if lt.is_reference() && rt.is_reference() {
                    self.table.is_assignable(lt, rt) || self.table.is_assignable(rt, lt)
                } else {
                    lt == rt && *lt != Type::Void
                };
                if compatible {
                    ok(Type::Bool)
                } else {
                    Err(self.err(span, format!("cannot compare `{lt}` with `{rt}`")))
                }
            }
            _ => Err(self.err(span, format!("operator `{}` not defined for `{lt}` and `{rt}`", op.symbol()))),
        }
    }

    fn args(&mut self, args: &mut [Expr]) -> Result<Vec<Type>, FrontendError> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            let t = self.expr(a)?;
            if t == Type::Void {
                return Err(self.err(a.span, "void value used as argument"));
            }
            out.push(t);
        }
        Ok(out)
    }

    fn method_call(&mut self, class: &str, name: &str, args: &mut [Expr], span: Span) -> Result<Type, FrontendError> {
        let Some(sig) = self.table.find_method(class, name).cloned() else {
            return Err(self.err(span, format!("type `{class}` has no method `{name}`")));
        };
        let arg_types = self.args(args)?;
        if arg_types.len() != sig.params.len() {
            return Err(self.err(
                span,
                format!("method `{name}` expects {} arguments, got {}", sig.params.len(), arg_types.len()),
            ));
        }
        for (a, p) in arg_types.iter().zip(&sig.params) {
            self.expect_assignable(a, p, span)?;
        }
        Ok(sig.ret)
    }

    fn builtin_call(&mut self, name: &str, args: &mut [Expr], span: Span) -> Result<Type, FrontendError> {
        let ts = self.args(args)?;
        let want = match name {
            "print" | "assertTrue" => 1,
            _ => 2,
        };
        if ts.len() != want {
            return Err(self.err(span, format!("`{name}` expects {want} arguments")));
        }
        if name == "assertTrue" {
            self.expect_assignable(&ts[0], &Type::Bool, span)?;
        }
        if name == "assertEquals" {
            self.binary(BinOp::Eq, &ts[0], &ts[1], span)?;
        }
        Ok(Type::Void)
    }

    fn string_lit<'e>(&self, e: &'e Expr, what: &str) -> Result<&'e str, FrontendError> {
        match &e.kind {
            ExprKind::Str(s) => Ok(s),
            _ => Err(self.err(e.span, format!("hook argument `{what}` must be a string literal"))),
        }
    }

    fn type_lit(&self, e: &Expr) -> Result<Type, FrontendError> {
        let t = Type::parse_name(self.string_lit(e, "type")?);
        if let Type::Class(c) = &t {
            if !self.table.contains(c) {
                return Err(self.err(e.span, format!("unknown type `{c}` in hook")));
            }
        }
        Ok(t)
    }

    fn arity(&self, name: &str, args: &[Expr], n: usize, span: Span) -> Result<(), FrontendError> {
        if args.len() != n {
            Err(self.err(span, format!("hook `{name}` expects {n} arguments")))
        } else {
            Ok(())
        }
    }

    fn hook_call(&mut self, name: &str, args: &mut [Expr], span: Span) -> Result<Type, FrontendError> {
        use hooks::*;
        match name {
            FREE_ID => {
                self.arity(name, args, 0, span)?;
                Ok(Type::Int)
            }
            END_METHOD | CATCH_REMOVE => {
                self.arity(name, args, 1, span)?;
                let t = self.expr(&mut args[0])?;
                self.expect_assignable(&t, &Type::Int, span)?;
                Ok(Type::Void)
            }
            CATCH_ADD => {
                if args.is_empty() {
                    return Err(self.err(span, "catchAdd expects a try id"));
                }
                let t = self.expr(&mut args[0])?;
                self.expect_assignable(&t, &Type::Int, span)?;
                for a in &args[1..] {
                    let t = self.type_lit(a)?;
                    if !t.class_name().is_some_and(|c| self.table.is_throwable(c)) {
                        return Err(self.err(a.span, "catchAdd types must be exception types"));
                    }
                }
                Ok(Type::Void)
            }
            START_METHOD => {
                if args.len() < 2 || (args.len() - 2) % 3 != 0 {
                    return Err(self.err(span, "startMethod expects (id, this, (name, type, value)*)"));
                }
                for a in args.iter_mut() {
                    self.expr(a)?;
                }
                for chunk in args[2..].chunks(3) {
                    self.string_lit(&chunk[0], "name")?;
                    let t = self.type_lit(&chunk[1])?;
                    self.expect_assignable(chunk[2].ty.as_ref().unwrap(), &t, chunk[2].span)?;
                }
                Ok(Type::Void)
            }
            INIT_VAR | MODIF_VAR => {
                self.arity(name, args, 4, span)?;
                let t = self.expr(&mut args[0])?;
                self.expr(&mut args[1])?;
                self.string_lit(&args[2], "name")?;
                let declared = self.type_lit(&args[3])?;
                self.expect_assignable(&t, &declared, span)?;
                Ok(declared)
            }
            CHECK_FOR_NULL => {
                self.arity(name, args, 3, span)?;
                let t = self.expr(&mut args[0])?;
                self.string_lit(&args[1], "crash point")?;
                let req = self.type_lit(&args[2])?;
                self.expect_assignable(&t, &req, span)?;
                Ok(t)
            }
            SKIP_LINE => {
                if args.len() % 2 != 0 {
                    return Err(self.err(span, "skipLine expects (crash point, receiver) pairs"));
                }
                for pair in args.chunks_mut(2) {
                    self.string_lit(&pair[0], "crash point")?;
                    let t = self.expr(&mut pair[1])?;
                    if !t.is_reference() {
                        return Err(self.err(pair[1].span, "skipLine receivers must be references"));
                    }
                }
                Ok(Type::Bool)
            }
            IS_STRATEGY => {
                self.arity(name, args, 2, span)?;
                self.expr(&mut args[0])?;
                self.string_lit(&args[1], "strategy")?;
                Ok(Type::Bool)
            }
            GET_VAR | NEW_VAR => {
                self.arity(name, args, 2, span)?;
                self.expr(&mut args[0])?;
                self.type_lit(&args[1])
            }
            PROBE_CAUGHT => {
                self.arity(name, args, 1, span)?;
                self.type_lit(&args[0])?;
                Ok(Type::Void)
            }
            _ => Err(self.err(span, format!("unknown hook `{name}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, SourceUnit};
    use super::*;

    fn check_src(src: &str) -> Result<CheckedProgram, FrontendError> {
        parse(&SourceUnit::new("t.mj", src))
    }

    #[test]
    fn resolves_static_fields() {
        let p = check_src("class A { static int n = 1; } class B { void m() { int x = A.n; } }").unwrap();
        let m = &p.program.class("B").unwrap().methods[0];
        let StmtKind::VarDecl { init: Some(e), .. } = &m.body.as_ref().unwrap().stmts[0].kind else { panic!() };
        assert!(matches!(e.kind, ExprKind::StaticField { .. }));
    }

    #[test]
    fn rejects_unknown_method() {
        let err = check_src("class A { void m(A a) { a.nope(); } }").unwrap_err();
        assert!(!err.is_syntax());
        assert!(err.to_string().contains("no method `nope`"), "{err}");
    }

    #[test]
    fn rejects_instantiating_interface() {
        assert!(check_src("interface I { void run(); } class A { void m() { I i = new I(); } }").is_err());
    }

    #[test]
    fn subtypes_assign_to_supertypes() {
        check_src("interface I { void run(); } class B implements I { void run() { } } class A { void m() { I i = new B(); i.run(); } }")
            .unwrap();
    }

    #[test]
    fn type_error_reports_line() {
        let err = check_src("class A {\n void m() {\n int x = true;\n }\n}").unwrap_err();
        let FrontendError::Type { line, .. } = err else { panic!() };
        assert_eq!(line, 3);
    }

    #[test]
    fn string_concatenation() {
        check_src("class A { void m() { string s = \"a\" + 1 + null; print(s); } }").unwrap();
    }
}
