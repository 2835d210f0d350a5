//! Abstract syntax tree for MiniJ.
//!
//! Structural equality (`==`) ignores source spans and inferred types, so a
//! program printed and parsed again compares equal to the original.

use std::fmt;

use super::types::Type;

/// Byte-offset range into the source text of the owning file.
#[derive(Debug, Clone, Copy, Default, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start: start as u32, end: end as u32 }
    }

    /// Span for nodes synthesized by a rewrite; never a crash-point key.
    pub const SYNTHETIC: Span = Span { start: u32::MAX, end: u32::MAX };

    pub fn is_synthetic(&self) -> bool {
        self.start == u32::MAX
    }

    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end }
    }
}

// Spans never participate in structural equality.
impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}
impl Eq for Span {}

/// A type as written in source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeRef {
    Int,
    Bool,
    Str,
    Void,
    Class(String),
}

impl TypeRef {
    pub fn is_void(&self) -> bool {
        matches!(self, TypeRef::Void)
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int => f.write_str("int"),
            TypeRef::Bool => f.write_str("bool"),
            TypeRef::Str => f.write_str("string"),
            TypeRef::Void => f.write_str("void"),
            TypeRef::Class(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Distinct file identifiers in first-appearance order.
    pub fn files(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.classes {
            if !out.contains(&c.file.as_str()) {
                out.push(&c.file);
            }
        }
        out
    }

    pub fn merge(mut self, other: Program) -> Program {
        self.classes.extend(other.classes);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Class,
    Abstract,
    Interface,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub file: String,
    pub kind: ClassKind,
    pub name: String,
    pub extends: Option<String>,
    pub implements: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub ctors: Vec<CtorDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub is_static: bool,
    pub ty: TypeRef,
    pub name: String,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorDecl {
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub ret: TypeRef,
    pub name: String,
    pub params: Vec<Param>,
    /// `None` for abstract and interface methods.
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    pub fn synthetic(kind: StmtKind) -> Self {
        Stmt { kind, span: Span::SYNTHETIC }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchClause {
    pub ty: String,
    pub name: String,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl { ty: TypeRef, name: String, init: Option<Expr> },
    Assign { target: Expr, value: Expr },
    Expr(Expr),
    If { cond: Expr, then: Block, els: Option<Block> },
    While { cond: Expr, body: Block },
    Return(Option<Expr>),
    Throw(Expr),
    Try { body: Block, catches: Vec<CatchClause>, finally: Option<Block> },
    Block(Block),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Static type, filled in by the type checker.
    pub ty: Option<Type>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.kind == other.kind
    }
}
impl Eq for Expr {}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span, ty: None }
    }

    pub fn synthetic(kind: ExprKind) -> Self {
        Expr::new(kind, Span::SYNTHETIC)
    }

    pub fn str_lit(s: impl Into<String>) -> Self {
        Expr::synthetic(ExprKind::Str(s.into()))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::synthetic(ExprKind::Var(name.into()))
    }

    /// Free call `name(args)`: builtins, runtime hooks, or implicit-`this` methods.
    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::synthetic(ExprKind::Call { recv: None, name: name.into(), args })
    }

    /// True for field accesses and method calls on an explicit non-`this` receiver.
    pub fn is_dereference(&self) -> bool {
        match &self.kind {
            ExprKind::Field { obj, .. } => !matches!(obj.kind, ExprKind::This),
            ExprKind::Call { recv: Some(r), .. } => !matches!(r.kind, ExprKind::This),
            _ => false,
        }
    }

    /// Receiver expression of a dereference site.
    pub fn receiver(&self) -> Option<&Expr> {
        match &self.kind {
            ExprKind::Field { obj, .. } => Some(obj),
            ExprKind::Call { recv: Some(r), .. } => Some(r),
            _ => None,
        }
    }

    pub fn receiver_mut(&mut self) -> Option<&mut Expr> {
        match &mut self.kind {
            ExprKind::Field { obj, .. } => Some(obj),
            ExprKind::Call { recv: Some(r), .. } => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    This,
    Var(String),
    Field { obj: Box<Expr>, name: String },
    /// `C.f` where `C` names a class; produced by the type checker.
    StaticField { class: String, name: String },
    Call { recv: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    New { class: String, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
}

/// Mutable pre-order walk over every expression reachable from a block.
pub fn walk_block_exprs_mut(block: &mut Block, f: &mut dyn FnMut(&mut Expr)) {
    for s in &mut block.stmts {
        walk_stmt_exprs_mut(s, f);
    }
}

pub fn walk_stmt_exprs_mut(stmt: &mut Stmt, f: &mut dyn FnMut(&mut Expr)) {
    match &mut stmt.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                walk_expr_mut(e, f);
            }
        }
        StmtKind::Assign { target, value } => {
            walk_expr_mut(target, f);
            walk_expr_mut(value, f);
        }
        StmtKind::Expr(e) | StmtKind::Throw(e) => walk_expr_mut(e, f),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr_mut(e, f);
            }
        }
        StmtKind::If { cond, then, els } => {
            walk_expr_mut(cond, f);
            walk_block_exprs_mut(then, f);
            if let Some(b) = els {
                walk_block_exprs_mut(b, f);
            }
        }
        StmtKind::While { cond, body } => {
            walk_expr_mut(cond, f);
            walk_block_exprs_mut(body, f);
        }
        StmtKind::Try { body, catches, finally } => {
            walk_block_exprs_mut(body, f);
            for c in catches {
                walk_block_exprs_mut(&mut c.body, f);
            }
            if let Some(b) = finally {
                walk_block_exprs_mut(b, f);
            }
        }
        StmtKind::Block(b) => walk_block_exprs_mut(b, f),
    }
}

pub fn walk_expr_mut(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(e);
    match &mut e.kind {
        ExprKind::Field { obj, .. } => walk_expr_mut(obj, f),
        ExprKind::Call { recv, args, .. } => {
            if let Some(r) = recv {
                walk_expr_mut(r, f);
            }
            for a in args {
                walk_expr_mut(a, f);
            }
        }
        ExprKind::New { args, .. } => {
            for a in args {
                walk_expr_mut(a, f);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr_mut(lhs, f);
            walk_expr_mut(rhs, f);
        }
        ExprKind::Unary { operand, .. } => walk_expr_mut(operand, f),
        _ => {}
    }
}

/// Read-only pre-order walk over expressions of a statement, not descending
/// into nested statements' blocks.
pub fn stmt_own_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match &stmt.kind {
        StmtKind::VarDecl { init, .. } => init.iter().collect(),
        StmtKind::Assign { target, value } => vec![target, value],
        StmtKind::Expr(e) | StmtKind::Throw(e) => vec![e],
        StmtKind::Return(e) => e.iter().collect(),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
        StmtKind::Try { .. } | StmtKind::Block(_) => Vec::new(),
    }
}

/// Child blocks of a statement, in source order.
pub fn stmt_blocks(stmt: &Stmt) -> Vec<&Block> {
    match &stmt.kind {
        StmtKind::If { then, els, .. } => {
            let mut v = vec![then];
            if let Some(b) = els {
                v.push(b);
            }
            v
        }
        StmtKind::While { body, .. } => vec![body],
        StmtKind::Try { body, catches, finally } => {
            let mut v = vec![body];
            v.extend(catches.iter().map(|c| &c.body));
            if let Some(b) = finally {
                v.push(b);
            }
            v
        }
        StmtKind::Block(b) => vec![b],
        _ => Vec::new(),
    }
}

pub fn stmt_blocks_mut(stmt: &mut Stmt) -> Vec<&mut Block> {
    match &mut stmt.kind {
        StmtKind::If { then, els, .. } => {
            let mut v = vec![then];
            if let Some(b) = els {
                v.push(b);
            }
            v
        }
        StmtKind::While { body, .. } => vec![body],
        StmtKind::Try { body, catches, finally } => {
            let mut v = vec![body];
            v.extend(catches.iter_mut().map(|c| &mut c.body));
            if let Some(b) = finally {
                v.push(b);
            }
            v
        }
        StmtKind::Block(b) => vec![b],
        _ => Vec::new(),
    }
}

/// Visits every expression node (pre-order) of `e`.
pub fn visit_expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Field { obj, .. } => visit_expr(obj, f),
        ExprKind::Call { recv, args, .. } => {
            if let Some(r) = recv {
                visit_expr(r, f);
            }
            for a in args {
                visit_expr(a, f);
            }
        }
        ExprKind::New { args, .. } => {
            for a in args {
                visit_expr(a, f);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        ExprKind::Unary { operand, .. } => visit_expr(operand, f),
        _ => {}
    }
}
