use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Renders every class of `program` belonging to `file`.
pub fn print_file(program: &Program, file: &str) -> String {
    let mut out = String::new();
    let mut first = true;
    for c in program.classes.iter().filter(|c| c.file == file) {
        if !first {
            out.push('\n');
        }
        first = false;
        print_class(&mut out, c);
    }
    out
}

/// Renders all classes regardless of file.
pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, c) in program.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_class(&mut out, c);
    }
    out
}

fn print_class(out: &mut String, c: &ClassDecl) {
    match c.kind {
        ClassKind::Class => out.push_str("class "),
        ClassKind::Abstract => out.push_str("abstract class "),
        ClassKind::Interface => out.push_str("interface "),
    }
    out.push_str(&c.name);
    if let Some(e) = &c.extends {
        let _ = write!(out, " extends {e}");
    }
    if !c.implements.is_empty() {
        let kw = if c.kind == ClassKind::Interface { "extends" } else { "implements" };
        let _ = write!(out, " {kw} {}", c.implements.join(", "));
    }
    if c.fields.is_empty() && c.ctors.is_empty() && c.methods.is_empty() {
        out.push_str(" { }\n");
        return;
    }
    out.push_str(" {\n");
    for f in &c.fields {
        out.push_str(INDENT);
        if f.is_static {
            out.push_str("static ");
        }
        let _ = write!(out, "{} {}", f.ty, f.name);
        if let Some(e) = &f.init {
            let _ = write!(out, " = {}", expr_to_string(e));
        }
        out.push_str(";\n");
    }
    for k in &c.ctors {
        let _ = write!(out, "{INDENT}{}({})", c.name, params(&k.params));
        print_block_inline(out, &k.body, 1);
        out.push('\n');
    }
    for m in &c.methods {
        out.push_str(INDENT);
        if m.body.is_none() && c.kind == ClassKind::Abstract {
            out.push_str("abstract ");
        }
        let _ = write!(out, "{} {}({})", m.ret, m.name, params(&m.params));
        match &m.body {
            Some(b) => print_block_inline(out, b, 1),
            None => out.push(';'),
        }
        out.push('\n');
    }
    out.push_str("}\n");
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{} {}", p.ty, p.name)).collect::<Vec<_>>().join(", ")
}

/// Prints ` { ... }` starting on the current line; the closing brace is
/// indented at `level`.
fn print_block_inline(out: &mut String, b: &Block, level: usize) {
    if b.stmts.is_empty() {
        out.push_str(" { }");
        return;
    }
    out.push_str(" {\n");
    for s in &b.stmts {
        print_stmt(out, s, level + 1);
    }
    out.push_str(&INDENT.repeat(level));
    out.push('}');
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    out.push_str(&INDENT.repeat(level));
    print_stmt_body(out, s, level);
    out.push('\n');
}

fn print_stmt_body(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::VarDecl { ty, name, init } => {
            let _ = write!(out, "{ty} {name}");
            if let Some(e) = init {
                let _ = write!(out, " = {}", expr_to_string(e));
            }
            out.push(';');
        }
        StmtKind::Assign { target, value } => {
            let _ = write!(out, "{} = {};", expr_to_string(target), expr_to_string(value));
        }
        StmtKind::Expr(e) => {
            let _ = write!(out, "{};", expr_to_string(e));
        }
        StmtKind::If { cond, then, els } => {
            let _ = write!(out, "if ({})", expr_to_string(cond));
            print_block_inline(out, then, level);
            if let Some(b) = els {
                out.push_str(" else");
                print_block_inline(out, b, level);
            }
        }
        StmtKind::While { cond, body } => {
            let _ = write!(out, "while ({})", expr_to_string(cond));
            print_block_inline(out, body, level);
        }
        StmtKind::Return(None) => out.push_str("return;"),
        StmtKind::Return(Some(e)) => {
            let _ = write!(out, "return {};", expr_to_string(e));
        }
        StmtKind::Throw(e) => {
            let _ = write!(out, "throw {};", expr_to_string(e));
        }
        StmtKind::Try { body, catches, finally } => {
            out.push_str("try");
            print_block_inline(out, body, level);
            for c in catches {
                let _ = write!(out, " catch ({} {})", c.ty, c.name);
                print_block_inline(out, &c.body, level);
            }
            if let Some(b) = finally {
                out.push_str(" finally");
                print_block_inline(out, b, level);
            }
        }
        StmtKind::Block(b) => {
            // Leading space from print_block_inline is dropped here.
            let mut tmp = String::new();
            print_block_inline(&mut tmp, b, level);
            out.push_str(tmp.trim_start());
        }
    }
}

/// Renders statements at the given indentation, one per line.
pub fn stmts_to_string(stmts: &[Stmt], level: usize) -> String {
    let mut out = String::new();
    for s in stmts {
        print_stmt(&mut out, s, level);
    }
    out
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt_body(&mut out, s, 0);
    out
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    print_expr(&mut out, e, 0);
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const UNARY_PREC: u8 = 7;

/// `ctx` is the minimum precedence the surrounding context accepts without parentheses.
fn print_expr(out: &mut String, e: &Expr, ctx: u8) {
    match &e.kind {
        ExprKind::Int(i) => {
            if *i < 0 {
                let _ = write!(out, "({i})");
            } else {
                let _ = write!(out, "{i}");
            }
        }
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Str(s) => out.push_str(&escape(s)),
        ExprKind::Null => out.push_str("null"),
        ExprKind::This => out.push_str("this"),
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Field { obj, name } => {
            print_expr(out, obj, u8::MAX);
            let _ = write!(out, ".{name}");
        }
        ExprKind::StaticField { class, name } => {
            let _ = write!(out, "{class}.{name}");
        }
        ExprKind::Call { recv, name, args } => {
            if let Some(r) = recv {
                print_expr(out, r, u8::MAX);
                out.push('.');
            }
            out.push_str(name);
            print_args(out, args);
        }
        ExprKind::New { class, args } => {
            let _ = write!(out, "new {class}");
            print_args(out, args);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let paren = p < ctx;
            if paren {
                out.push('(');
            }
            print_expr(out, lhs, p);
            let _ = write!(out, " {} ", op.symbol());
            print_expr(out, rhs, p + 1);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Unary { op, operand } => {
            let paren = UNARY_PREC < ctx;
            if paren {
                out.push('(');
            }
            out.push_str(match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            });
            print_expr(out, operand, UNARY_PREC);
            if paren {
                out.push(')');
            }
        }
    }
}

fn print_args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_expr(out, a, 0);
    }
    out.push(')');
}
