use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::FrontendError;

/// Recursive-descent parser over the token stream of one file.
pub struct Parser<'a> {
    file: &'a str,
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

pub fn parse_program(file: &str, src: &str) -> Result<Program, FrontendError> {
    let mut p = Parser::new(file, src)?;
    let mut classes = Vec::new();
    while !p.at_eof() {
        classes.push(p.class_decl()?);
    }
    if classes.is_empty() {
        return Err(p.error("expected at least one class declaration", &["`class`", "`interface`"]));
    }
    Ok(Program { classes })
}

/// Parses a sequence of statements (used for patch snippets).
pub fn parse_statements(file: &str, src: &str) -> Result<Vec<Stmt>, FrontendError> {
    let mut p = Parser::new(file, src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.statement()?);
    }
    Ok(out)
}

pub fn parse_expression(file: &str, src: &str) -> Result<Expr, FrontendError> {
    let mut p = Parser::new(file, src)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.error("trailing input after expression", &["end of input"]));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    pub fn new(file: &'a str, src: &'a str) -> Result<Self, FrontendError> {
        Ok(Parser { file, src, toks: lex(file, src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: &str, expected: &[&str]) -> FrontendError {
        let found = self.peek().describe();
        FrontendError::syntax(
            self.file,
            self.src,
            self.span(),
            &format!("{msg}, found {found}"),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<Span, FrontendError> {
        if self.is_sym(s) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&format!("expected `{s}`"), &[&format!("`{s}`")]))
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<Span, FrontendError> {
        if self.is_kw(k) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&format!("expected `{k}`"), &[&format!("`{k}`")]))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected identifier", &["identifier"])),
        }
    }

    fn type_ref(&mut self) -> Result<TypeRef, FrontendError> {
        let t = match self.peek().clone() {
            Tok::Kw("int") => TypeRef::Int,
            Tok::Kw("bool") => TypeRef::Bool,
            Tok::Kw("string") => TypeRef::Str,
            Tok::Ident(s) => TypeRef::Class(s),
            _ => return Err(self.error("expected type", &["`int`", "`bool`", "`string`", "class name"])),
        };
        self.bump();
        Ok(t)
    }

    fn class_decl(&mut self) -> Result<ClassDecl, FrontendError> {
        let start = self.span();
        let kind = if self.eat_kw("interface") {
            ClassKind::Interface
        } else if self.eat_kw("abstract") {
            self.expect_kw("class")?;
            ClassKind::Abstract
        } else if self.eat_kw("class") {
            ClassKind::Class
        } else {
            return Err(self.error("expected class declaration", &["`class`", "`abstract`", "`interface`"]));
        };
        let name = self.ident()?;
        let mut extends = None;
        let mut implements = Vec::new();
        if kind == ClassKind::Interface {
            if self.eat_kw("extends") {
                implements = self.ident_list()?;
            }
        } else {
            if self.eat_kw("extends") {
                extends = Some(self.ident()?);
            }
            if self.eat_kw("implements") {
                implements = self.ident_list()?;
            }
        }
        self.expect_sym("{")?;
        let mut decl = ClassDecl {
            file: self.file.to_string(),
            kind,
            name,
            extends,
            implements,
            fields: Vec::new(),
            ctors: Vec::new(),
            methods: Vec::new(),
            span: start,
        };
        while !self.is_sym("}") {
            if self.at_eof() {
                return Err(self.error("unbalanced braces: class body not closed", &["`}`"]));
            }
            self.member(&mut decl)?;
        }
        let end = self.expect_sym("}")?;
        decl.span = start.to(end);
        Ok(decl)
    }

    fn ident_list(&mut self) -> Result<Vec<String>, FrontendError> {
        let mut v = vec![self.ident()?];
        while self.eat_sym(",") {
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn member(&mut self, class: &mut ClassDecl) -> Result<(), FrontendError> {
        let start = self.span();
        // Constructor: ClassName '('
        if matches!(self.peek(), Tok::Ident(n) if *n == class.name) && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            let params = self.params()?;
            let body = self.block()?;
            class.ctors.push(CtorDecl { params, body, span: start.to(self.prev_span()) });
            return Ok(());
        }
        let is_static = self.eat_kw("static");
        let is_abstract = !is_static && self.eat_kw("abstract");
        let ret = if self.eat_kw("void") { TypeRef::Void } else { self.type_ref()? };
        let name = self.ident()?;
        if self.is_sym("(") {
            if is_static {
                return Err(FrontendError::syntax(
                    self.file,
                    self.src,
                    start,
                    "methods cannot be static",
                    vec![],
                ));
            }
            let params = self.params()?;
            let body = if self.eat_sym(";") {
                None
            } else {
                if is_abstract {
                    return Err(self.error("abstract method cannot have a body", &["`;`"]));
                }
                Some(self.block()?)
            };
            class.methods.push(MethodDecl { ret, name, params, body, span: start.to(self.prev_span()) });
            return Ok(());
        }
        if ret.is_void() || is_abstract {
            return Err(self.error("expected `(` after method name", &["`(`"]));
        }
        let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
        self.expect_sym(";")?;
        class.fields.push(FieldDecl { is_static, ty: ret, name, init, span: start.to(self.prev_span()) });
        Ok(())
    }

    fn params(&mut self) -> Result<Vec<Param>, FrontendError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                let ty = self.type_ref()?;
                let name = self.ident()?;
                out.push(Param { ty, name });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    pub fn block(&mut self) -> Result<Block, FrontendError> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.is_sym("}") {
            if self.at_eof() {
                return Err(self.error("unbalanced braces: block not closed", &["`}`"]));
            }
            stmts.push(self.statement()?);
        }
        self.expect_sym("}")?;
        Ok(Block { stmts })
    }

    /// A block, or a single statement treated as a one-statement block.
    fn body(&mut self) -> Result<Block, FrontendError> {
        if self.is_sym("{") {
            self.block()
        } else {
            Ok(Block { stmts: vec![self.statement()?] })
        }
    }

    pub fn statement(&mut self) -> Result<Stmt, FrontendError> {
        let start = self.span();
        let kind = match self.peek() {
            Tok::Sym("{") => StmtKind::Block(self.block()?),
            Tok::Kw("if") => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then = self.body()?;
                let els = if self.eat_kw("else") { Some(self.body()?) } else { None };
                StmtKind::If { cond, then, els }
            }
            Tok::Kw("while") => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                StmtKind::While { cond, body: self.body()? }
            }
            Tok::Kw("return") => {
                self.bump();
                let value = if self.is_sym(";") { None } else { Some(self.expr()?) };
                self.expect_sym(";")?;
                StmtKind::Return(value)
            }
            Tok::Kw("throw") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Throw(e)
            }
            Tok::Kw("try") => {
                self.bump();
                let body = self.block()?;
                let mut catches = Vec::new();
                while self.eat_kw("catch") {
                    self.expect_sym("(")?;
                    let ty = self.ident()?;
                    let name = self.ident()?;
                    self.expect_sym(")")?;
                    catches.push(CatchClause { ty, name, body: self.block()? });
                }
                let finally = if self.eat_kw("finally") { Some(self.block()?) } else { None };
                if catches.is_empty() && finally.is_none() {
                    return Err(self.error("try without catch or finally", &["`catch`", "`finally`"]));
                }
                StmtKind::Try { body, catches, finally }
            }
            _ if self.is_declaration() => {
                let ty = self.type_ref()?;
                let name = self.ident()?;
                let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                self.expect_sym(";")?;
                StmtKind::VarDecl { ty, name, init }
            }
            _ => {
                let e = self.expr()?;
                if self.eat_sym("=") {
                    if !matches!(e.kind, ExprKind::Var(_) | ExprKind::Field { .. }) {
                        return Err(FrontendError::syntax(
                            self.file,
                            self.src,
                            e.span,
                            "invalid assignment target",
                            vec!["variable".into(), "field access".into()],
                        ));
                    }
                    let value = self.expr()?;
                    self.expect_sym(";")?;
                    StmtKind::Assign { target: e, value }
                } else {
                    self.expect_sym(";")?;
                    StmtKind::Expr(e)
                }
            }
        };
        Ok(Stmt { kind, span: start.to(self.prev_span()) })
    }

    fn is_declaration(&self) -> bool {
        match self.peek() {
            Tok::Kw("int" | "bool" | "string") => true,
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Ident(_)),
            _ => false,
        }
    }

    pub fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("%") => BinOp::Mod,
            _ => return None,
        };
        Some(op)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let start = self.span();
        let op = if self.eat_sym("!") {
            UnOp::Not
        } else if self.eat_sym("-") {
            UnOp::Neg
        } else {
            return self.postfix();
        };
        let operand = self.unary()?;
        let span = start.to(operand.span);
        Ok(Expr::new(ExprKind::Unary { op, operand: Box::new(operand) }, span))
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.primary()?;
        while self.eat_sym(".") {
            let name = self.ident()?;
            if self.is_sym("(") {
                let args = self.args()?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Call { recv: Some(Box::new(e)), name, args }, span);
            } else {
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Field { obj: Box::new(e), name }, span);
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>, FrontendError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                out.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                ExprKind::Int(i)
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Str(s)
            }
            Tok::Kw("true") => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::Kw("false") => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Kw("null") => {
                self.bump();
                ExprKind::Null
            }
            Tok::Kw("this") => {
                self.bump();
                ExprKind::This
            }
            Tok::Kw("new") => {
                self.bump();
                let class = self.ident()?;
                let args = self.args()?;
                ExprKind::New { class, args }
            }
            Tok::Sym("(") => {
                self.bump();
                let mut inner = self.expr()?;
                self.expect_sym(")")?;
                inner.span = start.to(self.prev_span());
                return Ok(inner);
            }
            Tok::Ident(name) => {
                self.bump();
                if self.is_sym("(") {
                    let args = self.args()?;
                    ExprKind::Call { recv: None, name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            _ => {
                return Err(self.error(
                    "expected expression",
                    &["literal", "identifier", "`this`", "`new`", "`(`", "`null`"],
                ))
            }
        };
        Ok(Expr::new(kind, start.to(self.prev_span())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expression("t", "1 - 2 - 3 * 4").unwrap();
        match e.kind {
            ExprKind::Binary { op: BinOp::Sub, lhs, rhs } => {
                assert!(matches!(lhs.kind, ExprKind::Binary { op: BinOp::Sub, .. }));
                assert!(matches!(rhs.kind, ExprKind::Binary { op: BinOp::Mul, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chained_call_nests_receivers() {
        let e = parse_expression("t", "a.b().c()").unwrap();
        let ExprKind::Call { recv: Some(r), name, .. } = &e.kind else { panic!() };
        assert_eq!(name, "c");
        assert!(matches!(&r.kind, ExprKind::Call { name, .. } if name == "b"));
        assert_eq!((e.span.start, e.span.end), (0, 9));
        assert_eq!((r.span.start, r.span.end), (0, 5));
    }

    #[test]
    fn unbalanced_braces_report_position() {
        let err = parse_program("t.mj", "class A { void m() { ").unwrap_err();
        let FrontendError::Syntax { line, expected, .. } = &err else { panic!("{err:?}") };
        assert_eq!(*line, 1);
        assert!(expected.iter().any(|e| e == "`}`"));
    }

    #[test]
    fn declaration_versus_assignment() {
        let stmts = parse_statements("t", "A a = b; a = c; a.f = d;").unwrap();
        assert!(matches!(stmts[0].kind, StmtKind::VarDecl { .. }));
        assert!(matches!(stmts[1].kind, StmtKind::Assign { .. }));
        assert!(matches!(&stmts[2].kind, StmtKind::Assign { target, .. } if matches!(target.kind, ExprKind::Field { .. })));
    }

    #[test]
    fn try_requires_handler() {
        assert!(parse_statements("t", "try { }").is_err());
    }
}
