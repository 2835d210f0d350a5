//! MiniJ language: lexing, parsing, printing, type checking and the
//! dereference-site inventory the instrumentation is keyed on.

pub mod ast;
pub mod check;
pub mod derefs;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod types;

use std::fmt;
use std::sync::OnceLock;

pub use ast::{Program, Span};
pub use check::CheckedProgram;
pub use derefs::{enumerate_dereferences, CrashPointKey, DerefSite};
pub use types::{Type, TypeTable};

/// Built-in classes available to every program.
pub const PRELUDE_SRC: &str = r#"
class Exception {
    string message;
    Exception() { }
    Exception(string m) { message = m; }
    string getMessage() { return message; }
}
class NullPointerException extends Exception {
    NullPointerException() { }
    NullPointerException(string m) { message = m; }
}
class AssertionError extends Exception {
    AssertionError() { }
    AssertionError(string m) { message = m; }
}
class ArithmeticException extends Exception {
    ArithmeticException() { }
    ArithmeticException(string m) { message = m; }
}
class IllegalStateException extends Exception {
    IllegalStateException() { }
    IllegalStateException(string m) { message = m; }
}
class __npefix_ForceReturn { }
"#;

pub const PRELUDE_FILE: &str = "<prelude>";

pub fn prelude() -> &'static Program {
    static PRELUDE: OnceLock<Program> = OnceLock::new();
    PRELUDE.get_or_init(|| {
        let mut p = parser::parse_program(PRELUDE_FILE, PRELUDE_SRC).expect("prelude parses");
        let table = TypeTable::build(&p.classes.iter().collect::<Vec<_>>(), p.classes.len()).expect("prelude table");
        for c in &mut p.classes {
            check::check_class(&table, c).expect("prelude type-checks");
        }
        p
    })
}

/// One source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceUnit { path: path.into(), text: text.into() }
    }

    pub fn read(path: &std::path::Path) -> std::io::Result<SourceUnit> {
        Ok(SourceUnit { path: path.display().to_string(), text: std::fs::read_to_string(path)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    Syntax { file: String, line: usize, col: usize, span: Span, message: String, expected: Vec<String> },
    Type { file: String, line: usize, col: usize, span: Span, message: String },
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrontendError::Syntax { file, line, col, message, expected, .. } => {
                write!(f, "{file}:{line}:{col}: syntax error: {message}")?;
                if !expected.is_empty() {
                    write!(f, " (expected {})", expected.join(", "))?;
                }
                Ok(())
            }
            FrontendError::Type { file, line, col, message, .. } => {
                write!(f, "{file}:{line}:{col}: type error: {message}")
            }
        }
    }
}

/// 1-based line and column of a byte offset.
pub fn line_col(src: &str, offset: u32) -> (usize, usize) {
    let offset = (offset as usize).min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map(|i| offset - i).unwrap_or(offset + 1);
    (line, col)
}

impl FrontendError {
    pub fn syntax(file: &str, src: &str, span: Span, message: &str, expected: Vec<String>) -> Self {
        let (line, col) = line_col(src, span.start);
        FrontendError::Syntax { file: file.to_string(), line, col, span, message: message.to_string(), expected }
    }

    pub fn span(&self) -> Span {
        match self {
            FrontendError::Syntax { span, .. } | FrontendError::Type { span, .. } => *span,
        }
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self, FrontendError::Syntax { .. })
    }

    /// Fills in line/column for type errors once the source text is known.
    fn locate(mut self, units: &[SourceUnit]) -> Self {
        if let FrontendError::Type { file, line, col, span, .. } = &mut self {
            if let Some(u) = units.iter().find(|u| &u.path == file) {
                if !span.is_synthetic() {
                    (*line, *col) = line_col(&u.text, span.start);
                }
            }
        }
        self
    }
}

/// Parses and type-checks one source unit.
pub fn parse(unit: &SourceUnit) -> Result<CheckedProgram, FrontendError> {
    parse_units(std::slice::from_ref(unit))
}

/// Parses several files as one program (classes may reference each other).
pub fn parse_units(units: &[SourceUnit]) -> Result<CheckedProgram, FrontendError> {
    let mut program = Program::default();
    for u in units {
        program = program.merge(parser::parse_program(&u.path, &u.text)?);
    }
    check::check(program).map_err(|e| e.locate(units))
}

/// Renders a program back to one source unit per file.
pub fn print(program: &Program) -> Vec<SourceUnit> {
    program
        .files()
        .into_iter()
        .map(|f| SourceUnit::new(f, printer::print_file(program, f)))
        .collect()
}
