//! The sketch input language: syntax tree, parser, validation and printing.

pub mod ast;
mod lexer;
pub mod parser;
mod print;
pub mod program;
pub mod validate;
mod vars;

pub use ast::*;
pub use parser::{parse_ground_atoms, parse_preferences, parse_program, parse_sketch};
pub use program::*;
pub use validate::{unsafe_variables, validate, ValidationReport, Violation, ViolationKind};
pub use vars::{enumerate_sketch_vars, is_reserved_sketch_name};
pub(crate) use vars::apply_preferences;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: sketched variable ?{name} is declared twice")]
    DuplicateDeclaration { line: usize, name: String },
    #[error("line {line}, column {column}: ?{name} is used with {found} argument(s) but declared with arity {expected}")]
    ArityMismatch { line: usize, column: usize, name: String, expected: usize, found: usize },
    #[error("line {line}, column {column}: ?{name} is not declared in [SKETCHEDVAR]")]
    UndeclaredSketchVar { line: usize, column: usize, name: String },
}

/// Failure of [`load_sketch`]: either the text does not parse or the program is invalid.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Invalid(ValidationReport),
}

/// Parse and validate in one step.
pub fn load_sketch(text: &str) -> Result<SketchProgram, LoadError> {
    let program = parse_sketch(text)?;
    let report = validate(&program);
    if report.is_empty() {
        Ok(program)
    } else {
        Err(LoadError::Invalid(report))
    }
}
