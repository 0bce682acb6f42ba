//! MiniLang: a small deterministic imperative language used as the subject
//! of commit-aware mutation analysis.
//!
//! A subject program (`.ml`) and a test file (`.mlt`) share one grammar.
//! Every top-level function of a test file whose name starts with `test_`
//! is a test case; the remaining functions are helpers.

pub mod ast;
mod interp;
mod lexer;
mod parser;
mod printer;
mod value;

pub use ast::{
    BinOp, Expr, ExprKind, FnDef, Node, NodeId, ProgramUnit, Span, Stmt, StmtKind, UnOp,
};
pub use interp::{
    run_test, AssertionId, AssertionRecord, ErrorKind, Outcome, TestCase, TestExecutionRecord,
    TestSuite, DEFAULT_STEP_BUDGET,
};
pub use parser::{parse_program, parse_program_with_base, parse_tests};
pub use printer::{print_expr, print_program, print_stmt_inline};
pub use value::Value;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{file}:{line}:{column}: syntax error: {message}")]
    Syntax {
        file: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("duplicate function `{name}` ({file}:{line})")]
    DuplicateFunction {
        name: String,
        file: String,
        line: u32,
    },
    #[error("{file}:{line}: invalid test `{test}`: {message}")]
    InvalidTest {
        test: String,
        file: String,
        line: u32,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
