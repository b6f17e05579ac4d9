//! Query language frontend: parsing and catalog validation.

mod ast;
mod parser;
mod printer;
mod validate;

pub use ast::{AggOp, AggVar, AnnotationDecl, ArithExpr, Atom, BinOp, Program, Recursion, Rule, Term};
pub use parser::{parse_program, SyntaxError};
pub use validate::{validate, AtomIR, ConstEnc, RuleIR, TermIR, ValidateError, IMPLICIT_INV_DEGREE};
