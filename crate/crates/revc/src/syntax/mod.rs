//! Surface language: abstract syntax, lexer, parser, and printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;


pub use ast::{
    alpha_eq, build, free_vars, subst, wire_refs, Definition, MatchArm, SourceProgram, Term,
    TypeExpr,
};
pub use parser::{parse_program, parse_term_str, parse_type_str, ParseError};
pub use pretty::{pretty_definition, pretty_program, pretty_term};
