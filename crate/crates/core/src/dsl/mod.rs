//! The Lagrangian language: parsing, normal forms, Euler-Lagrange derivation
//! and density checks.

pub mod canonical;
pub mod density;
pub mod derive;
pub mod expr;
pub mod parse;

use thiserror::Error;

pub use canonical::{Atom, Monomial, Poly};
pub use density::{check_density_requirements, CheckStatus, DensityCheckReport};
pub use derive::{differentiate, equation_of_motion, euler_lagrange, EquationOfMotion, Parameter, SystemKind};
pub use expr::{Axis, Expr};
pub use parse::{parse_equation, parse_lagrangian, Vocabulary};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("undeclared symbol `{name}` at {line}:{col}")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("unsupported Lagrangian: {0}")]
    Unsupported(String),
    #[error("degenerate equation: {0}")]
    Degenerate(String),
    #[error("no value bound for `{0}`")]
    Unbound(String),
}
