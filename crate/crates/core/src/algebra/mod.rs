//! Exact symbolic algebra: variables, monomials, multivariate polynomials,
//! polynomial matrices, constraint clauses and the coefficient-splitting
//! `decompose` operator.

mod constraint;
mod matrix;
mod monomial;
mod parse;
mod polynomial;
mod var;

pub use constraint::{decompose, dedup_clauses, Atom, Clause, Origin, Rel};
pub use matrix::{MatrixError, SymMatrix};
pub use monomial::Monomial;
pub use parse::{parse_conjunction, parse_equation, parse_poly, ParseError};
pub use polynomial::Polynomial;
pub use var::{is_identifier, SymbolError, SymbolTable, Var, VarKind, GENERATED_RANK};
