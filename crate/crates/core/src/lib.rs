pub mod algebra;
pub mod scalar;
pub mod smt;
pub mod synth;
pub mod syntax;
pub mod pcp;
pub mod template;
pub mod verify;

pub use num_rational::BigRational;

/// Exact rationals, the coefficient field of the synthesis pipeline.
pub type Rational = BigRational;
pub type Poly = algebra::Polynomial<Rational>;
pub type PolyMatrix = algebra::SymMatrix<Rational>;
pub type RClause = algebra::Clause<Rational>;
pub type RAtom = algebra::Atom<Rational>;
