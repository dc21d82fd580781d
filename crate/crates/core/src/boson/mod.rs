//! Exact symbolic algebra of bosonic creation and annihilation operators.

pub mod closure;
pub mod operator;
pub mod poly;

pub use closure::{
    lie_closure, naive_generators, factorization_algebra, factorization_basis, factorization_labels, structure_constants,
    symbolic_structure_constants, ClosureReport, WitnessStep, DEFAULT_MAX_DIM,
};
pub use operator::{BosonOperator, Monomial};
pub use poly::{Poly, RatFn};
