//! Cross terms in the splitting of Cap(A ∪ B).
//!
//! With es_C(x) = P^x(walk avoids C at positive times) and U = A ∪ B,
//!
//!   χ(A,B)  = Σ_{y∈A,z∈B} es_U(y) G_D(y-z) es_B(z) + es_A(y) G_D(y-z) es_U(z)
//!   TL(A,B) = Σ_{y∈A,z∈B} es_A(y) G_D(y-z) es_B(z)
//!   χ'(A,B) = Σ_{y∈A,z∈B} es_A(y) G_D(y-z) P^z(avoid B, hit A)
//!
//! and χ = 2TL - χ'(A,B) - χ'(B,A) holds exactly. The hitting probability in
//! χ' is assembled by a last-exit decomposition through restricted Green's
//! functions, so the identity is a genuine numerical check.

mod split;
mod terms;
mod walk;

pub use split::{tl_split, SplitConfig, SplitTl};
pub use terms::{
    chi, chi_prime, cross_terms, splitting_residual, tl, CrossTermConfig, CrossTermReport, Term,
};
pub use walk::{
    b_rule, sl_and_lambda, splitting_decomposition, tl_prime, SlLambda, SplittingDecomposition,
    TlPrime,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrossTermError {
    #[error(transparent)]
    Capacity(#[from] capacity::CapacityError),
    #[error(transparent)]
    Green(#[from] lattice_green::GreenError),
    #[error(transparent)]
    Walk(#[from] walk_sim::WalkError),
    #[error("a-box tail bound {bound:e} exceeds tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
