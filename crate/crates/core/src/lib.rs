pub mod error;
pub mod expr;
pub mod harness;
pub mod jet;
pub mod metrizability;
pub mod par;
pub mod projective;
pub mod quadrature;
pub mod reconstruct;
pub mod scalar;
pub mod spray;
