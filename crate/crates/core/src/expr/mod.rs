//! Coefficient-expression language for sprays, projective factors and
//! generator functions. See `GRAMMAR.md` at the repository root.

mod ast;
mod parser;

use std::fmt;
use std::sync::Arc;

pub use ast::{BinOp, Expr, Func};
pub use parser::ParseError;

use crate::error::EvalError;
use crate::jet::Jet;
use crate::scalar::Scalar;

/// A parsed, immutable expression in the phase coordinates `(x, y)` of a
/// fixed dimension. Cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    n: usize,
    root: Arc<Expr>,
}

impl Expression {
    pub fn parse(text: &str, n: usize) -> Result<Self, ParseError> {
        Ok(Expression { n, root: Arc::new(parser::parse_expr(text, n)?) })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn depends_on_y(&self) -> bool {
        self.root.depends_on_y()
    }

    pub fn eval<A: Scalar>(&self, x: &[A], y: &[A]) -> Result<A, EvalError> {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        self.root.eval(x, y)
    }

    pub fn eval_f64(&self, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        self.eval(x, y)
    }

    /// Evaluate on seeds laid out as `[x_1..x_n, y_1..y_n]`.
    pub fn eval_seeds(&self, seeds: &[Jet]) -> Result<Jet, EvalError> {
        let (x, y) = seeds.split_at(self.n);
        self.root.eval(x, y)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
