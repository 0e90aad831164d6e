//! The number-like algebra that expressions are evaluated over.
//!
//! Plain `f64` gives values; [`crate::jet::Jet`] gives values together with
//! exact partial derivatives. Both share the same value semantics: the
//! order-0 part of a jet evaluation is bit-identical to the `f64` evaluation.

use crate::error::EvalError;

pub trait Scalar: Clone {
    /// A constant living in the same algebra (and jet space) as `self`.
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, EvalError>;
    fn sqrt(&self) -> Result<Self, EvalError>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self, EvalError>;
    fn abs(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, p: f64) -> Result<Self, EvalError>;
}

/// Exponents that are small integers take the `powi` route so negative bases work.
pub(crate) fn integer_exponent(p: f64) -> Option<i32> {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        Some(p as i32)
    } else {
        None
    }
}

pub(crate) fn real_pow(v: f64, p: f64) -> Result<f64, EvalError> {
    match integer_exponent(p) {
        Some(k) if k < 0 && v == 0.0 => Err(EvalError::Domain { op: "pow", value: v }),
        Some(k) => Ok(v.powi(k)),
        None if v < 0.0 => Err(EvalError::Domain { op: "pow", value: v }),
        None if v == 0.0 && p < 0.0 => Err(EvalError::Domain { op: "pow", value: v }),
        None => Ok(v.powf(p)),
    }
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }

    fn value(&self) -> f64 {
        *self
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if *rhs == 0.0 {
            return Err(EvalError::Domain { op: "div", value: *rhs });
        }
        Ok(self / rhs)
    }

    fn sqrt(&self) -> Result<Self, EvalError> {
        if *self < 0.0 {
            return Err(EvalError::Domain { op: "sqrt", value: *self });
        }
        Ok(f64::sqrt(*self))
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn ln(&self) -> Result<Self, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::Domain { op: "ln", value: *self });
        }
        Ok(f64::ln(*self))
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn sin(&self) -> Self {
        f64::sin(*self)
    }

    fn cos(&self) -> Self {
        f64::cos(*self)
    }

    fn powf(&self, p: f64) -> Result<Self, EvalError> {
        real_pow(*self, p)
    }
}
