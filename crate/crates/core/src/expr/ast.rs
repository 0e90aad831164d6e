use std::fmt;

use crate::error::EvalError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Abs,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Coordinate indices are zero-based internally.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X(usize),
    Y(usize),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

impl Expr {
    pub fn eval<A: Scalar>(&self, x: &[A], y: &[A]) -> Result<A, EvalError> {
        Ok(match self {
            Expr::Const(c) => x[0].lift(*c),
            Expr::X(i) => x[*i].clone(),
            Expr::Y(i) => y[*i].clone(),
            Expr::Neg(e) => e.eval(x, y)?.neg(),
            Expr::Call(f, e) => {
                let v = e.eval(x, y)?;
                match f {
                    Func::Sqrt => v.sqrt()?,
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln()?,
                    Func::Abs => v.abs(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = a.eval(x, y)?;
                let b = b.eval(x, y)?;
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b)?,
                }
            }
            Expr::Pow(base, p) => base.eval(x, y)?.powf(*p)?,
        })
    }

    /// Value of a variable-free subtree.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::X(_) | Expr::Y(_) => None,
            Expr::Neg(e) => e.constant_value().map(|v| -v),
            Expr::Call(..) | Expr::Binary(..) | Expr::Pow(..) => {
                if self.has_variables() {
                    return None;
                }
                let dummy = [0.0f64];
                self.eval(&dummy, &dummy).ok()
            }
        }
    }

    pub fn has_variables(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::X(_) | Expr::Y(_) => true,
            Expr::Neg(e) | Expr::Call(_, e) | Expr::Pow(e, _) => e.has_variables(),
            Expr::Binary(_, a, b) => a.has_variables() || b.has_variables(),
        }
    }

    pub fn depends_on_y(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::X(_) => false,
            Expr::Y(_) => true,
            Expr::Neg(e) | Expr::Call(_, e) | Expr::Pow(e, _) => e.depends_on_y(),
            Expr::Binary(_, a, b) => a.depends_on_y() || b.depends_on_y(),
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

/// Fully parenthesized; re-parses to a structurally equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_number(f, *c),
            Expr::X(i) => write!(f, "x{}", i + 1),
            Expr::Y(i) => write!(f, "y{}", i + 1),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, p) => {
                write!(f, "({e})^")?;
                write_number(f, *p)
            }
        }
    }
}
