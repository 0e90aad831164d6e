use thiserror::Error;

/// Failures while evaluating an expression or a jet operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("requested derivative order {requested} exceeds jet order {available}")]
    Order { requested: usize, available: usize },
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    UnsupportedOrder { requested: usize, max: usize },
    #[error("{vars} jet variables exceed the supported maximum {max}")]
    TooManyVariables { vars: usize, max: usize },
    #[error("point is outside the spray domain")]
    NotAdmitted,
}

/// An evaluation failure tied to the phase point where it happened.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("at x = {x:?}, y = {y:?}: {source}")]
pub struct PointError {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[source]
    pub source: EvalError,
}

impl PointError {
    pub fn at(p: &crate::spray::PhasePoint, source: EvalError) -> Self {
        PointError { x: p.x.clone(), y: p.y.clone(), source }
    }
}
