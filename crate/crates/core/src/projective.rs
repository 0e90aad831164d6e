//! Projective deformations `S = S₀ − 2Pℂ` of the flat spray, i.e.
//! `G^i = P y^i`, and the closed formulas they admit:
//!
//! * `ρ = P² − S₀P`;
//! * `α_i = P ∂P/∂y^i + ∂(S₀P)/∂y^i − 3 ∂P/∂x^i`;
//! * `N^i_j = P δ^i_j + y^i ∂P/∂y^j`.
//!
//! A generator `g` gives `P = S₀g`; it yields constant curvature when
//! `d_J P = d_{h₀} g` and `d_{h₀}(e^{−2g}ρ) + ½ S₀(e^{−2g}) d_J ρ = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::EvalError;
use crate::expr::Expression;
use crate::jet::Jet;
use crate::scalar::Scalar;
use crate::spray::{self, s0_derivative, PhasePoint, Spray};

/// The projective factor `P`, given directly or as `S₀g`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectiveFactor {
    Explicit(Expression),
    Generator(Expression),
}

impl ProjectiveFactor {
    pub fn dim(&self) -> usize {
        match self {
            ProjectiveFactor::Explicit(e) | ProjectiveFactor::Generator(e) => e.dimension(),
        }
    }

    /// `P` as a jet of `order` at `p`, with the phase seeds of that order.
    pub fn jets(&self, p: &PhasePoint, order: usize) -> Result<(Jet, Vec<Jet>), EvalError> {
        match self {
            ProjectiveFactor::Explicit(e) => {
                let seeds = Jet::lift_point(&p.x, &p.y, order)?;
                Ok((e.eval_seeds(&seeds)?, seeds))
            }
            ProjectiveFactor::Generator(g) => {
                let seeds = Jet::lift_point(&p.x, &p.y, order + 1)?;
                let pj = s0_derivative(&g.eval_seeds(&seeds)?, &seeds, p.dim());
                Ok((pj, seeds.iter().map(|s| s.truncate(order)).collect()))
            }
        }
    }

    /// `|ℂ(P) − P| / (1 + |P|)`.
    pub fn homogeneity_residual(&self, p: &PhasePoint) -> Result<f64, EvalError> {
        let n = p.dim();
        let (pj, _) = self.jets(p, 1)?;
        let euler: f64 = (0..n).map(|j| p.y[j] * pj.d1(n + j)).sum();
        Ok((euler - pj.value()).abs() / (1.0 + pj.value().abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Depends on `x` only.
    Basic,
    FiberDependent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFunction {
    pub g: Expression,
    pub kind: GeneratorKind,
}

impl GeneratorFunction {
    pub fn new(g: Expression) -> Self {
        let kind = if g.depends_on_y() { GeneratorKind::FiberDependent } else { GeneratorKind::Basic };
        GeneratorFunction { g, kind }
    }

    /// `ℂ(g)`; zero for a basic generator. `S₀g` is 1-homogeneous exactly
    /// when this is locally constant.
    pub fn fiber_weight(&self, p: &PhasePoint) -> Result<f64, EvalError> {
        let n = p.dim();
        let seeds = Jet::lift_point(&p.x, &p.y, 1)?;
        let gj = self.g.eval_seeds(&seeds)?;
        Ok((0..n).map(|j| p.y[j] * gj.d1(n + j)).sum())
    }

    /// Homogeneity defect of `P = S₀g`.
    pub fn homogeneity_residual(&self, p: &PhasePoint) -> Result<f64, EvalError> {
        self.factor().homogeneity_residual(p)
    }

    pub fn factor(&self) -> ProjectiveFactor {
        ProjectiveFactor::Generator(self.g.clone())
    }
}

/// `G^i = P y^i`.
pub fn deform_flat(p: &ProjectiveFactor) -> Spray {
    match p {
        ProjectiveFactor::Explicit(e) => Spray::projective(e.dimension(), e.clone()),
        ProjectiveFactor::Generator(g) => Spray::generator(g.dimension(), g.clone()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveJacobi {
    pub phi: DMatrix<f64>,
    pub rho: f64,
    pub alpha: Vec<f64>,
}

/// `ρ` and `α` as jets of `order`; needs `P` of order `order + 2`.
fn rho_alpha_jets(pf: &ProjectiveFactor, p: &PhasePoint, order: usize) -> Result<(Jet, Vec<Jet>, Jet), EvalError> {
    let n = p.dim();
    let (pj, seeds) = pf.jets(p, order + 2)?;
    let s0p = s0_derivative(&pj, &seeds, n);
    let p_low = pj.truncate(order);
    let rho = &(&p_low * &p_low) - &s0p.truncate(order);
    let alpha = (0..n)
        .map(|i| {
            let a = &p_low * &pj.derivative(n + i).truncate(order);
            let b = s0p.derivative(n + i);
            &(&a + &b) - &pj.derivative(i).truncate(order).scale(3.0)
        })
        .collect();
    Ok((rho, alpha, pj))
}

pub fn jacobi_projective(pf: &ProjectiveFactor, p: &PhasePoint) -> Result<ProjectiveJacobi, EvalError> {
    let n = p.dim();
    let (rho, alpha, _) = rho_alpha_jets(pf, p, 0)?;
    let rho = rho.value();
    let alpha: Vec<f64> = alpha.iter().map(Jet::value).collect();
    let phi = DMatrix::from_fn(n, n, |i, j| if i == j { rho } else { 0.0 } - alpha[j] * p.y[i]);
    Ok(ProjectiveJacobi { phi, rho, alpha })
}

/// `(res_c1, res_c2)` for `P = S₀g`, with `ρ = (S₀g)² − S₀²g`.
pub fn generator_conditions(g: &GeneratorFunction, p: &PhasePoint) -> Result<(f64, f64), EvalError> {
    let n = p.dim();
    let seeds = Jet::lift_point(&p.x, &p.y, 3)?;
    let gj = g.g.eval_seeds(&seeds)?;
    let pj = s0_derivative(&gj, &seeds, n);
    let s0p = s0_derivative(&pj, &seeds, n);
    let rho = &(&pj.truncate(1) * &pj.truncate(1)) - &s0p;

    let mut c1 = 0.0f64;
    for i in 0..n {
        c1 = c1.max((pj.d1(n + i) - gj.d1(i)).abs());
    }

    let weight = gj.truncate(2).scale(-2.0).exp();
    let u = &weight.truncate(1) * &rho;
    let s0w = s0_derivative(&weight, &seeds, n);
    let mut c2 = 0.0f64;
    for i in 0..n {
        let v = u.d1(i) + 0.5 * s0w.value() * rho.d1(n + i);
        c2 = c2.max(v.abs());
    }
    Ok((c1, c2 / (weight.value() * rho.value().abs()).max(1e-300)))
}

/// Defect of `d_J α = −3 d_J d_{h₀} P`, relative to `1 + max|∂α/∂y|`.
pub fn dja_identity_residual(pf: &ProjectiveFactor, p: &PhasePoint) -> Result<f64, EvalError> {
    let n = p.dim();
    let (_, alpha, pj) = rho_alpha_jets(pf, p, 1)?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(alpha[i].d1(n + j).abs());
            let mixed = |a: usize, b: usize| pj.derivative(a).d1(n + b);
            let d = alpha[i].d1(n + j) - alpha[j].d1(n + i) + 3.0 * (mixed(i, j) - mixed(j, i));
            worst = worst.max(d.abs());
        }
    }
    Ok(worst / (1.0 + scale))
}

/// `max |N^i_j − (P δ^i_j + y^i ∂P/∂y^j)|` against the general pipeline.
pub fn connection_shift_residual(pf: &ProjectiveFactor, p: &PhasePoint) -> Result<f64, EvalError> {
    let n = p.dim();
    let conn = spray::connection(&deform_flat(pf), p)?.n;
    let (pj, _) = pf.jets(p, 1)?;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { pj.value() } else { 0.0 } + p.y[i] * pj.d1(n + j);
            worst = worst.max((conn[(i, j)] - expected).abs());
        }
    }
    Ok(worst)
}

/// Max distance of an integrated geodesic from the line through its start
/// point along its initial velocity.
pub fn collinearity_defect(s: &Spray, start: &PhasePoint, dt: f64, steps: usize) -> Result<f64, EvalError> {
    let path = spray::integrate_geodesic(s, start, dt, steps)?;
    let x0 = DVector::from_column_slice(&start.x);
    let dir = DVector::from_column_slice(&start.y).normalize();
    Ok(path
        .iter()
        .map(|x| {
            let d = x - &x0;
            (&d - &dir * d.dot(&dir)).norm()
        })
        .fold(0.0, f64::max))
}
