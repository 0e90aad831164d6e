//! Sprays and the geometric objects they induce at a phase point: nonlinear
//! connection, Berwald coefficients, curvature, Jacobi endomorphism, Ricci
//! scalar and the isotropy decomposition.
//!
//! Every derivative comes from a single jet evaluation of the spray
//! coefficients `G^i` at the point. Index conventions:
//!
//! * `N^i_j = ∂G^i/∂y^j`, stored row `i`, column `j`;
//! * `Γ^i_{jk} = ∂N^i_j/∂y^k`;
//! * `R^i_{jk} = δN^i_j/δx^k − δN^i_k/δx^j` with `δ/δx^k = ∂/∂x^k − N^m_k ∂/∂y^m`;
//! * `Φ^i_j = 2∂G^i/∂x^j − S(N^i_j) − N^i_k N^k_j`, and `Φ^i_j = R^i_{kj} y^k`.

use nalgebra::{DMatrix, DVector};

use crate::error::EvalError;
use crate::expr::Expression;
use crate::jet::{Jet, JetSpace};
use crate::scalar::Scalar;

/// A point `(x, y)` of the slit tangent bundle.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len(), "x and y must have the same dimension");
        PhasePoint { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same base point, fibre coordinates multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        PhasePoint { x: self.x.clone(), y: self.y.iter().map(|v| v * lambda).collect() }
    }
}

/// How the spray coefficients are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum SprayField {
    /// Explicit `G^1, …, G^n`.
    Coefficients(Vec<Expression>),
    /// Projective deformation of the flat spray: `G^i = P y^i`.
    Projective(Expression),
    /// Projective deformation with `P = S₀(g) = y^k ∂g/∂x^k`.
    Generator(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spray {
    n: usize,
    field: SprayField,
    domain: Vec<Expression>,
}

impl Spray {
    pub fn new(n: usize, g: Vec<Expression>) -> Self {
        assert_eq!(g.len(), n, "one coefficient per dimension");
        Spray { n, field: SprayField::Coefficients(g), domain: Vec::new() }
    }

    /// Parse `G^i` from text.
    pub fn parse(n: usize, g: &[&str]) -> Result<Self, crate::expr::ParseError> {
        let g = g.iter().map(|t| Expression::parse(t, n)).collect::<Result<Vec<_>, _>>()?;
        Ok(Spray::new(n, g))
    }

    pub fn flat(n: usize) -> Self {
        let zero = Expression::parse("0", n).expect("literal");
        Spray::new(n, vec![zero; n])
    }

    pub fn projective(n: usize, p: Expression) -> Self {
        Spray { n, field: SprayField::Projective(p), domain: Vec::new() }
    }

    pub fn generator(n: usize, g: Expression) -> Self {
        Spray { n, field: SprayField::Generator(g), domain: Vec::new() }
    }

    /// Each predicate must evaluate strictly positive for a point to be admitted.
    pub fn with_domain(mut self, predicates: Vec<Expression>) -> Self {
        self.domain = predicates;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &SprayField {
        &self.field
    }

    pub fn domain(&self) -> &[Expression] {
        &self.domain
    }

    pub fn admits(&self, p: &PhasePoint) -> bool {
        if p.y_norm() <= 0.0 {
            return false;
        }
        self.domain
            .iter()
            .all(|d| matches!(d.eval_f64(&p.x, &p.y), Ok(v) if v > 0.0))
    }

    /// `G^i` as jets of the given order at `p`.
    pub fn coefficient_jets(&self, p: &PhasePoint, order: usize) -> Result<Vec<Jet>, EvalError> {
        let n = self.n;
        match &self.field {
            SprayField::Coefficients(g) => {
                let seeds = Jet::lift_point(&p.x, &p.y, order)?;
                g.iter().map(|e| e.eval_seeds(&seeds)).collect()
            }
            SprayField::Projective(pf) => {
                let seeds = Jet::lift_point(&p.x, &p.y, order)?;
                let pj = pf.eval_seeds(&seeds)?;
                Ok((0..n).map(|i| &pj * &seeds[n + i]).collect())
            }
            SprayField::Generator(g) => {
                let seeds = Jet::lift_point(&p.x, &p.y, order + 1)?;
                let gj = g.eval_seeds(&seeds)?;
                let pj = s0_derivative(&gj, &seeds, n);
                Ok((0..n).map(|i| &pj * &seeds[n + i].truncate(order)).collect())
            }
        }
    }

    pub fn coefficients(&self, p: &PhasePoint) -> Result<Vec<f64>, EvalError> {
        Ok(self.coefficient_jets(p, 0)?.iter().map(Jet::value).collect())
    }
}

/// `S₀(f) = y^k ∂f/∂x^k`, one order lower than `f`.
pub(crate) fn s0_derivative(f: &Jet, seeds: &[Jet], n: usize) -> Jet {
    let order = f.order() - 1;
    let mut acc = Jet::constant(f.space(), order, 0.0);
    for k in 0..n {
        acc = &acc + &(&f.derivative(k) * &seeds[n + k].truncate(order));
    }
    acc
}

/// Jets of the spray's local objects at one point.
///
/// With `G` of order `K`: `N` has order `K−1`; `Φ`, `ρ`, `α` have order `K−2`.
#[derive(Debug, Clone)]
pub struct LocalJets {
    pub n: usize,
    pub g: Vec<Jet>,
    /// Row-major `N^i_j`.
    pub conn: Vec<Jet>,
    /// Row-major `Φ^i_j`.
    pub phi: Vec<Jet>,
    pub rho: Jet,
    pub alpha: Vec<Jet>,
    /// Fibre seeds truncated to the order of `Φ`.
    pub y: Vec<Jet>,
}

impl LocalJets {
    pub fn compute(spray: &Spray, p: &PhasePoint, g_order: usize) -> Result<Self, EvalError> {
        assert!(g_order >= 2, "Φ needs second derivatives of G");
        let n = spray.dim();
        let g = spray.coefficient_jets(p, g_order)?;
        let low = g_order - 2;
        let space = JetSpace::get(2 * n)?;
        let y: Vec<Jet> = (0..n).map(|k| Jet::variable(&space, low, p.y[k], n + k)).collect();

        let conn: Vec<Jet> = (0..n * n).map(|ij| g[ij / n].derivative(n + ij % n)).collect();
        let g_low: Vec<Jet> = g.iter().map(|j| j.truncate(low)).collect();
        let conn_low: Vec<Jet> = conn.iter().map(|j| j.truncate(low)).collect();

        let mut phi = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let nij = &conn[i * n + j];
                let mut acc = g[i].derivative(j).truncate(low).scale(2.0);
                for k in 0..n {
                    let dx = nij.derivative(k);
                    let dy = nij.derivative(n + k);
                    acc = &acc - &(&y[k] * &dx);
                    acc = &acc + &(&g_low[k] * &dy).scale(2.0);
                    acc = &acc - &(&conn_low[i * n + k] * &conn_low[k * n + j]);
                }
                phi.push(acc);
            }
        }

        let mut trace = Jet::constant(&space, low, 0.0);
        for i in 0..n {
            trace = &trace + &phi[i * n + i];
        }
        let rho = trace.scale(1.0 / (n as f64 - 1.0));

        let mut yy = Jet::constant(&space, low, 0.0);
        for yk in &y {
            yy = &yy + &(yk * yk);
        }
        let mut alpha = Vec::with_capacity(n);
        for j in 0..n {
            let mut num = &rho * &y[j];
            for i in 0..n {
                num = &num - &(&y[i] * &phi[i * n + j]);
            }
            alpha.push(num.checked_div(&yy)?);
        }

        Ok(LocalJets { n, g, conn, phi, rho, alpha, y })
    }

    pub fn phi_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.phi[i * self.n + j].value())
    }

    pub fn connection_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.conn[i * self.n + j].value())
    }

    /// `Γ^i_{jk}` from the connection jets (needs `N` of order ≥ 1).
    pub fn berwald(&self) -> Tensor3 {
        let n = self.n;
        Tensor3::from_fn(n, |i, j, k| self.conn[i * n + j].d1(n + k))
    }
}

/// A dense `n × n × n` array indexed `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { n, data }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionData {
    /// `N^i_j`.
    pub n: DMatrix<f64>,
    /// `Γ^i_{jk}`.
    pub gamma: Tensor3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    /// `R^i_{jk}`, without the ½ prefactor.
    pub r: Option<Tensor3>,
    pub phi: Option<DMatrix<f64>>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IsotropyData {
    pub rho: f64,
    pub alpha: Vec<f64>,
    pub residual: f64,
    pub isotropic: bool,
    /// `‖Φ‖_F`, kept for Ricci-degeneracy decisions.
    pub phi_norm: f64,
}

pub fn connection(s: &Spray, p: &PhasePoint) -> Result<ConnectionData, EvalError> {
    let n = s.dim();
    let g = s.coefficient_jets(p, 2)?;
    let conn: Vec<Jet> = (0..n * n).map(|ij| g[ij / n].derivative(n + ij % n)).collect();
    Ok(ConnectionData {
        n: DMatrix::from_fn(n, n, |i, j| conn[i * n + j].value()),
        gamma: Tensor3::from_fn(n, |i, j, k| conn[i * n + j].d1(n + k)),
    })
}

pub fn curvature(s: &Spray, p: &PhasePoint) -> Result<CurvatureData, EvalError> {
    let n = s.dim();
    let g = s.coefficient_jets(p, 2)?;
    let conn: Vec<Jet> = (0..n * n).map(|ij| g[ij / n].derivative(n + ij % n)).collect();
    // δN^i_j/δx^k
    let delta = |i: usize, j: usize, k: usize| {
        let nij = &conn[i * n + j];
        let mut v = nij.d1(k);
        for m in 0..n {
            v -= conn[m * n + k].value() * nij.d1(n + m);
        }
        v
    };
    let r = Tensor3::from_fn(n, |i, j, k| delta(i, j, k) - delta(i, k, j));
    Ok(CurvatureData { r: Some(r), phi: None, rho: None })
}

pub fn jacobi(s: &Spray, p: &PhasePoint) -> Result<CurvatureData, EvalError> {
    let local = LocalJets::compute(s, p, 2)?;
    Ok(CurvatureData { r: None, phi: Some(local.phi_matrix()), rho: Some(local.rho.value()) })
}

/// Relative scale used by every isotropy residual.
pub(crate) fn isotropy_scale(phi_norm: f64, rho: f64, n: usize) -> f64 {
    phi_norm.max(rho.abs() * (n as f64).sqrt()).max(1e-300)
}

/// Isotropy decomposition from already computed local jets.
pub fn isotropy_from_local(local: &LocalJets, y: &[f64], tol: f64) -> IsotropyData {
    let n = local.n;
    let rho = local.rho.value();
    let alpha: Vec<f64> = local.alpha.iter().map(Jet::value).collect();
    let phi = local.phi_matrix();
    let phi_norm = phi.norm();
    let mut e2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { rho } else { 0.0 };
            let e = phi[(i, j)] - delta + alpha[j] * y[i];
            e2 += e * e;
        }
    }
    let residual = e2.sqrt() / isotropy_scale(phi_norm, rho, n);
    IsotropyData { rho, alpha, residual, isotropic: residual <= tol, phi_norm }
}

pub fn isotropy(s: &Spray, p: &PhasePoint, tol: f64) -> Result<IsotropyData, EvalError> {
    let local = LocalJets::compute(s, p, 2)?;
    Ok(isotropy_from_local(&local, &p.y, tol))
}

/// `max_i |y^j ∂G^i/∂y^j − 2G^i| / (1 + |G^i|)`.
pub fn homogeneity_residual(s: &Spray, p: &PhasePoint) -> Result<f64, EvalError> {
    let n = s.dim();
    let g = s.coefficient_jets(p, 1)?;
    Ok(g.iter()
        .map(|gi| {
            let euler: f64 = (0..n).map(|j| p.y[j] * gi.d1(n + j)).sum();
            (euler - 2.0 * gi.value()).abs() / (1.0 + gi.value().abs())
        })
        .fold(0.0, f64::max))
}

/// Integrate `ẍ^i + 2G^i(x, ẋ) = 0` with classical RK4; returns the base points.
pub fn integrate_geodesic(
    s: &Spray,
    start: &PhasePoint,
    dt: f64,
    steps: usize,
) -> Result<Vec<DVector<f64>>, EvalError> {
    let n = s.dim();
    let rhs = |state: &DVector<f64>| -> Result<DVector<f64>, EvalError> {
        let p = PhasePoint::new(state.rows(0, n).iter().copied().collect(), state.rows(n, n).iter().copied().collect());
        let g = s.coefficients(&p)?;
        let mut d = DVector::zeros(2 * n);
        for i in 0..n {
            d[i] = p.y[i];
            d[n + i] = -2.0 * g[i];
        }
        Ok(d)
    };
    let mut state = DVector::from_iterator(2 * n, start.x.iter().chain(&start.y).copied());
    let mut out = vec![state.rows(0, n).into_owned()];
    for _ in 0..steps {
        let k1 = rhs(&state)?;
        let k2 = rhs(&(&state + &k1 * (dt / 2.0)))?;
        let k3 = rhs(&(&state + &k2 * (dt / 2.0)))?;
        let k4 = rhs(&(&state + &k3 * dt))?;
        state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(state.rows(0, n).into_owned());
    }
    Ok(out)
}
