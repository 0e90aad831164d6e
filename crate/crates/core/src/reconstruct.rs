//! Rebuild a Finsler function from `σ = α/ρ` by line integrals.
//!
//! * fibre potential `f₀(x, y) = ∫ σ_i(x, γ) dγ^i` from `y_ref` to `y`;
//! * horizontal form `ω₀ = d_h f₀`, which is basic when the tests pass;
//! * base potential `b(x) = ∫ ω₀(·, y_ref)` from `x_ref` to `x`;
//! * `F = exp(f₀ − b)` and `κ = ρ/F²`.
//!
//! Since `f₀(x, y_ref) = 0` for every `x`, `ω₀(x, y_ref) = −N^j_i σ_j`, so
//! `b` needs no nested quadrature. Derivatives of `f₀`, `b` and `F` come from
//! running the quadrature over jets: every path point is a jet in the phase
//! variables of the evaluation point, and `σ` is recomposed onto it.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{EvalError, PointError};
use crate::jet::{Jet, JetSpace};
use crate::metrizability::{numerical_rank, sigma_jets};
use crate::par::Execution;
use crate::quadrature::{GaussLegendre, Refinement};
use crate::scalar::Scalar;
use crate::spray::{LocalJets, PhasePoint, Spray};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberPath {
    /// Straight segment `y_ref → y`.
    #[default]
    Straight,
    /// Polygon `y_ref → w_1 → … → y`.
    Waypoints(Vec<Vec<f64>>),
    /// `ln(|y|/|y_ref|)` plus an arc of the unit sphere.
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub gauss_order: usize,
    pub panels_per_unit_length: f64,
    pub target_abs_tol: f64,
    pub max_panels: usize,
    pub x_ref: Vec<f64>,
    pub y_ref: Vec<f64>,
    pub fiber_path: FiberPath,
    /// Singular-value cutoff ratio for the energy Hessian.
    pub hessian_rtol: f64,
    pub execution: Execution,
}

impl QuadratureConfig {
    pub fn new(x_ref: Vec<f64>, y_ref: Vec<f64>) -> Self {
        QuadratureConfig {
            gauss_order: 16,
            panels_per_unit_length: 4.0,
            target_abs_tol: 1e-10,
            max_panels: 1 << 12,
            x_ref,
            y_ref,
            fiber_path: FiberPath::Straight,
            hessian_rtol: 1e-8,
            execution: Execution::default(),
        }
    }

    pub fn with_fiber_path(mut self, path: FiberPath) -> Self {
        self.fiber_path = path;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconError {
    #[error("quadrature node leaves the domain at x = {x:?}, y = {y:?}")]
    PathDomain { x: Vec<f64>, y: Vec<f64> },
    #[error("quadrature did not reach tolerance with {panels} panels (last change {change:e})")]
    Tolerance { panels: usize, change: f64 },
    #[error("fibre arc endpoints are antipodal; supply waypoints")]
    Antipodal,
    #[error("invalid reconstruction setup: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] PointError),
}

/// A curve `[0, 1] → ℝⁿ` whose points are jets.
enum Curve {
    Segment { a: Vec<Jet>, b: Vec<Jet> },
    /// `w/|w|` with `w = a + t(b − a)`, `a` and `b` unit.
    Arc { a: Vec<Jet>, b: Vec<Jet> },
}

impl Curve {
    fn length(&self) -> f64 {
        let (a, b) = match self {
            Curve::Segment { a, b } | Curve::Arc { a, b } => (a, b),
        };
        let chord = a.iter().zip(b).map(|(p, q)| (q.value() - p.value()).powi(2)).sum::<f64>().sqrt();
        match self {
            Curve::Segment { .. } => chord,
            Curve::Arc { .. } => 2.0 * (0.5 * chord).min(1.0).asin(),
        }
    }

    fn at(&self, t: f64) -> Result<(Vec<Jet>, Vec<Jet>), EvalError> {
        match self {
            Curve::Segment { a, b } => {
                let d: Vec<Jet> = a.iter().zip(b).map(|(p, q)| q - p).collect();
                let c = a.iter().zip(&d).map(|(p, dk)| p + &dk.scale(t)).collect();
                Ok((c, d))
            }
            Curve::Arc { a, b } => {
                let d: Vec<Jet> = a.iter().zip(b).map(|(p, q)| q - p).collect();
                let w: Vec<Jet> = a.iter().zip(&d).map(|(p, dk)| p + &dk.scale(t)).collect();
                let r2 = dot(&w, &w);
                let r = r2.sqrt()?;
                let wd = dot(&w, &d);
                let c = w.iter().map(|wk| wk.div(&r)).collect::<Result<Vec<_>, _>>()?;
                let r3 = &r2 * &r;
                let cdot = d
                    .iter()
                    .zip(&w)
                    .map(|(dk, wk)| Ok(dk.div(&r)? - (wk * &wd).div(&r3)?))
                    .collect::<Result<Vec<_>, EvalError>>()?;
                Ok((c, cdot))
            }
        }
    }
}

fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = a[0].lift(0.0);
    for (p, q) in a.iter().zip(b) {
        acc = &acc + &(p * q);
    }
    acc
}

/// Which coordinates the curve moves.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Moving {
    Fiber,
    Base,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizontalForm {
    pub omega: Vec<f64>,
    /// Max change of `ω₀` over probe fibre points at the same `x`.
    pub basic_residual: f64,
    /// Max antisymmetry defect of `∂ω₀_i/∂x^j` at `y_ref`.
    pub closed_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HessianKind {
    Regular,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCheck {
    pub point: PhasePoint,
    pub f: f64,
    /// `max_i |δF/δx^i| / F`.
    pub d_h: f64,
    /// Euler–Lagrange form of `E = F²`, relative to `E`.
    pub euler_lagrange: f64,
    /// `max_i |∂f₀/∂y^i − σ_i|·|y|`.
    pub gradient: f64,
    /// `max_λ |F(x, λy) − λF(x, y)| / (λF)` over `λ ∈ {0.5, 2}` where admitted.
    pub homogeneity: f64,
    pub hessian_rank: usize,
    pub hessian: HessianKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub max_d_h: f64,
    pub max_euler_lagrange: f64,
    pub max_gradient: f64,
    pub max_homogeneity: f64,
    pub min_hessian_rank: usize,
    pub hessian: HessianKind,
    pub points: Vec<PointCheck>,
}

/// Evaluators for the reconstructed Finsler function.
pub struct Reconstruction {
    spray: Spray,
    cfg: QuadratureConfig,
    gauss: GaussLegendre,
    base_cache: RwLock<HashMap<Vec<u64>, f64>>,
}

impl std::fmt::Debug for Reconstruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Reconstruction").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl Reconstruction {
    pub fn new(spray: Spray, cfg: QuadratureConfig) -> Result<Self, ReconError> {
        let n = spray.dim();
        if cfg.x_ref.len() != n || cfg.y_ref.len() != n {
            return Err(ReconError::Config(format!("x_ref and y_ref need {n} components")));
        }
        if cfg.gauss_order == 0 || !(cfg.target_abs_tol > 0.0) || !(cfg.panels_per_unit_length > 0.0) {
            return Err(ReconError::Config("gauss_order, panels and tolerance must be positive".into()));
        }
        if let FiberPath::Waypoints(w) = &cfg.fiber_path {
            if w.iter().any(|p| p.len() != n) {
                return Err(ReconError::Config(format!("waypoints need {n} components")));
            }
        }
        let anchor = PhasePoint::new(cfg.x_ref.clone(), cfg.y_ref.clone());
        if !spray.admits(&anchor) {
            return Err(ReconError::PathDomain { x: anchor.x, y: anchor.y });
        }
        let gauss = GaussLegendre::new(cfg.gauss_order);
        Ok(Reconstruction { spray, cfg, gauss, base_cache: RwLock::new(HashMap::new()) })
    }

    pub fn spray(&self) -> &Spray {
        &self.spray
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    fn n(&self) -> usize {
        self.spray.dim()
    }

    /// `σ` (fibre) or `ω₀(·, y_ref)` (base) as jets of `order` at `p`.
    fn form_at(&self, p: &PhasePoint, order: usize, moving: Moving) -> Result<Vec<Jet>, EvalError> {
        let local = LocalJets::compute(&self.spray, p, order + 2)?;
        let sigma = sigma_jets(&local)?;
        if moving == Moving::Fiber {
            return Ok(sigma);
        }
        let n = self.n();
        Ok((0..n)
            .map(|i| {
                let mut acc = sigma[0].lift(0.0);
                for (j, sj) in sigma.iter().enumerate() {
                    acc = &acc - &(&local.conn[j * n + i].truncate(order) * sj);
                }
                acc
            })
            .collect())
    }

    /// `∫ form·dc` along `curve` with the other coordinates held at `fixed`.
    fn integrate(&self, curve: &Curve, fixed: &[Jet], moving: Moving) -> Result<Jet, ReconError> {
        let n = self.n();
        let space = fixed[0].space().clone();
        let order = fixed[0].order();
        let dim = space.len(order);
        let fixed_values: Vec<f64> = fixed.iter().map(Jet::value).collect();
        let fixed_shifts: Vec<Jet> = fixed.iter().map(|j| j.add_scalar(-j.value())).collect();

        let mut integrand = |t: f64| -> Result<Vec<f64>, ReconError> {
            let (c, cdot) = curve.at(t).map_err(|e| self.point_error(&fixed_values, &[], moving, e))?;
            let c_values: Vec<f64> = c.iter().map(Jet::value).collect();
            let p = match moving {
                Moving::Fiber => PhasePoint::new(fixed_values.clone(), c_values.clone()),
                Moving::Base => PhasePoint::new(c_values.clone(), fixed_values.clone()),
            };
            if !self.spray.admits(&p) {
                return Err(ReconError::PathDomain { x: p.x, y: p.y });
            }
            let form = self.form_at(&p, order, moving).map_err(|e| PointError::at(&p, e))?;
            let moving_shifts = c.iter().map(|j| j.add_scalar(-j.value()));
            let shifts: Vec<Jet> = match moving {
                Moving::Fiber => fixed_shifts.iter().cloned().chain(moving_shifts).collect(),
                Moving::Base => moving_shifts.chain(fixed_shifts.iter().cloned()).collect(),
            };
            let mut acc = Jet::constant(&space, order, 0.0);
            for k in 0..n {
                acc = &acc + &(&form[k].compose(&shifts) * &cdot[k]);
            }
            Ok(acc.coeffs().to_vec())
        };

        let start = (curve.length() * self.cfg.panels_per_unit_length).ceil().max(1.0) as usize;
        match self.gauss.adaptive(start, self.cfg.max_panels, self.cfg.target_abs_tol, dim, &mut integrand) {
            Ok(r) => Ok(Jet::from_coeffs(&space, order, r.value)),
            Err(Refinement::Failed(e)) => Err(e),
            Err(Refinement::Budget { panels, change }) => Err(ReconError::Tolerance { panels, change }),
        }
    }

    fn point_error(&self, fixed: &[f64], moving_values: &[f64], moving: Moving, e: EvalError) -> ReconError {
        let other = if moving_values.is_empty() { vec![f64::NAN; fixed.len()] } else { moving_values.to_vec() };
        let (x, y) = match moving {
            Moving::Fiber => (fixed.to_vec(), other),
            Moving::Base => (other, fixed.to_vec()),
        };
        ReconError::Eval(PointError { x, y, source: e })
    }

    fn seeds(&self, p: &PhasePoint, order: usize) -> Result<(Arc<JetSpace>, Vec<Jet>), ReconError> {
        let seeds = Jet::lift_point(&p.x, &p.y, order).map_err(|e| PointError::at(p, e))?;
        Ok((seeds[0].space().clone(), seeds))
    }

    /// `f₀` as a jet of `order` in the phase variables at `p`.
    pub fn fiber_potential_jet(&self, p: &PhasePoint, order: usize) -> Result<Jet, ReconError> {
        let n = self.n();
        let (space, seeds) = self.seeds(p, order)?;
        let (xs, ys) = seeds.split_at(n);
        let constant = |v: &[f64]| v.iter().map(|c| Jet::constant(&space, order, *c)).collect::<Vec<_>>();
        let y_ref = constant(&self.cfg.y_ref);
        match &self.cfg.fiber_path {
            FiberPath::Straight => self.integrate(&Curve::Segment { a: y_ref, b: ys.to_vec() }, xs, Moving::Fiber),
            FiberPath::Waypoints(w) => {
                let mut nodes = vec![y_ref];
                nodes.extend(w.iter().map(|v| constant(v)));
                nodes.push(ys.to_vec());
                let mut acc = Jet::constant(&space, order, 0.0);
                for leg in nodes.windows(2) {
                    let curve = Curve::Segment { a: leg[0].clone(), b: leg[1].clone() };
                    acc = &acc + &self.integrate(&curve, xs, Moving::Fiber)?;
                }
                Ok(acc)
            }
            FiberPath::Split => {
                let err = |e| ReconError::from(PointError::at(p, e));
                let ref_norm = self.cfg.y_ref.iter().map(|v| v * v).sum::<f64>().sqrt();
                let norm = dot(ys, ys).sqrt().map_err(err)?;
                let a: Vec<Jet> = y_ref.iter().map(|j| j.scale(1.0 / ref_norm)).collect();
                let b = ys.iter().map(|j| j.div(&norm)).collect::<Result<Vec<_>, _>>().map_err(err)?;
                let antipodal = a.iter().zip(&b).all(|(p, q)| (p.value() + q.value()).abs() < 1e-12);
                if antipodal {
                    return Err(ReconError::Antipodal);
                }
                let radial = norm.ln().map_err(err)?.add_scalar(-ref_norm.ln());
                Ok(&radial + &self.integrate(&Curve::Arc { a, b }, xs, Moving::Fiber)?)
            }
        }
    }

    /// `b` as a jet of `order` in the phase variables at `p` (constant in `y`).
    pub fn base_potential_jet(&self, p: &PhasePoint, order: usize) -> Result<Jet, ReconError> {
        let n = self.n();
        let (space, seeds) = self.seeds(p, order)?;
        let x_ref = self.cfg.x_ref.iter().map(|c| Jet::constant(&space, order, *c)).collect();
        let y_ref: Vec<Jet> = self.cfg.y_ref.iter().map(|c| Jet::constant(&space, order, *c)).collect();
        self.integrate(&Curve::Segment { a: x_ref, b: seeds[..n].to_vec() }, &y_ref, Moving::Base)
    }

    pub fn fiber_potential(&self, x: &[f64], y: &[f64]) -> Result<f64, ReconError> {
        Ok(self.fiber_potential_jet(&PhasePoint::new(x.to_vec(), y.to_vec()), 0)?.value())
    }

    pub fn base_potential(&self, x: &[f64]) -> Result<f64, ReconError> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.base_cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let p = PhasePoint::new(x.to_vec(), self.cfg.y_ref.clone());
        let v = self.base_potential_jet(&p, 0)?.value();
        self.base_cache.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// `F = exp(f₀ − b)` as a jet.
    pub fn finsler_jet(&self, p: &PhasePoint, order: usize) -> Result<Jet, ReconError> {
        let f0 = self.fiber_potential_jet(p, order)?;
        let b = self.base_potential_jet(p, order)?;
        Ok((&f0 - &b).exp())
    }

    pub fn finsler(&self, x: &[f64]) -> impl Fn(&[f64]) -> Result<f64, ReconError> + '_ {
        let x = x.to_vec();
        move |y| Ok((self.fiber_potential(&x, y)? - self.base_potential(&x)?).exp())
    }

    /// `(F, κ)` at `(x, y)`.
    pub fn finsler_value(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64), ReconError> {
        let f = self.finsler(x)(y)?;
        let p = PhasePoint::new(x.to_vec(), y.to_vec());
        let local = LocalJets::compute(&self.spray, &p, 2).map_err(|e| PointError::at(&p, e))?;
        Ok((f, local.rho.value() / (f * f)))
    }

    pub fn horizontal_form(&self, x: &[f64], y: &[f64]) -> Result<HorizontalForm, ReconError> {
        let n = self.n();
        let omega_at = |y: &[f64]| -> Result<Vec<f64>, ReconError> {
            let p = PhasePoint::new(x.to_vec(), y.to_vec());
            let f0 = self.fiber_potential_jet(&p, 1)?;
            let local = LocalJets::compute(&self.spray, &p, 2).map_err(|e| PointError::at(&p, e))?;
            let sigma = sigma_jets(&local).map_err(|e| PointError::at(&p, e))?;
            Ok((0..n)
                .map(|i| {
                    let hn: f64 = (0..n).map(|j| local.conn[j * n + i].value() * sigma[j].value()).sum();
                    f0.d1(i) - hn
                })
                .collect())
        };
        let omega = omega_at(y)?;

        let mut probes = vec![self.cfg.y_ref.clone()];
        let mid: Vec<f64> = y.iter().zip(&self.cfg.y_ref).map(|(a, b)| 0.5 * (a + b)).collect();
        probes.push(mid);
        let mut basic_residual = 0.0f64;
        for q in probes {
            let pq = PhasePoint::new(x.to_vec(), q.clone());
            if !self.spray.admits(&pq) {
                continue;
            }
            let w = omega_at(&q)?;
            for (a, b) in omega.iter().zip(&w) {
                basic_residual = basic_residual.max((a - b).abs());
            }
        }

        let p_ref = PhasePoint::new(x.to_vec(), self.cfg.y_ref.clone());
        let w = self.form_at(&p_ref, 1, Moving::Base).map_err(|e| PointError::at(&p_ref, e))?;
        let mut closed_residual = 0.0f64;
        for i in 0..n {
            for k in i + 1..n {
                closed_residual = closed_residual.max((w[i].d1(k) - w[k].d1(i)).abs());
            }
        }
        Ok(HorizontalForm { omega, basic_residual, closed_residual })
    }

    pub fn check_point(&self, p: &PhasePoint) -> Result<PointCheck, ReconError> {
        let n = self.n();
        let f0 = self.fiber_potential_jet(p, 2)?;
        let b = self.base_potential_jet(p, 2)?;
        let f = (&f0 - &b).exp();
        let e = &f * &f;
        let fv = f.value();
        let ev = e.value();
        let y_norm = p.y_norm();

        let local = LocalJets::compute(&self.spray, p, 2).map_err(|e| PointError::at(p, e))?;
        let sigma = sigma_jets(&local).map_err(|e| PointError::at(p, e))?;
        let g = self.spray.coefficients(p).map_err(|e| PointError::at(p, e))?;
        let conn = local.connection_matrix();

        let second = |a: usize, b: usize| e.derivative(a).d1(b);
        let mut d_h = 0.0f64;
        let mut el = 0.0f64;
        let mut gradient = 0.0f64;
        for i in 0..n {
            let mut dh = f.d1(i);
            for j in 0..n {
                dh -= conn[(j, i)] * f.d1(n + j);
            }
            d_h = d_h.max(dh.abs() / fv);

            let mut horizontal = -e.d1(i);
            let mut vertical = e.d1(n + i);
            for k in 0..n {
                horizontal += p.y[k] * second(k, n + i) - 2.0 * g[k] * second(n + k, n + i);
                vertical -= p.y[k] * second(n + k, n + i);
            }
            el = el.max(horizontal.abs() / ev).max(vertical.abs() * y_norm / ev);

            gradient = gradient.max((f0.d1(n + i) - sigma[i].value()).abs() * y_norm);
        }

        let hessian = DMatrix::from_fn(n, n, |i, j| 0.5 * second(n + i, n + j));
        let hessian_rank = numerical_rank(&hessian, self.cfg.hessian_rtol);

        let mut homogeneity = 0.0f64;
        for lambda in [0.5, 2.0] {
            let q = p.scaled(lambda);
            if self.spray.admits(&q) {
                let fq = self.finsler(&q.x)(&q.y)?;
                homogeneity = homogeneity.max((fq - lambda * fv).abs() / (lambda * fv));
            }
        }

        Ok(PointCheck {
            point: p.clone(),
            f: fv,
            d_h,
            euler_lagrange: el,
            gradient,
            homogeneity,
            hessian_rank,
            hessian: if hessian_rank == n { HessianKind::Regular } else { HessianKind::Degenerate },
        })
    }

    pub fn verify(&self, points: &[PhasePoint]) -> Result<Verification, ReconError> {
        let checks = self.cfg.execution.try_map(points, |p| self.check_point(p))?;
        let max = |f: &dyn Fn(&PointCheck) -> f64| checks.iter().map(f).fold(0.0, f64::max);
        let min_rank = checks.iter().map(|c| c.hessian_rank).min().unwrap_or(0);
        Ok(Verification {
            max_d_h: max(&|c| c.d_h),
            max_euler_lagrange: max(&|c| c.euler_lagrange),
            max_gradient: max(&|c| c.gradient),
            max_homogeneity: max(&|c| c.homogeneity),
            min_hessian_rank: min_rank,
            hessian: if min_rank == self.n() { HessianKind::Regular } else { HessianKind::Degenerate },
            points: checks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use approx::assert_relative_eq;

    fn degenerate() -> Spray {
        Spray::parse(2, &["y1*y2", "0 - 0.5*y2^2"])
            .unwrap()
            .with_domain(vec![Expression::parse("y2", 2).unwrap()])
    }

    fn recon() -> Reconstruction {
        Reconstruction::new(degenerate(), QuadratureConfig::new(vec![0.0, 0.0], vec![1.0, 1.0])).unwrap()
    }

    #[test]
    fn degenerate_fiber_potential_is_log() {
        let r = recon();
        for (x, y) in [([0.3, -0.2], [0.5, 2.0]), ([1.0, 1.0], [-1.5, 0.25])] {
            assert_relative_eq!(r.fiber_potential(&x, &y).unwrap(), y[1].ln(), epsilon = 1e-12);
        }
        assert_eq!(r.fiber_potential(&[0.4, 0.1], &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_horizontal_and_base() {
        let r = recon();
        let h = r.horizontal_form(&[0.2, 0.7], &[0.4, 1.7]).unwrap();
        assert!(h.omega[0].abs() < 1e-12);
        assert_relative_eq!(h.omega[1], 1.0, epsilon = 1e-12);
        assert!(h.basic_residual < 1e-12);
        assert!(h.closed_residual < 1e-12);
        assert_relative_eq!(r.base_potential(&[0.5, -0.75]).unwrap(), -0.75, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_finsler_function() {
        let r = recon();
        let (x, y) = ([0.3, 0.6], [0.8, 1.9]);
        let (f, kappa) = r.finsler_value(&x, &y).unwrap();
        assert_relative_eq!(f, (-x[1]).exp() * y[1], max_relative = 1e-12);
        assert_relative_eq!(kappa, -2.0 * (2.0 * x[1]).exp(), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_verification() {
        let r = recon();
        let c = r.check_point(&PhasePoint::new(vec![0.1, -0.4], vec![0.6, 1.2])).unwrap();
        assert!(c.d_h < 1e-10);
        assert!(c.euler_lagrange < 1e-9);
        assert!(c.gradient < 1e-10);
        assert!(c.homogeneity < 1e-12);
        assert_eq!(c.hessian_rank, 1);
        assert_eq!(c.hessian, HessianKind::Degenerate);
    }

    #[test]
    fn path_leaving_domain_is_reported() {
        let r = recon();
        let err = r.fiber_potential(&[0.0, 0.0], &[1.0, -1.0]).unwrap_err();
        assert!(matches!(err, ReconError::PathDomain { .. }));
    }

    #[test]
    fn waypoints_and_split_agree_with_straight() {
        let straight = recon();
        let cfg = QuadratureConfig::new(vec![0.0, 0.0], vec![1.0, 1.0])
            .with_fiber_path(FiberPath::Waypoints(vec![vec![2.0, 0.5], vec![-1.0, 3.0]]));
        let bent = Reconstruction::new(degenerate(), cfg).unwrap();
        let cfg = QuadratureConfig::new(vec![0.0, 0.0], vec![1.0, 1.0]).with_fiber_path(FiberPath::Split);
        let split = Reconstruction::new(degenerate(), cfg).unwrap();
        let (x, y) = ([0.2, 0.1], [-0.7, 0.4]);
        let a = straight.fiber_potential(&x, &y).unwrap();
        assert!((a - bent.fiber_potential(&x, &y).unwrap()).abs() < 1e-10);
        assert!((a - split.fiber_potential(&x, &y).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_setup() {
        let bad = QuadratureConfig::new(vec![0.0], vec![1.0, 1.0]);
        assert!(matches!(Reconstruction::new(degenerate(), bad), Err(ReconError::Config(_))));
        let outside = QuadratureConfig::new(vec![0.0, 0.0], vec![1.0, -1.0]);
        assert!(matches!(Reconstruction::new(degenerate(), outside), Err(ReconError::PathDomain { .. })));
    }
}
