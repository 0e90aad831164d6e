//! Pointwise metrizability tests and their aggregation into a verdict.
//!
//! With `σ = α/ρ` the tested conditions at each sample are
//!
//! * isotropy of `Φ` and a non-vanishing Ricci scalar;
//! * `d_J σ = 0`: symmetry of `∂σ_i/∂y^j`;
//! * `D_h σ = 0`: `δσ_i/δx^k − σ_m Γ^m_{ki}` vanishes;
//! * regularity: the 2-form `dσ + 2(i_F σ) ∧ σ` has full rank `2n`;
//!
//! and, for constant curvature, `d_J α = 0`, `d_h ρ = 0` and full rank of
//! `dd_J ρ`. All residuals are 0-homogeneous in `y`.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::error::{EvalError, PointError};
use crate::jet::Jet;
use crate::par::Execution;
use crate::spray::{self, isotropy_from_local, LocalJets, PhasePoint, Spray, Tensor3};

/// `‖Φ‖_F ≤ FLAT_FLOOR·|y|²` counts as a flat point.
pub const FLAT_FLOOR: f64 = 1e-12;

/// Jet order of `G` used by `classify`: `σ` needs first and `ρ` second partials.
const G_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub tol_iso: f64,
    pub tol_ii: f64,
    pub tol_iii: f64,
    pub tol_unit: f64,
    pub tol_homogeneity: f64,
    /// Shared by the three constant-curvature residuals.
    pub tol_constant: f64,
    pub min_rho: f64,
    pub rank_rtol: f64,
    pub samples: Vec<PhasePoint>,
    pub execution: Execution,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            tol_iso: 1e-7,
            tol_ii: 1e-7,
            tol_iii: 1e-7,
            tol_unit: 1e-7,
            tol_homogeneity: 1e-9,
            tol_constant: 1e-7,
            min_rho: 1e-8,
            rank_rtol: 1e-8,
            samples: Vec::new(),
            execution: Execution::default(),
        }
    }
}

impl TestConfig {
    pub fn with_samples(samples: Vec<PhasePoint>) -> Self {
        TestConfig { samples, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("tol_iso", self.tol_iso),
            ("tol_ii", self.tol_ii),
            ("tol_iii", self.tol_iii),
            ("tol_unit", self.tol_unit),
            ("tol_homogeneity", self.tol_homogeneity),
            ("tol_constant", self.tol_constant),
            ("min_rho", self.min_rho),
            ("rank_rtol", self.rank_rtol),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// `σ_i = α_i/ρ` at a point with its first partials.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiBasicForm {
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `(i, j) ↦ ∂σ_i/∂x^j`.
    pub dsigma_dx: DMatrix<f64>,
    /// `(i, j) ↦ ∂σ_i/∂y^j`.
    pub dsigma_dy: DMatrix<f64>,
    /// `|σ_i y^i − 1|`.
    pub unit_residual: f64,
}

impl SemiBasicForm {
    pub fn from_jets(sigma: &[Jet], y: &[f64]) -> Self {
        let n = y.len();
        let values: Vec<f64> = sigma.iter().map(Jet::value).collect();
        let unit: f64 = values.iter().zip(y).map(|(s, v)| s * v).sum();
        SemiBasicForm {
            y: y.to_vec(),
            sigma: values,
            dsigma_dx: DMatrix::from_fn(n, n, |i, j| sigma[i].d1(j)),
            dsigma_dy: DMatrix::from_fn(n, n, |i, j| sigma[i].d1(n + j)),
            unit_residual: (unit - 1.0).abs(),
        }
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Why `ρ` is unusable at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Degeneracy {
    /// `Φ ≈ 0`.
    Flat,
    /// `ρ ≈ 0` with `Φ` bounded away from zero.
    RicciFlat,
}

pub fn ricci_degeneracy(rho: f64, phi_norm: f64, y_norm: f64, cfg: &TestConfig) -> Option<Degeneracy> {
    if phi_norm <= FLAT_FLOOR * y_norm * y_norm {
        Some(Degeneracy::Flat)
    } else if rho.abs() < cfg.min_rho * phi_norm {
        Some(Degeneracy::RicciFlat)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SigmaError {
    #[error("spray is not isotropic here (residual {0:e})")]
    NonIsotropic(f64),
    #[error("Ricci scalar degenerate ({0:?})")]
    RicciDegenerate(Degeneracy),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `σ = α/ρ` as jets, one per component.
pub fn sigma_jets(local: &LocalJets) -> Result<Vec<Jet>, EvalError> {
    local.alpha.iter().map(|a| a.checked_div(&local.rho)).collect()
}

pub fn sigma_at(s: &Spray, p: &PhasePoint, cfg: &TestConfig) -> Result<SemiBasicForm, SigmaError> {
    let local = LocalJets::compute(s, p, 3)?;
    let iso = isotropy_from_local(&local, &p.y, cfg.tol_iso);
    if !iso.isotropic {
        return Err(SigmaError::NonIsotropic(iso.residual));
    }
    if let Some(d) = ricci_degeneracy(iso.rho, iso.phi_norm, p.y_norm(), cfg) {
        return Err(SigmaError::RicciDegenerate(d));
    }
    Ok(SemiBasicForm::from_jets(&sigma_jets(&local)?, &p.y))
}

/// `max_{i<j} |∂σ_i/∂y^j − ∂σ_j/∂y^i| · |y|`.
pub fn condition_ii_residual(f: &SemiBasicForm) -> f64 {
    let n = f.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((f.dsigma_dy[(i, j)] - f.dsigma_dy[(j, i)]).abs());
        }
    }
    worst * f.y_norm()
}

fn condition_iii_from(f: &SemiBasicForm, conn: &DMatrix<f64>, gamma: &Tensor3) -> f64 {
    let n = f.dim();
    let mut worst = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            let mut d = f.dsigma_dx[(i, k)];
            for j in 0..n {
                d -= conn[(j, k)] * f.dsigma_dy[(i, j)];
            }
            for m in 0..n {
                d -= f.sigma[m] * gamma.get(m, k, i);
            }
            worst = worst.max(d.abs());
        }
    }
    let y = f.y_norm();
    y * worst / (1.0 + conn.norm() / y)
}

/// `|y| · max_{k,i} |δσ_i/δx^k − σ_m Γ^m_{ki}| / (1 + ‖N‖_F/|y|)`.
pub fn condition_iii_residual(s: &Spray, p: &PhasePoint, f: &SemiBasicForm) -> Result<f64, EvalError> {
    let c = spray::connection(s, p)?;
    Ok(condition_iii_from(f, &c.n, &c.gamma))
}

/// Numerical rank from singular values with cutoff `rtol·σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > rtol * smax).count()
}

/// `[[H, −Vᵀ], [V, 0]]` from an `n × n` pair of blocks.
fn block_two_form(h: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(h);
    m.view_mut((0, n), (n, n)).copy_from(&(-v.transpose()));
    m.view_mut((n, 0), (n, n)).copy_from(v);
    m
}

/// Coordinate matrix of `dσ + 2(i_F σ) ∧ σ`.
pub fn regularity_matrix(f: &SemiBasicForm, conn: &DMatrix<f64>) -> DMatrix<f64> {
    let n = f.dim();
    let s = &f.sigma;
    let tau: Vec<f64> = (0..n).map(|j| (0..n).map(|m| s[m] * conn[(m, j)]).sum()).collect();
    let v = DMatrix::from_fn(n, n, |j, i| f.dsigma_dy[(i, j)] + 2.0 * s[j] * s[i]);
    let h = DMatrix::from_fn(n, n, |j, i| {
        f.dsigma_dx[(i, j)] - f.dsigma_dx[(j, i)] + 2.0 * (tau[j] * s[i] - tau[i] * s[j])
    });
    block_two_form(&h, &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regularity {
    pub rank: usize,
    pub det_v: f64,
    pub sigma_max: f64,
}

impl Regularity {
    /// Full rank predicted from `det V` alone (`det M = det(V)²`).
    pub fn det_test(&self, n: usize, rtol: f64) -> bool {
        self.det_v.abs() > (rtol * self.sigma_max).powi(n as i32)
    }
}

fn regularity_from(f: &SemiBasicForm, conn: &DMatrix<f64>, cfg: &TestConfig) -> Regularity {
    let n = f.dim();
    let m = regularity_matrix(f, conn);
    let det_v = m.view((n, 0), (n, n)).determinant();
    let sigma_max = m.clone().singular_values().iter().copied().fold(0.0, f64::max);
    Regularity { rank: numerical_rank(&m, cfg.rank_rtol), det_v, sigma_max }
}

pub fn regularity_rank(
    s: &Spray,
    p: &PhasePoint,
    f: &SemiBasicForm,
    cfg: &TestConfig,
) -> Result<Regularity, EvalError> {
    let c = spray::connection(s, p)?;
    Ok(regularity_from(f, &c.n, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantCurvature {
    pub res_c1: f64,
    pub res_c2: f64,
    pub rank_c3: usize,
}

impl ConstantCurvature {
    pub fn passes(&self, n: usize, cfg: &TestConfig) -> bool {
        self.res_c1 <= cfg.tol_constant && self.res_c2 <= cfg.tol_constant && self.rank_c3 == 2 * n
    }
}

fn constant_from(local: &LocalJets, y: &[f64], cfg: &TestConfig) -> ConstantCurvature {
    let n = local.n;
    let rho = &local.rho;
    let rho_v = rho.value();
    let yy: f64 = y.iter().map(|v| v * v).sum();

    let mut c1 = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            c1 = c1.max((local.alpha[i].d1(n + j) - local.alpha[j].d1(n + i)).abs());
        }
    }
    let conn = local.connection_matrix();
    let mut c2 = 0.0f64;
    for i in 0..n {
        let mut d = rho.d1(i);
        for j in 0..n {
            d -= conn[(j, i)] * rho.d1(n + j);
        }
        c2 = c2.max(d.abs());
    }

    let second = |a: usize, b: usize| rho.derivative(a).d1(b);
    let v = DMatrix::from_fn(n, n, |j, i| second(n + j, n + i));
    let h = DMatrix::from_fn(n, n, |j, i| second(j, n + i) - second(i, n + j));
    let rank_c3 = numerical_rank(&block_two_form(&h, &v), cfg.rank_rtol);

    ConstantCurvature { res_c1: c1 * yy / rho_v.abs(), res_c2: c2 / rho_v.abs(), rank_c3 }
}

pub fn constant_curvature_tests(
    s: &Spray,
    p: &PhasePoint,
    cfg: &TestConfig,
) -> Result<ConstantCurvature, EvalError> {
    let local = LocalJets::compute(s, p, G_ORDER)?;
    Ok(constant_from(&local, &p.y, cfg))
}

/// Ordered so that failures come first, in ladder order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
pub enum Verdict {
    NotHomogeneous,
    NonIsotropic,
    RicciDegenerate,
    FailsConditionII,
    FailsConditionIII,
    MetrizableConstant,
    MetrizableScalar,
    RankDeficientCandidate,
}

impl Verdict {
    pub const ALL: [Verdict; 8] = [
        Verdict::NotHomogeneous,
        Verdict::NonIsotropic,
        Verdict::RicciDegenerate,
        Verdict::FailsConditionII,
        Verdict::FailsConditionIII,
        Verdict::MetrizableConstant,
        Verdict::MetrizableScalar,
        Verdict::RankDeficientCandidate,
    ];

    pub fn is_failure(self) -> bool {
        self < Verdict::MetrizableConstant
    }

    /// Verdicts after which a reconstruction is attempted.
    pub fn admits_reconstruction(self) -> bool {
        !self.is_failure()
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::NotHomogeneous => "NotHomogeneous",
            Verdict::NonIsotropic => "NonIsotropic",
            Verdict::RicciDegenerate => "RicciDegenerate",
            Verdict::FailsConditionII => "FailsConditionII",
            Verdict::FailsConditionIII => "FailsConditionIII",
            Verdict::MetrizableConstant => "MetrizableConstant",
            Verdict::MetrizableScalar => "MetrizableScalar",
            Verdict::RankDeficientCandidate => "RankDeficientCandidate",
        }
    }

    pub fn from_name(name: &str) -> Option<Verdict> {
        Verdict::ALL.into_iter().find(|v| v.name() == name)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything measured at one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEvidence {
    pub point: PhasePoint,
    pub homogeneity: f64,
    pub isotropy: f64,
    pub rho: f64,
    pub phi_norm: f64,
    pub degeneracy: Option<Degeneracy>,
    pub unit: Option<f64>,
    pub res_ii: Option<f64>,
    pub res_iii: Option<f64>,
    pub regularity: Option<Regularity>,
    pub constant: Option<ConstantCurvature>,
    pub stage: Verdict,
}

pub fn evaluate_point(s: &Spray, p: &PhasePoint, cfg: &TestConfig) -> Result<PointEvidence, EvalError> {
    if !s.admits(p) {
        return Err(EvalError::NotAdmitted);
    }
    let n = s.dim();
    let homogeneity = spray::homogeneity_residual(s, p)?;
    let local = LocalJets::compute(s, p, G_ORDER)?;
    let iso = isotropy_from_local(&local, &p.y, cfg.tol_iso);
    let degeneracy = ricci_degeneracy(iso.rho, iso.phi_norm, p.y_norm(), cfg);

    let mut ev = PointEvidence {
        point: p.clone(),
        homogeneity,
        isotropy: iso.residual,
        rho: iso.rho,
        phi_norm: iso.phi_norm,
        degeneracy,
        unit: None,
        res_ii: None,
        res_iii: None,
        regularity: None,
        constant: None,
        stage: Verdict::NotHomogeneous,
    };
    if degeneracy.is_none() {
        let form = SemiBasicForm::from_jets(&sigma_jets(&local)?, &p.y);
        let conn = local.connection_matrix();
        ev.unit = Some(form.unit_residual);
        ev.res_ii = Some(condition_ii_residual(&form));
        ev.res_iii = Some(condition_iii_from(&form, &conn, &local.berwald()));
        ev.regularity = Some(regularity_from(&form, &conn, cfg));
        ev.constant = Some(constant_from(&local, &p.y, cfg));
    }
    ev.stage = point_stage(&ev, n, cfg);
    Ok(ev)
}

fn point_stage(ev: &PointEvidence, n: usize, cfg: &TestConfig) -> Verdict {
    if !(ev.homogeneity <= cfg.tol_homogeneity) {
        return Verdict::NotHomogeneous;
    }
    if !(ev.isotropy <= cfg.tol_iso) {
        return Verdict::NonIsotropic;
    }
    if ev.degeneracy.is_some() {
        return Verdict::RicciDegenerate;
    }
    if !(ev.res_ii.unwrap_or(f64::NAN) <= cfg.tol_ii) {
        return Verdict::FailsConditionII;
    }
    if !(ev.res_iii.unwrap_or(f64::NAN) <= cfg.tol_iii) {
        return Verdict::FailsConditionIII;
    }
    if ev.constant.is_some_and(|c| c.passes(n, cfg)) {
        return Verdict::MetrizableConstant;
    }
    if ev.regularity.is_some_and(|r| r.rank == 2 * n) {
        Verdict::MetrizableScalar
    } else {
        Verdict::RankDeficientCandidate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub argmax: Option<PhasePoint>,
    pub count: usize,
}

impl ResidualStats {
    pub fn collect<'a>(items: impl Iterator<Item = (&'a PhasePoint, Option<f64>)>) -> Self {
        let mut stats = ResidualStats { max: 0.0, mean: 0.0, argmax: None, count: 0 };
        let mut sum = 0.0;
        for (p, v) in items {
            let Some(v) = v else { continue };
            stats.count += 1;
            sum += v;
            if stats.argmax.is_none() || v > stats.max || v.is_nan() {
                stats.max = v;
                stats.argmax = Some(p.clone());
            }
        }
        if stats.count > 0 {
            stats.mean = sum / stats.count as f64;
        }
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub homogeneity: ResidualStats,
    pub isotropy: ResidualStats,
    pub unit: ResidualStats,
    pub condition_ii: ResidualStats,
    pub condition_iii: ResidualStats,
    pub c1: ResidualStats,
    pub c2: ResidualStats,
    pub ranks: Vec<Option<usize>>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub points: Vec<PointEvidence>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("no sample points")]
    NoSamples,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Point(#[from] PointError),
}

pub fn classify(s: &Spray, cfg: &TestConfig) -> Result<ClassificationReport, ClassifyError> {
    cfg.validate().map_err(ClassifyError::Config)?;
    if cfg.samples.is_empty() {
        return Err(ClassifyError::NoSamples);
    }
    let points = cfg
        .execution
        .try_map(&cfg.samples, |p| evaluate_point(s, p, cfg).map_err(|e| PointError::at(p, e)))?;
    Ok(aggregate(s.dim(), points, cfg))
}

pub fn aggregate(n: usize, points: Vec<PointEvidence>, cfg: &TestConfig) -> ClassificationReport {
    let total = points.len();
    let stats = |f: &dyn Fn(&PointEvidence) -> Option<f64>| {
        ResidualStats::collect(points.iter().map(|e| (&e.point, f(e))))
    };
    let homogeneity = stats(&|e| Some(e.homogeneity));
    let isotropy = stats(&|e| Some(e.isotropy));
    let unit = stats(&|e| e.unit);
    let condition_ii = stats(&|e| e.res_ii);
    let condition_iii = stats(&|e| e.res_iii);
    let c1 = stats(&|e| e.constant.map(|c| c.res_c1));
    let c2 = stats(&|e| e.constant.map(|c| c.res_c2));
    let ranks: Vec<Option<usize>> = points.iter().map(|e| e.regularity.map(|r| r.rank)).collect();

    let worst_failure = points.iter().map(|e| e.stage).filter(|v| v.is_failure()).min();
    let verdict = match worst_failure {
        Some(v) => v,
        None if points.iter().all(|e| e.stage == Verdict::MetrizableConstant) => Verdict::MetrizableConstant,
        None if ranks.iter().all(|r| *r == Some(2 * n)) => Verdict::MetrizableScalar,
        None => Verdict::RankDeficientCandidate,
    };

    let mut notes = Vec::new();
    let count = |d: Degeneracy| points.iter().filter(|e| e.degeneracy == Some(d)).count();
    let flat = count(Degeneracy::Flat);
    if flat > 0 {
        notes.push(format!("flat: Φ≈0 at {flat} of {total} points (vacuously metrizable)"));
    }
    let ricci_flat = count(Degeneracy::RicciFlat);
    if ricci_flat > 0 {
        notes.push(format!("ρ≈0, ‖Φ‖>0 at {ricci_flat} of {total} points (not metrizable)"));
    }
    let off_unit = points.iter().filter(|e| e.unit.is_some_and(|u| !(u <= cfg.tol_unit))).count();
    if off_unit > 0 {
        notes.push(format!("i_Sσ deviates from 1 beyond tol_unit at {off_unit} points"));
    }
    let deficient = ranks.iter().filter(|r| r.is_some_and(|r| r < 2 * n)).count();
    if deficient > 0 {
        notes.push(format!("regularity rank below {} at {deficient} of {total} points", 2 * n));
    }

    ClassificationReport {
        verdict,
        homogeneity,
        isotropy,
        unit,
        condition_ii,
        condition_iii,
        c1,
        c2,
        ranks,
        notes,
        points,
    }
}
