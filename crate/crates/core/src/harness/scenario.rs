//! Scenario documents: the JSON schema and its validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expression, ParseError};
use crate::jet::MAX_VARS;
use crate::metrizability::{TestConfig, Verdict};
use crate::reconstruct::{FiberPath, QuadratureConfig};
use crate::spray::{PhasePoint, Spray};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spray,
    Projective,
    Generator,
}

/// `[lo, hi]` for every axis, or one interval per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predicates {
    One(String),
    Many(Vec<String>),
}

impl Predicates {
    fn texts(&self) -> Vec<&str> {
        match self {
            Predicates::One(s) => vec![s.as_str()],
            Predicates::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x_box: BoxSpec,
    pub y_box: BoxSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicates: Option<Predicates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_norm: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { count: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_iso: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_ii: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_iii: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_unit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_homogeneity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_rtol: Option<f64>,
}

impl ToleranceSpec {
    fn fields(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("tol_iso", self.tol_iso),
            ("tol_ii", self.tol_ii),
            ("tol_iii", self.tol_iii),
            ("tol_unit", self.tol_unit),
            ("tol_homogeneity", self.tol_homogeneity),
            ("tol_constant", self.tol_constant),
            ("min_rho", self.min_rho),
            ("rank_rtol", self.rank_rtol),
        ]
    }

    pub fn apply(&self, cfg: &mut TestConfig) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.tol_iso, self.tol_iso);
        set(&mut cfg.tol_ii, self.tol_ii);
        set(&mut cfg.tol_iii, self.tol_iii);
        set(&mut cfg.tol_unit, self.tol_unit);
        set(&mut cfg.tol_homogeneity, self.tol_homogeneity);
        set(&mut cfg.tol_constant, self.tol_constant);
        set(&mut cfg.min_rho, self.min_rho);
        set(&mut cfg.rank_rtol, self.rank_rtol);
    }

    /// Overrides the residual tolerances (not `min_rho` or `rank_rtol`).
    pub fn set_all(&mut self, tol: f64) {
        self.tol_iso = Some(tol);
        self.tol_ii = Some(tol);
        self.tol_iii = Some(tol);
        self.tol_unit = Some(tol);
        self.tol_constant = Some(tol);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PointSpec {
    pub fn to_point(&self) -> PhasePoint {
        PhasePoint::new(self.x.clone(), self.y.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauss_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panels_per_unit_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_panels: Option<usize>,
    pub x_ref: Vec<f64>,
    pub y_ref: Vec<f64>,
    #[serde(default)]
    pub fiber_path: FiberPath,
    /// Gauge anchor; defaults to `(x_ref, y_ref)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<PointSpec>,
    /// Held-out comparison points.
    #[serde(default = "default_check_points")]
    pub check_points: usize,
    /// Points that get the full verification record.
    #[serde(default = "default_verify_points")]
    pub verify_points: usize,
}

fn default_check_points() -> usize {
    100
}

fn default_verify_points() -> usize {
    10
}

impl ReconstructionSpec {
    pub fn quadrature(&self) -> QuadratureConfig {
        let mut q = QuadratureConfig::new(self.x_ref.clone(), self.y_ref.clone());
        if let Some(v) = self.gauss_order {
            q.gauss_order = v;
        }
        if let Some(v) = self.panels_per_unit_length {
            q.panels_per_unit_length = v;
        }
        if let Some(v) = self.target_abs_tol {
            q.target_abs_tol = v;
        }
        if let Some(v) = self.max_panels {
            q.max_panels = v;
        }
        q.fiber_path = self.fiber_path.clone();
        q
    }

    pub fn anchor_point(&self) -> PhasePoint {
        match &self.anchor {
            Some(a) => a.to_point(),
            None => PhasePoint::new(self.x_ref.clone(), self.y_ref.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Alternative to `F`: the expected `F²`.
    #[serde(rename = "F2", default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
    #[serde(rename = "tol_F", default = "default_tol")]
    pub tol_f: f64,
    #[serde(default = "default_tol")]
    pub tol_kappa: f64,
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Lattice points per base axis.
    #[serde(default = "default_x_steps")]
    pub x_steps: usize,
    /// Fibre directions per base point.
    #[serde(default = "default_y_dirs")]
    pub y_dirs: usize,
    /// `|y|` of every fibre point.
    #[serde(default = "default_y_scale")]
    pub y_scale: f64,
}

fn default_x_steps() -> usize {
    5
}

fn default_y_dirs() -> usize {
    8
}

fn default_y_scale() -> f64 {
    1.0
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { path: None, x_steps: 5, y_dirs: 8, y_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

/// The scenario document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    pub mode: Mode,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<String>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<String>,
    #[serde(rename = "g", default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub domain: DomainSpec,
    #[serde(default)]
    pub samples: SampleSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("expression error at {path}: {source}")]
    Expression {
        path: String,
        #[source]
        source: ParseError,
    },
}

impl ScenarioError {
    /// Field path of a schema or expression error.
    pub fn path(&self) -> Option<&str> {
        match self {
            ScenarioError::Io { .. } => None,
            ScenarioError::Schema { path, .. } | ScenarioError::Expression { path, .. } => Some(path),
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema { path: path.into(), message: message.into() }
}

/// The expected Finsler function, given as `F` or as `F²`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpectedFinsler {
    F(Expression),
    F2(Expression),
}

impl ExpectedFinsler {
    /// Expected `F` at a point.
    pub fn value(&self, p: &PhasePoint) -> Result<f64, crate::error::EvalError> {
        match self {
            ExpectedFinsler::F(e) => e.eval_f64(&p.x, &p.y),
            ExpectedFinsler::F2(e) => Ok(e.eval_f64(&p.x, &p.y)?.abs().sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub verdict: Option<Verdict>,
    pub finsler: Option<ExpectedFinsler>,
    pub kappa: Option<Expression>,
    pub tol_f: f64,
    pub tol_kappa: f64,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub spray: Spray,
    pub x_box: Vec<[f64; 2]>,
    pub y_box: Vec<[f64; 2]>,
    pub y_norm: Option<[f64; 2]>,
    pub expected: Option<Expected>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Scenario::from_json(&text)
}

fn join(parent: &str, child: &str) -> String {
    if parent.is_empty() || parent == "." {
        child.to_string()
    } else {
        format!("{parent}.{child}")
    }
}

fn parse_spec(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let path = match message.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            Some(field) => join(&path, field),
            None if path == "." => String::new(),
            None => path,
        };
        schema(path, message)
    })
}

fn parse_expr(text: &str, n: usize, path: impl Into<String>) -> Result<Expression, ScenarioError> {
    Expression::parse(text, n).map_err(|source| ScenarioError::Expression { path: path.into(), source })
}

fn check_box(b: &BoxSpec, n: usize, path: &str) -> Result<Vec<[f64; 2]>, ScenarioError> {
    let axes = match b {
        BoxSpec::Uniform(iv) => vec![*iv; n],
        BoxSpec::PerAxis(v) if v.len() == n => v.clone(),
        BoxSpec::PerAxis(v) => return Err(schema(path, format!("expected {n} intervals, got {}", v.len()))),
    };
    for [lo, hi] in &axes {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(schema(path, format!("degenerate interval [{lo}, {hi}]")));
        }
    }
    Ok(axes)
}

fn check_len(v: &[f64], n: usize, path: &str) -> Result<(), ScenarioError> {
    if v.len() != n {
        return Err(schema(path, format!("expected {n} components, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(schema(path, "components must be finite"));
    }
    Ok(())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Scenario::from_spec(parse_spec(text)?)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, ScenarioError> {
        Scenario::from_json(&value.to_string())
    }

    pub fn from_spec(spec: ScenarioSpec) -> Result<Self, ScenarioError> {
        let n = spec.n;
        if n < 2 || 2 * n > MAX_VARS {
            return Err(schema("n", format!("dimension must be in 2..={}, got {n}", MAX_VARS / 2)));
        }
        let absent = |present: bool, key: &str| {
            if present {
                Err(schema(key, format!("not allowed in {:?} mode", spec.mode).to_lowercase()))
            } else {
                Ok(())
            }
        };
        let spray = match spec.mode {
            Mode::Spray => {
                absent(spec.factor.is_some(), "P")?;
                absent(spec.generator.is_some(), "g")?;
                let g = spec.coefficients.as_ref().ok_or_else(|| schema("G", "required in spray mode"))?;
                if g.len() != n {
                    return Err(schema("G", format!("expected {n} coefficients, got {}", g.len())));
                }
                let g = g
                    .iter()
                    .enumerate()
                    .map(|(i, t)| parse_expr(t, n, format!("G[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Spray::new(n, g)
            }
            Mode::Projective => {
                absent(spec.coefficients.is_some(), "G")?;
                absent(spec.generator.is_some(), "g")?;
                let p = spec.factor.as_ref().ok_or_else(|| schema("P", "required in projective mode"))?;
                Spray::projective(n, parse_expr(p, n, "P")?)
            }
            Mode::Generator => {
                absent(spec.coefficients.is_some(), "G")?;
                absent(spec.factor.is_some(), "P")?;
                let g = spec.generator.as_ref().ok_or_else(|| schema("g", "required in generator mode"))?;
                Spray::generator(n, parse_expr(g, n, "g")?)
            }
        };

        let x_box = check_box(&spec.domain.x_box, n, "domain.x_box")?;
        let y_box = check_box(&spec.domain.y_box, n, "domain.y_box")?;
        if let Some([lo, hi]) = spec.domain.y_norm {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(schema("domain.y_norm", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
            }
        }
        let predicates = match &spec.domain.predicates {
            None => Vec::new(),
            Some(p) => p
                .texts()
                .iter()
                .enumerate()
                .map(|(i, t)| parse_expr(t, n, format!("domain.predicates[{i}]")))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let spray = spray.with_domain(predicates);

        if spec.samples.count == 0 {
            return Err(schema("samples.count", "must be at least 1"));
        }
        for (name, v) in spec.tolerances.fields() {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(schema(format!("tolerances.{name}"), "must be positive"));
                }
            }
        }

        if let Some(r) = &spec.reconstruction {
            check_len(&r.x_ref, n, "reconstruction.x_ref")?;
            check_len(&r.y_ref, n, "reconstruction.y_ref")?;
            if r.gauss_order == Some(0) {
                return Err(schema("reconstruction.gauss_order", "must be at least 1"));
            }
            for (name, v) in [("panels_per_unit_length", r.panels_per_unit_length), ("target_abs_tol", r.target_abs_tol)] {
                if v.is_some_and(|v| !(v > 0.0)) {
                    return Err(schema(format!("reconstruction.{name}"), "must be positive"));
                }
            }
            if let FiberPath::Waypoints(w) = &r.fiber_path {
                for (i, p) in w.iter().enumerate() {
                    check_len(p, n, &format!("reconstruction.fiber_path.waypoints[{i}]"))?;
                }
            }
            let reference = PhasePoint::new(r.x_ref.clone(), r.y_ref.clone());
            if !spray.admits(&reference) {
                return Err(schema("reconstruction.y_ref", "reference point is outside the domain"));
            }
            if let Some(a) = &r.anchor {
                check_len(&a.x, n, "reconstruction.anchor.x")?;
                check_len(&a.y, n, "reconstruction.anchor.y")?;
                if !spray.admits(&a.to_point()) {
                    return Err(schema("reconstruction.anchor", "anchor point is outside the domain"));
                }
            }
        }

        let expected = match &spec.expected {
            None => None,
            Some(e) => {
                let verdict = match &e.verdict {
                    None => None,
                    Some(v) => Some(
                        Verdict::from_name(v)
                            .ok_or_else(|| schema("expected.verdict", format!("unknown verdict {v:?}")))?,
                    ),
                };
                let finsler = match (&e.f, &e.f2) {
                    (Some(_), Some(_)) => return Err(schema("expected", "give F or F2, not both")),
                    (Some(f), None) => Some(ExpectedFinsler::F(parse_expr(f, n, "expected.F")?)),
                    (None, Some(f)) => Some(ExpectedFinsler::F2(parse_expr(f, n, "expected.F2")?)),
                    (None, None) => None,
                };
                let kappa = e.kappa.as_ref().map(|k| parse_expr(k, n, "expected.kappa")).transpose()?;
                for (name, v) in [("tol_F", e.tol_f), ("tol_kappa", e.tol_kappa)] {
                    if !(v > 0.0) {
                        return Err(schema(format!("expected.{name}"), "must be positive"));
                    }
                }
                Some(Expected { verdict, finsler, kappa, tol_f: e.tol_f, tol_kappa: e.tol_kappa })
            }
        };

        if let Some(g) = &spec.outputs.grid {
            if g.x_steps == 0 || g.y_dirs == 0 || !(g.y_scale > 0.0) {
                return Err(schema("outputs.grid", "x_steps, y_dirs and y_scale must be positive"));
            }
        }

        let y_norm = spec.domain.y_norm;
        Ok(Scenario { spec, spray, x_box, y_box, y_norm, expected })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn test_config(&self) -> TestConfig {
        let mut cfg = TestConfig::default();
        self.spec.tolerances.apply(&mut cfg);
        cfg
    }

    /// Inside the spray domain and the sampling shell `|y| ∈ y_norm`.
    pub fn admits(&self, p: &PhasePoint) -> bool {
        if let Some([lo, hi]) = self.y_norm {
            let r = p.y_norm();
            if !(r >= lo && r <= hi) {
                return false;
            }
        }
        self.spray.admits(p)
    }
}
