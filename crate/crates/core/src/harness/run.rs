//! Running a scenario end to end: classify, reconstruct, compare.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::registry::{self, RegistryError};
use super::sampling::{held_out_seed, sample_points, sample_with, SamplingExhausted};
use super::scenario::{Scenario, ScenarioError, ScenarioSpec};
use crate::error::PointError;
use crate::metrizability::{classify, evaluate_point, ClassificationReport, ClassifyError, Verdict};
use crate::par::Execution;
use crate::reconstruct::{HorizontalForm, ReconError, Reconstruction, Verification};
use crate::spray::PhasePoint;

pub const TOOL: &str = "spraymetric";

/// Below this `|κ_expected|` the κ error is absolute.
const KAPPA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructMode {
    Never,
    /// Only when the scenario has a `reconstruction` section.
    IfAvailable,
    /// Missing section is an input error.
    Required,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub reconstruct: ReconstructMode,
    pub timings: bool,
    pub execution: Execution,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            reconstruct: ReconstructMode::IfAvailable,
            timings: false,
            execution: Execution::default(),
            seed: None,
            samples: None,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Sampling(#[from] SamplingExhausted),
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("classification failed: {0}")]
    Classify(ClassifyError),
    #[error("reconstruction failed: {0}")]
    Reconstruct(ReconError),
    #[error("evaluation failed {0}")]
    Point(#[from] PointError),
}

impl RunError {
    /// 2 for bad input, 3 for numeric or domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_)
            | RunError::Registry(_)
            | RunError::Sampling(_)
            | RunError::Config(_)
            | RunError::Io(_)
            | RunError::Classify(ClassifyError::Config(_) | ClassifyError::NoSamples)
            | RunError::Reconstruct(ReconError::Config(_)) => 2,
            RunError::Classify(ClassifyError::Point(_)) | RunError::Reconstruct(_) | RunError::Point(_) => 3,
        }
    }
}

impl From<ClassifyError> for RunError {
    fn from(e: ClassifyError) -> Self {
        RunError::Classify(e)
    }
}

impl From<ReconError> for RunError {
    fn from(e: ReconError) -> Self {
        RunError::Reconstruct(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionSummary {
    pub anchor: PhasePoint,
    /// `F_expected / F_reconstructed` at the anchor; 1 without an expected `F`.
    pub gauge: f64,
    /// Horizontal form at the anchor after the basic correction.
    pub horizontal: HorizontalForm,
    pub verification: Verification,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub points: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_max_rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_argmax: Option<PhasePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_max_rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_argmax: Option<PhasePoint>,
    pub tol_f: f64,
    pub tol_kappa: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub sampling_ms: f64,
    pub classify_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruct_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: ScenarioSpec,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_verdict: Option<Verdict>,
    pub classification: ClassificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub matches: bool,
    pub mismatches: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    /// 0 when everything matched, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.matches {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Applies `--seed`, `--samples` and `--tol` to the scenario document.
pub fn apply_overrides(sc: &mut Scenario, opts: &RunOptions) -> Result<(), RunError> {
    if let Some(seed) = opts.seed {
        sc.spec.samples.seed = seed;
    }
    if let Some(count) = opts.samples {
        if count == 0 {
            return Err(RunError::Config("--samples must be at least 1".into()));
        }
        sc.spec.samples.count = count;
    }
    if let Some(tol) = opts.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(RunError::Config("--tol must be positive".into()));
        }
        sc.spec.tolerances.set_all(tol);
    }
    Ok(())
}

/// The reconstruction together with its gauge factor.
pub struct Gauged {
    pub recon: Reconstruction,
    pub anchor: PhasePoint,
    pub gauge: f64,
}

impl Gauged {
    /// Gauge-fixed `(F, κ)`.
    pub fn value(&self, p: &PhasePoint) -> Result<(f64, f64), ReconError> {
        let (f, kappa) = self.recon.finsler_value(&p.x, &p.y)?;
        Ok((self.gauge * f, kappa / (self.gauge * self.gauge)))
    }
}

pub fn build_reconstruction(sc: &Scenario, execution: Execution) -> Result<Option<Gauged>, RunError> {
    let Some(rs) = &sc.spec.reconstruction else {
        return Ok(None);
    };
    let mut q = rs.quadrature();
    q.execution = execution;
    let recon = Reconstruction::new(sc.spray.clone(), q)?;
    let anchor = rs.anchor_point();
    let (f_anchor, _) = recon.finsler_value(&anchor.x, &anchor.y)?;
    let gauge = match sc.expected.as_ref().and_then(|e| e.finsler.as_ref()) {
        Some(fe) => {
            let target = fe.value(&anchor).map_err(|e| PointError::at(&anchor, e))?;
            if !(f_anchor.is_finite() && f_anchor != 0.0 && target.is_finite()) {
                return Err(RunError::Config(format!(
                    "cannot fix the gauge at the anchor: F_rec = {f_anchor}, F_expected = {target}"
                )));
            }
            target / f_anchor
        }
        None => 1.0,
    };
    Ok(Some(Gauged { recon, anchor, gauge }))
}

fn compare(sc: &Scenario, g: &Gauged, execution: Execution) -> Result<Option<Comparison>, RunError> {
    let Some(exp) = &sc.expected else {
        return Ok(None);
    };
    if exp.finsler.is_none() && exp.kappa.is_none() {
        return Ok(None);
    }
    let rs = sc.spec.reconstruction.as_ref().expect("reconstruction section present");
    let seed = held_out_seed(sc.spec.samples.seed);
    let pts = sample_with(sc, rs.check_points, seed)?;
    let rows = execution.try_map(&pts, |p| -> Result<(Option<f64>, Option<f64>), RunError> {
        let (f, kappa) = g.value(p)?;
        let ef = match &exp.finsler {
            Some(fe) => {
                let want = fe.value(p).map_err(|e| PointError::at(p, e))?;
                Some((f - want).abs() / want.abs())
            }
            None => None,
        };
        let ek = match &exp.kappa {
            Some(ke) => {
                let want = ke.eval_f64(&p.x, &p.y).map_err(|e| PointError::at(p, e))?;
                let scale = if want.abs() > KAPPA_FLOOR { want.abs() } else { 1.0 };
                Some((kappa - want).abs() / scale)
            }
            None => None,
        };
        Ok((ef, ek))
    })?;
    let worst = |pick: &dyn Fn(&(Option<f64>, Option<f64>)) -> Option<f64>| {
        let mut best: Option<(f64, &PhasePoint)> = None;
        for (r, p) in rows.iter().zip(&pts) {
            if let Some(v) = pick(r) {
                // NaN wins so that it surfaces as a mismatch
                let v = if v.is_nan() { f64::INFINITY } else { v };
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, p));
                }
            }
        }
        best.map(|(v, p)| (v, p.clone()))
    };
    let f = worst(&|r| r.0);
    let k = worst(&|r| r.1);
    Ok(Some(Comparison {
        points: pts.len(),
        seed,
        f_max_rel_err: f.as_ref().map(|v| v.0),
        f_argmax: f.map(|v| v.1),
        kappa_max_rel_err: k.as_ref().map(|v| v.0),
        kappa_argmax: k.map(|v| v.1),
        tol_f: exp.tol_f,
        tol_kappa: exp.tol_kappa,
    }))
}

pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut sc = sc.clone();
    apply_overrides(&mut sc, opts)?;
    if opts.reconstruct == ReconstructMode::Required && sc.spec.reconstruction.is_none() {
        return Err(RunError::Config("scenario has no reconstruction section".into()));
    }

    let t = Instant::now();
    let samples = sample_points(&sc)?;
    let sampling_ms = ms(t);

    let t = Instant::now();
    let mut cfg = sc.test_config();
    cfg.samples = samples;
    cfg.execution = opts.execution;
    let classification = classify(&sc.spray, &cfg)?;
    let classify_ms = ms(t);
    let verdict = classification.verdict;

    let expected_verdict = sc.expected.as_ref().and_then(|e| e.verdict);
    let mut mismatches = Vec::new();
    if let Some(want) = expected_verdict {
        if want != verdict {
            mismatches.push(format!("verdict: expected {want}, got {verdict}"));
        }
    }

    let mut reconstruction = None;
    let mut comparison = None;
    let mut reconstruct_ms = None;
    let attempt = opts.reconstruct != ReconstructMode::Never && sc.spec.reconstruction.is_some();
    if attempt && verdict.admits_reconstruction() {
        let t = Instant::now();
        let g = build_reconstruction(&sc, opts.execution)?.expect("section present");
        let horizontal = g.recon.horizontal_form(&g.anchor.x, &g.anchor.y)?;
        let rs = sc.spec.reconstruction.as_ref().expect("section present");
        let verify_pts = sample_with(&sc, rs.verify_points, held_out_seed(sc.spec.samples.seed))?;
        let verification = g.recon.verify(&verify_pts)?;
        comparison = compare(&sc, &g, opts.execution)?;
        reconstruct_ms = Some(ms(t));
        if let Some(c) = &comparison {
            if let Some(e) = c.f_max_rel_err {
                if !(e <= c.tol_f) {
                    mismatches.push(format!("F: max relative error {e:.3e} exceeds {:.1e}", c.tol_f));
                }
            }
            if let Some(e) = c.kappa_max_rel_err {
                if !(e <= c.tol_kappa) {
                    mismatches.push(format!("kappa: max relative error {e:.3e} exceeds {:.1e}", c.tol_kappa));
                }
            }
        }
        reconstruction = Some(ReconstructionSummary { anchor: g.anchor, gauge: g.gauge, horizontal, verification });
    } else if attempt && opts.reconstruct == ReconstructMode::Required {
        mismatches.push(format!("reconstruction skipped: verdict {verdict} rules it out"));
    }

    let timings = opts.timings.then_some(Timings { sampling_ms, classify_ms, reconstruct_ms });
    Ok(RunReport {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        scenario: sc.spec.clone(),
        verdict,
        expected_verdict,
        classification,
        reconstruction,
        comparison,
        matches: mismatches.is_empty(),
        mismatches,
        timings,
    })
}

pub fn run_example(name: &str, variant: Option<&str>, opts: &RunOptions) -> Result<RunReport, RunError> {
    let sc = registry::example_scenario(name, variant)?;
    run(&sc, opts)
}

/// Lattice points: cell centres of the base box times fibre directions of
/// length `y_scale` drawn from the fibre box. Points outside the domain are dropped.
pub fn grid_points(sc: &Scenario) -> Vec<PhasePoint> {
    use rand::{Rng, SeedableRng};
    let spec = sc.spec.outputs.grid.clone().unwrap_or_default();
    let n = sc.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sc.spec.samples.seed);
    let mut dirs = Vec::with_capacity(spec.y_dirs);
    let mut guard = 0;
    while dirs.len() < spec.y_dirs && guard < 100 * spec.y_dirs {
        guard += 1;
        let v: Vec<f64> = sc.y_box.iter().map(|[lo, hi]| rng.gen_range(*lo..*hi)).collect();
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-9 {
            dirs.push(v.iter().map(|c| spec.y_scale * c / r).collect::<Vec<_>>());
        }
    }
    let steps = spec.x_steps;
    let total = steps.pow(n as u32);
    let mut out = Vec::new();
    for k in 0..total {
        let mut rem = k;
        let x: Vec<f64> = sc
            .x_box
            .iter()
            .map(|[lo, hi]| {
                let i = rem % steps;
                rem /= steps;
                lo + (i as f64 + 0.5) * (hi - lo) / steps as f64
            })
            .collect();
        for y in &dirs {
            let p = PhasePoint::new(x.clone(), y.clone());
            if sc.admits(&p) {
                out.push(p);
            }
        }
    }
    out
}

pub fn grid_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    h.extend((1..=n).map(|i| format!("y{i}")));
    h.extend(["rho", "F", "kappa", "res_ii", "res_iii", "detV"].map(String::from));
    h
}

/// Writes the diagnostic grid as CSV and returns the number of rows.
/// `F` and `kappa` stay empty without a reconstruction section.
pub fn grid_dump<W: Write>(sc: &Scenario, out: W, opts: &RunOptions) -> Result<usize, RunError> {
    let mut sc = sc.clone();
    apply_overrides(&mut sc, opts)?;
    let cfg = sc.test_config();
    let gauged = if opts.reconstruct == ReconstructMode::Never {
        None
    } else {
        build_reconstruction(&sc, opts.execution)?
    };
    let pts = grid_points(&sc);
    let rows = opts.execution.try_map(&pts, |p| -> Result<Vec<String>, RunError> {
        let ev = evaluate_point(&sc.spray, p, &cfg).map_err(|e| PointError::at(p, e))?;
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        let fk = gauged.as_ref().and_then(|g| g.value(p).ok());
        let mut row: Vec<String> = p.x.iter().chain(&p.y).map(|v| format!("{v}")).collect();
        row.push(fmt(Some(ev.rho)));
        row.push(fmt(fk.map(|v| v.0)));
        row.push(fmt(fk.map(|v| v.1)));
        row.push(fmt(ev.res_ii));
        row.push(fmt(ev.res_iii));
        row.push(fmt(ev.regularity.map(|r| r.det_v)));
        Ok(row)
    })?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(grid_header(sc.dim())).map_err(io)?;
    for r in &rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(rows.len())
}
