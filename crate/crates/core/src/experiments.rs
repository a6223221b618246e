//! Parameter sweeps: example reproductions, the (α, β) phase diagram, and
//! Monte Carlo corroboration of analytic verdicts.
//!
//! Every sweep is driven by an [`ExperimentSpec`]; the resolved spec plus
//! the crate version form the run manifest embedded in every output, and
//! re-running a manifest's spec through [`run_from_spec`] reproduces the
//! records bit for bit (per-point seeds derive from the master seed by
//! index, aggregation is order-fixed). Wall-clock timings live outside the
//! reproducible payload.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    classify_diagonal, classify_ratio, ChainSpec, ClassifyError, Label, DEFAULT_MARGIN,
    DEFAULT_N_HI, DEFAULT_N_LO,
};
use crate::drift::{DriftError, DriftFunction, TabulatedDrift, TailRule};
use crate::simulator::{run_ensemble, split_seed, Mode, SimError, WalkConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tail-scan settings for the analytic tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSettings {
    pub n_lo: u64,
    pub n_hi: u64,
    pub margin: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            n_lo: DEFAULT_N_LO,
            n_hi: DEFAULT_N_HI,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Monte Carlo settings for evidence gathering; `replicas = 0` disables
/// simulation even when evidence is requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSettings {
    pub replicas: u64,
    pub horizon: u64,
    pub escape_level: Option<u64>,
    pub seed: u64,
    pub start_state: u64,
    pub start_time: u64,
    pub mode: Mode,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            replicas: 0,
            horizon: 100_000,
            escape_level: None,
            seed: 42,
            start_state: 0,
            start_time: 1,
            mode: Mode::Discrete,
        }
    }
}

/// One axis of a parameter grid: an inclusive range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Range { min: f64, max: f64, step: f64 },
    Values { values: Vec<f64> },
}

impl AxisSpec {
    pub fn expand(&self) -> Result<Vec<f64>, ExperimentError> {
        match self {
            Self::Values { values } => {
                if values.is_empty() {
                    return Err(ExperimentError::InvalidSpec("axis value list is empty".into()));
                }
                Ok(values.clone())
            }
            Self::Range { min, max, step } => {
                if !(*step > 0.0 && step.is_finite() && min.is_finite() && max >= min) {
                    return Err(ExperimentError::InvalidSpec(format!(
                        "bad axis range: min = {min}, max = {max}, step = {step}"
                    )));
                }
                let mut out = Vec::new();
                let mut i = 0u64;
                loop {
                    let v = min + i as f64 * step;
                    if v > max + step * 1e-9 {
                        break;
                    }
                    out.push(v);
                    i += 1;
                }
                Ok(out)
            }
        }
    }
}

/// Scalar drift parameters plus the family name. Families:
/// `power_law`, `power_law_boundary` (ρ nᵅ/t^{(1+α)/2}, the critical-scaling
/// slice), `exponential`, `constant`, `tabulated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DriftSpec {
    pub family: String,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub value: Option<f64>,
    /// CSV path for tabulated drifts.
    pub path: Option<String>,
    /// `"constant"` or `"zero"` tail for tabulated drifts.
    pub tail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GridSpec {
    pub rho: Option<AxisSpec>,
    pub alpha: Option<AxisSpec>,
    pub beta: Option<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputSettings {
    pub json: Option<String>,
    pub csv: Option<String>,
    pub gnuplot: Option<String>,
    /// Attach Monte Carlo evidence to each grid point.
    pub evidence: bool,
}

/// A fully resolved experiment description; the unit of reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub name: String,
    pub drift: DriftSpec,
    pub grid: GridSpec,
    pub classifier: ClassifierSettings,
    pub simulation: SimulationSettings,
    pub outputs: OutputSettings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            drift: DriftSpec::default(),
            grid: GridSpec::default(),
            classifier: ClassifierSettings::default(),
            simulation: SimulationSettings::default(),
            outputs: OutputSettings::default(),
        }
    }
}

/// Point label, including the marker for parameter combinations whose drift
/// is not a valid model where the test evaluates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    Recurrent,
    Transient,
    Inconclusive,
    InvalidModel,
}

impl From<Label> for PointLabel {
    fn from(l: Label) -> Self {
        match l {
            Label::Recurrent => Self::Recurrent,
            Label::Transient => Self::Transient,
            Label::Inconclusive => Self::Inconclusive,
        }
    }
}

impl PointLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Recurrent => "recurrent",
            Self::Transient => "transient",
            Self::Inconclusive => "inconclusive",
            Self::InvalidModel => "invalid_model",
        }
    }
}

/// Where a power-law point sits relative to the phase regions: recurrent for
/// `α < min(β, 2β−1)`, transient for `0 ≤ β < 1` and `2β−1 < α < β`,
/// separated by the curves `α = 2β−1` (for `β ≤ 1`) and `α = β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    RecurrentRegion,
    TransientRegion,
    /// Within distance [`BOUNDARY_BAND`] of a boundary curve.
    BoundaryBand,
    /// `β ≤ α` or `β < 0`: the phase formulas do not speak here.
    OutsideStatedRegion,
}

/// Half-width of the boundary band in the (α, β) plane.
pub const BOUNDARY_BAND: f64 = 0.05;

/// Euclidean distance from `(alpha, beta)` to the nearer boundary curve:
/// the line `α = β` or the segment `α = 2β − 1`, `β ∈ [0, 1]`.
pub fn boundary_distance(alpha: f64, beta: f64) -> f64 {
    let line = (beta - alpha).abs() / std::f64::consts::SQRT_2;
    // segment from (−1, 0) to (1, 1) in (α, β) coordinates
    let (ax, ay) = (-1.0, 0.0);
    let (dx, dy) = (2.0, 1.0);
    let t = (((alpha - ax) * dx + (beta - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (px, py) = (ax + t * dx, ay + t * dy);
    let seg = ((alpha - px).powi(2) + (beta - py).powi(2)).sqrt();
    line.min(seg)
}

/// Region of a power-law point.
pub fn classify_region(alpha: f64, beta: f64) -> Region {
    if beta < 0.0 || beta <= alpha {
        return Region::OutsideStatedRegion;
    }
    if boundary_distance(alpha, beta) <= BOUNDARY_BAND {
        return Region::BoundaryBand;
    }
    if alpha < beta.min(2.0 * beta - 1.0) {
        Region::RecurrentRegion
    } else if beta < 1.0 && 2.0 * beta - 1.0 < alpha {
        Region::TransientRegion
    } else {
        Region::BoundaryBand
    }
}

/// Monte Carlo evidence attached to a grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub replicas: u64,
    pub horizon: u64,
    pub escape_level: Option<u64>,
    pub return_frequency: f64,
    pub return_frequency_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_frequency_se: Option<f64>,
    pub mean_returns: f64,
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub seed: u64,
    pub label: PointLabel,
    #[serde(rename = "c", skip_serializing_if = "Option::is_none")]
    pub witness_c: Option<f64>,
    #[serde(rename = "n0", skip_serializing_if = "Option::is_none")]
    pub witness_n0: Option<u64>,
    /// Cross-check: the homogeneous ratio test on the chain frozen along the
    /// diagonal, which agrees whenever both are conclusive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonal_chain_label: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The run manifest: everything needed to reproduce the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub spec: ExperimentSpec,
}

impl Manifest {
    pub fn new(spec: ExperimentSpec) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
        }
    }
}

/// Wall-clock timings; reported alongside the records but never part of the
/// reproducible payload.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub total_ms: u64,
    pub per_record_ms: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub manifest: Manifest,
    pub records: Vec<SweepRecord>,
    pub timings: Timings,
}

struct GridPoint {
    drift: Result<DriftFunction, DriftError>,
    family: String,
    rho: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    region: Option<Region>,
}

fn classify_point(
    point: &GridPoint,
    seed: u64,
    classifier: &ClassifierSettings,
    simulation: &SimulationSettings,
    with_mc: bool,
) -> SweepRecord {
    let mut record = SweepRecord {
        family: point.family.clone(),
        rho: point.rho,
        alpha: point.alpha,
        beta: point.beta,
        seed,
        label: PointLabel::InvalidModel,
        witness_c: None,
        witness_n0: None,
        diagonal_chain_label: None,
        region: point.region,
        mc: None,
        error: None,
    };
    let drift = match &point.drift {
        Ok(d) => d,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    match classify_diagonal(drift, classifier.n_lo, classifier.n_hi, classifier.margin) {
        Ok(verdict) => {
            record.label = verdict.label.into();
            record.witness_c = verdict.witness_c;
            record.witness_n0 = verdict.witness_n0;
        }
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    }
    record.diagonal_chain_label = classify_ratio(
        &ChainSpec::diagonal_of(drift.clone()),
        classifier.n_lo,
        classifier.n_hi,
        classifier.margin,
    )
    .ok()
    .map(|v| v.label);

    if with_mc && simulation.replicas > 0 {
        let mut cfg = WalkConfig::new(drift.clone(), simulation.horizon, seed, simulation.mode);
        cfg.start_state = simulation.start_state;
        cfg.start_time = simulation.start_time;
        cfg.escape_level = simulation.escape_level;
        cfg.stop_at_escape = simulation.escape_level.is_some();
        match run_ensemble(&cfg, simulation.replicas, None) {
            Ok(stats) => {
                record.mc = Some(McSummary {
                    replicas: stats.replicas,
                    horizon: simulation.horizon,
                    escape_level: stats.escape_level,
                    return_frequency: stats.return_frequency,
                    return_frequency_se: stats.return_frequency_se,
                    escape_frequency: stats.escape_frequency,
                    escape_frequency_se: stats.escape_frequency_se,
                    mean_returns: stats.mean_returns,
                });
            }
            Err(e) => record.error = Some(format!("simulation unavailable: {e}")),
        }
    }
    record
}

fn sweep_points(spec: &ExperimentSpec, points: Vec<GridPoint>) -> SweepResult {
    let started = Instant::now();
    let with_mc = spec.outputs.evidence;
    let timed: Vec<(SweepRecord, u64)> = points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let t0 = Instant::now();
            let seed = split_seed(spec.simulation.seed, i as u64);
            let rec = classify_point(point, seed, &spec.classifier, &spec.simulation, with_mc);
            (rec, t0.elapsed().as_millis() as u64)
        })
        .collect();
    let mut records = Vec::with_capacity(timed.len());
    let mut per_record_ms = Vec::with_capacity(timed.len());
    for (rec, ms) in timed {
        records.push(rec);
        per_record_ms.push(ms);
    }
    SweepResult {
        manifest: Manifest::new(spec.clone()),
        records,
        timings: Timings {
            total_ms: started.elapsed().as_millis() as u64,
            per_record_ms,
        },
    }
}

/// Expands the spec's grid and classifies every point. The single driver
/// behind all sweeps: the example builders only assemble specs, so any
/// embedded manifest reruns through this function identically.
pub fn run_from_spec(spec: &ExperimentSpec) -> Result<SweepResult, ExperimentError> {
    let axis = |a: &Option<AxisSpec>, scalar: Option<f64>, default: f64| -> Result<Vec<f64>, ExperimentError> {
        match a {
            Some(ax) => ax.expand(),
            None => Ok(vec![scalar.unwrap_or(default)]),
        }
    };
    let points = match spec.drift.family.as_str() {
        "power_law" => {
            let rhos = axis(&spec.grid.rho, spec.drift.rho, 1.0)?;
            let alphas = axis(&spec.grid.alpha, spec.drift.alpha, 1.0)?;
            let betas = axis(&spec.grid.beta, spec.drift.beta, 1.0)?;
            // Region annotations are phase-diagram metadata; attach them only
            // when the sweep actually spans the (alpha, beta) plane.
            let annotate = spec.grid.alpha.is_some() && spec.grid.beta.is_some();
            let mut pts = Vec::new();
            for &rho in &rhos {
                for &alpha in &alphas {
                    for &beta in &betas {
                        pts.push(GridPoint {
                            drift: DriftFunction::power_law(rho, alpha, beta),
                            family: "power_law".into(),
                            rho: Some(rho),
                            alpha: Some(alpha),
                            beta: Some(beta),
                            region: annotate.then(|| classify_region(alpha, beta)),
                        });
                    }
                }
            }
            pts
        }
        // phi = rho n^alpha / t^{(1+alpha)/2}: the power law with doubled
        // leading constant and beta tied to alpha.
        "power_law_boundary" => {
            let rhos = axis(&spec.grid.rho, spec.drift.rho, 0.25)?;
            let alphas = axis(&spec.grid.alpha, spec.drift.alpha, 1.0)?;
            let mut pts = Vec::new();
            for &alpha in &alphas {
                for &rho in &rhos {
                    let beta = (1.0 + alpha) / 2.0;
                    pts.push(GridPoint {
                        drift: DriftFunction::power_law(2.0 * rho, alpha, beta),
                        family: "power_law_boundary".into(),
                        rho: Some(rho),
                        alpha: Some(alpha),
                        beta: Some(beta),
                        region: None,
                    });
                }
            }
            pts
        }
        "exponential" => {
            let alphas = axis(&spec.grid.alpha, spec.drift.alpha, 1.0)?;
            let betas = axis(&spec.grid.beta, spec.drift.beta, 1.0)?;
            let mut pts = Vec::new();
            for &alpha in &alphas {
                for &beta in &betas {
                    pts.push(GridPoint {
                        drift: DriftFunction::exponential(alpha, beta),
                        family: "exponential".into(),
                        rho: None,
                        alpha: Some(alpha),
                        beta: Some(beta),
                        region: None,
                    });
                }
            }
            pts
        }
        "constant" => {
            let value = spec
                .drift
                .value
                .ok_or_else(|| ExperimentError::InvalidSpec("constant drift needs `value`".into()))?;
            vec![GridPoint {
                drift: DriftFunction::constant(value),
                family: "constant".into(),
                rho: None,
                alpha: None,
                beta: None,
                region: None,
            }]
        }
        "tabulated" => {
            let path = spec
                .drift
                .path
                .as_ref()
                .ok_or_else(|| ExperimentError::InvalidSpec("tabulated drift needs `path`".into()))?;
            let tail = match spec.drift.tail.as_deref() {
                None | Some("constant") => TailRule::ConstantExtend,
                Some("zero") => TailRule::Zero,
                Some(other) => {
                    return Err(ExperimentError::InvalidSpec(format!(
                        "unknown tail rule `{other}` (expected `constant` or `zero`)"
                    )))
                }
            };
            let table = TabulatedDrift::from_csv_path(std::path::Path::new(path), tail)?;
            vec![GridPoint {
                drift: Ok(DriftFunction::tabulated(table)),
                family: "tabulated".into(),
                rho: None,
                alpha: None,
                beta: None,
                region: None,
            }]
        }
        "" => {
            return Err(ExperimentError::InvalidSpec(
                "drift.family is required (power_law, power_law_boundary, exponential, constant, tabulated)".into(),
            ))
        }
        other => {
            return Err(ExperimentError::InvalidSpec(format!(
                "unknown drift family `{other}`"
            )))
        }
    };
    Ok(sweep_points(spec, points))
}

fn cents(from: i64, to: i64, step: i64) -> Vec<f64> {
    debug_assert!(step > 0);
    let mut out = Vec::new();
    let mut i = from;
    while i <= to {
        out.push(i as f64 / 100.0);
        i += step;
    }
    out
}

/// Optional knobs for the canned examples.
#[derive(Debug, Clone, Default)]
pub struct ExampleOverrides {
    pub rho: Option<f64>,
    pub classifier: Option<ClassifierSettings>,
    pub simulation: Option<SimulationSettings>,
    pub evidence: bool,
}

/// Builds the spec of one of the four canned sweeps.
///
/// 1. `φ = ρ n/(2t)`: ρ sweep, recurrence/transience threshold at ρ = 1/2.
/// 2. `φ = nᵅ/(2tᵝ)` over the full (α, β) grid (step 0.1): the phase
///    diagram; points with `β ≤ α` are annotated as outside the stated
///    region and report whatever the diagonal test yields there.
/// 3. the boundary family `φ = ρ nᵅ/t^{(1+α)/2}`, threshold at ρ = 1/4.
/// 4. `φ = e^{αn − βt}`: recurrent everywhere; the scan starts at n = 256
///    because steep cases exceed 1/2 below n ≈ 21.
pub fn example_spec(id: u8, overrides: &ExampleOverrides) -> Result<ExperimentSpec, ExperimentError> {
    let mut spec = ExperimentSpec {
        name: format!("example{id}"),
        ..Default::default()
    };
    if let Some(c) = overrides.classifier {
        spec.classifier = c;
    }
    if let Some(s) = overrides.simulation.clone() {
        spec.simulation = s;
    }
    spec.outputs.evidence = overrides.evidence;

    match id {
        1 => {
            spec.drift.family = "power_law".into();
            spec.drift.alpha = Some(1.0);
            spec.drift.beta = Some(1.0);
            let rhos = match overrides.rho {
                Some(r) => vec![r],
                None => {
                    let mut r = cents(10, 45, 5);
                    r.extend(cents(55, 90, 5));
                    r
                }
            };
            spec.grid.rho = Some(AxisSpec::Values { values: rhos });
        }
        2 => {
            spec.drift.family = "power_law".into();
            spec.drift.rho = Some(overrides.rho.unwrap_or(1.0));
            spec.grid.alpha = Some(AxisSpec::Values {
                values: cents(-100, 150, 10),
            });
            spec.grid.beta = Some(AxisSpec::Values {
                values: cents(0, 150, 10),
            });
        }
        3 => {
            spec.drift.family = "power_law_boundary".into();
            let rhos = match overrides.rho {
                Some(r) => vec![r],
                None => vec![0.05, 0.15, 0.35, 0.45],
            };
            spec.grid.rho = Some(AxisSpec::Values { values: rhos });
            spec.grid.alpha = Some(AxisSpec::Values {
                values: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            });
        }
        4 => {
            spec.drift.family = "exponential".into();
            if overrides.classifier.is_none() {
                spec.classifier.n_lo = 256;
            }
            spec.grid.alpha = Some(AxisSpec::Values {
                values: vec![0.5, 1.0, 2.0],
            });
            spec.grid.beta = Some(AxisSpec::Values {
                values: vec![0.1, 1.0],
            });
        }
        other => {
            return Err(ExperimentError::InvalidSpec(format!(
                "example id must be 1..=4, got {other}"
            )))
        }
    }
    Ok(spec)
}

/// Runs one of the canned examples.
pub fn run_example(id: u8, overrides: &ExampleOverrides) -> Result<SweepResult, ExperimentError> {
    run_from_spec(&example_spec(id, overrides)?)
}

/// Phase sweep over explicit (α, β, ρ) lists of the power-law family.
pub fn phase_sweep(
    alphas: &[f64],
    betas: &[f64],
    rhos: &[f64],
    spec: &ExperimentSpec,
) -> Result<SweepResult, ExperimentError> {
    if alphas.is_empty() || betas.is_empty() || rhos.is_empty() {
        return Err(ExperimentError::InvalidSpec("phase sweep axes must be non-empty".into()));
    }
    let mut spec = spec.clone();
    spec.drift.family = "power_law".into();
    spec.grid.alpha = Some(AxisSpec::Values { values: alphas.to_vec() });
    spec.grid.beta = Some(AxisSpec::Values { values: betas.to_vec() });
    spec.grid.rho = Some(AxisSpec::Values { values: rhos.to_vec() });
    run_from_spec(&spec)
}

/// How one grid point's Monte Carlo evidence relates to its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Assessment {
    ConsistentWithRecurrence,
    ConsistentWithTransience,
    Conflicting,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvidenceEntry {
    pub record_index: usize,
    pub label: PointLabel,
    pub return_frequency: f64,
    pub return_frequency_se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_frequency: Option<f64>,
    pub assessment: Assessment,
}

/// A transient-labeled point whose return frequency exceeds a
/// recurrent-labeled point's by more than five combined standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct ConflictFlag {
    pub transient_index: usize,
    pub recurrent_index: usize,
    pub z_score: f64,
}

/// Monte Carlo corroboration of a completed sweep.
///
/// Simulation cannot prove recurrence or transience, so the entries say
/// "consistent with" rather than "verifies", and the hard flags are
/// comparative: within one sweep every transient point's return frequency is
/// expected below every recurrent point's, and inversions beyond 5σ are
/// surfaced prominently.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceReport {
    pub entries: Vec<EvidenceEntry>,
    pub flags: Vec<ConflictFlag>,
    /// Conclusive points that carried no Monte Carlo evidence.
    pub without_evidence: usize,
}

pub fn evidence_report(sweep: &SweepResult) -> EvidenceReport {
    let mut entries = Vec::new();
    let mut without = 0usize;
    for (i, rec) in sweep.records.iter().enumerate() {
        if !matches!(rec.label, PointLabel::Recurrent | PointLabel::Transient) {
            continue;
        }
        match &rec.mc {
            Some(mc) => entries.push(EvidenceEntry {
                record_index: i,
                label: rec.label,
                return_frequency: mc.return_frequency,
                return_frequency_se: mc.return_frequency_se,
                escape_frequency: mc.escape_frequency,
                assessment: match rec.label {
                    PointLabel::Recurrent => Assessment::ConsistentWithRecurrence,
                    _ => Assessment::ConsistentWithTransience,
                },
            }),
            None => without += 1,
        }
    }

    let mut flags = Vec::new();
    for t in &entries {
        if t.label != PointLabel::Transient {
            continue;
        }
        for r in &entries {
            if r.label != PointLabel::Recurrent {
                continue;
            }
            let se = (t.return_frequency_se.powi(2) + r.return_frequency_se.powi(2))
                .sqrt()
                .max(1e-12);
            let z = (t.return_frequency - r.return_frequency) / se;
            if z > 5.0 {
                flags.push(ConflictFlag {
                    transient_index: t.record_index,
                    recurrent_index: r.record_index,
                    z_score: z,
                });
            }
        }
    }
    for f in &flags {
        for e in &mut entries {
            if e.record_index == f.transient_index || e.record_index == f.recurrent_index {
                e.assessment = Assessment::Conflicting;
            }
        }
    }
    EvidenceReport {
        entries,
        flags,
        without_evidence: without,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flat CSV: `alpha,beta,rho,label,c,n0,mc_return_freq,mc_se`, one row per
/// grid point, streamed in record order.
pub fn write_csv<W: Write>(sweep: &SweepResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "alpha,beta,rho,label,c,n0,mc_return_freq,mc_se")?;
    for r in &sweep.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_opt(r.alpha),
            fmt_opt(r.beta),
            fmt_opt(r.rho),
            r.label.as_str(),
            fmt_opt(r.witness_c),
            r.witness_n0.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(r.mc.as_ref().map(|m| m.return_frequency)),
            fmt_opt(r.mc.as_ref().map(|m| m.return_frequency_se)),
        )?;
    }
    Ok(())
}

/// Gnuplot-ready dataset: `alpha beta rho code` with blank lines between
/// alpha blocks; codes 1 = recurrent, −1 = transient, 0 = inconclusive,
/// 9 = invalid model.
pub fn write_gnuplot<W: Write>(sweep: &SweepResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# alpha beta rho code")?;
    writeln!(w, "# code: 1 recurrent, -1 transient, 0 inconclusive, 9 invalid_model")?;
    let mut last_alpha: Option<f64> = None;
    for r in &sweep.records {
        if last_alpha.is_some() && r.alpha != last_alpha {
            writeln!(w)?;
        }
        last_alpha = r.alpha;
        let code = match r.label {
            PointLabel::Recurrent => 1,
            PointLabel::Transient => -1,
            PointLabel::Inconclusive => 0,
            PointLabel::InvalidModel => 9,
        };
        writeln!(w, "{} {} {} {}", fmt_opt(r.alpha), fmt_opt(r.beta), fmt_opt(r.rho), code)?;
    }
    Ok(())
}
