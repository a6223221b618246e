//! Sample paths of the walk and of its continuous-time embedding.
//!
//! Discrete mode iterates the kernel directly: from `(n, t)` the walk moves
//! to `n + 1` with probability `1/2 + φ(n, t)`, to `n − 1` otherwise, and
//! state 0 forces an up-step. The walk lives on the wedge `n ≤ t` (starts
//! must satisfy `X₀ ≤ t₀`, and ±1 steps preserve the inequality; debug
//! builds assert it).
//!
//! Continuous mode simulates the embedded jump process: rates are frozen at
//! each jump time, the total rate is identically 1 (`λ + μ = 1` for `n ≥ 1`,
//! and a unit up-rate at 0), so holding times are unit-mean exponentials and
//! jump directions are drawn with probability `λ_{n,τ}`. Because the total
//! rate never varies, freezing only affects the *direction* of a jump; the
//! optional exact mode draws the direction at the jump instant instead of
//! the entry instant.
//!
//! Determinism: a trajectory is a pure function of `(config, seed)`. Every
//! discrete step and every jump consume a fixed number of uniforms (1 and 2
//! respectively, forced moves included), counted in the stats, so paths stay
//! reproducible across refactors. Ensembles derive replica seeds with
//! [`split_seed`] and aggregate in replica order, so parallel and sequential
//! runs are identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drift::{DriftError, DriftFunction};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid walk config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Drift(#[from] DriftError),
}

/// SplitMix64 finalizer; a fixed bijective mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream-split function: the seed of replica `index` under `master` is
/// `splitmix64(master ⊕ (index + 1) · 0x9E3779B97F4A7C15)`. Documented so
/// any run can be reproduced replica by replica.
pub fn split_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform stream with a draw counter, backed by ChaCha8.
#[derive(Debug, Clone)]
pub struct StreamRng {
    rng: ChaCha8Rng,
    draws: u64,
}

impl StreamRng {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
        }
    }

    /// One uniform in `[0, 1)`; increments the audit counter.
    pub fn next_uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.gen::<f64>()
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// Time evolution flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discrete,
    Continuous,
}

/// How much of the path to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathCapture {
    #[default]
    None,
    /// Keep roughly `max_points` samples by doubling the keep-stride as the
    /// path grows, so memory is logarithmic in the horizon.
    Decimated { max_points: usize },
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkConfig {
    pub drift: DriftFunction,
    pub start_state: u64,
    /// First time index, `t₀ ≥ 1`.
    pub start_time: u64,
    /// Last time index (discrete) or final time (continuous).
    pub horizon: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Continuous mode only: draw the jump direction at the jump instant
    /// rather than freezing it at the state's entry time.
    #[serde(default)]
    pub exact_rates: bool,
    /// Level whose first hit is recorded (and optionally stops the run).
    #[serde(default)]
    pub escape_level: Option<u64>,
    #[serde(default)]
    pub stop_at_escape: bool,
    /// Absorb on arrival at 0.
    #[serde(default)]
    pub stop_at_zero: bool,
    /// Hard cap on steps (discrete) or jumps (continuous).
    #[serde(default)]
    pub max_steps: Option<u64>,
    /// Times at which the state is sampled into `TrajectoryStats`.
    #[serde(default)]
    pub sample_times: Vec<u64>,
    #[serde(default)]
    pub capture: PathCapture,
}

impl WalkConfig {
    pub fn new(drift: DriftFunction, horizon: u64, seed: u64, mode: Mode) -> Self {
        Self {
            drift,
            start_state: 0,
            start_time: 1,
            horizon,
            seed,
            mode,
            exact_rates: false,
            escape_level: None,
            stop_at_escape: false,
            stop_at_zero: false,
            max_steps: None,
            sample_times: Vec::new(),
            capture: PathCapture::None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.start_time < 1 {
            return Err(SimError::InvalidConfig("start_time must be >= 1".into()));
        }
        if self.horizon <= self.start_time {
            return Err(SimError::InvalidConfig(format!(
                "horizon {} must exceed start_time {}",
                self.horizon, self.start_time
            )));
        }
        if self.start_state > self.start_time {
            return Err(SimError::InvalidConfig(format!(
                "start_state {} must not exceed start_time {} (the kernel lives on n <= t)",
                self.start_state, self.start_time
            )));
        }
        if self.escape_level == Some(0) {
            return Err(SimError::InvalidConfig("escape_level must be >= 1".into()));
        }
        if !self.sample_times.windows(2).all(|w| w[0] < w[1]) {
            return Err(SimError::InvalidConfig(
                "sample_times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub level: u64,
    pub time: f64,
}

/// Per-trajectory statistics. Times are reals so discrete and continuous
/// runs share the type; discrete times are exact integers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub returns_to_zero: u64,
    pub first_return_time: Option<f64>,
    pub max_state: u64,
    pub final_state: u64,
    pub final_time: f64,
    pub hit_upper: Option<HitRecord>,
    /// Number of time points observed in state 0 (the start included).
    pub time_at_zero: u64,
    /// Steps taken (discrete) or jumps made (continuous).
    pub steps: u64,
    /// Uniforms consumed: exactly 1 per discrete step; 2 per jump, plus one
    /// dangling holding draw when the horizon truncates mid-holding.
    pub draws: u64,
    /// States observed at the config's `sample_times` (absorbed replicas
    /// hold their final state).
    pub sampled_states: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<(f64, u64)>>,
}

struct PathRecorder {
    capture: PathCapture,
    points: Vec<(f64, u64)>,
    stride: u64,
    counter: u64,
}

impl PathRecorder {
    fn new(capture: PathCapture) -> Self {
        Self {
            capture,
            points: Vec::new(),
            stride: 1,
            counter: 0,
        }
    }

    fn push(&mut self, time: f64, state: u64) {
        match self.capture {
            PathCapture::None => {}
            PathCapture::Full => self.points.push((time, state)),
            PathCapture::Decimated { max_points } => {
                if self.counter.is_multiple_of(self.stride) {
                    if self.points.len() >= max_points.max(2) {
                        // halve the kept points, double the stride
                        let mut kept = Vec::with_capacity(self.points.len() / 2 + 1);
                        for (i, p) in self.points.iter().enumerate() {
                            if i % 2 == 0 {
                                kept.push(*p);
                            }
                        }
                        self.points = kept;
                        self.stride *= 2;
                    }
                    if self.counter.is_multiple_of(self.stride) {
                        self.points.push((time, state));
                    }
                }
                self.counter += 1;
            }
        }
    }

    fn finish(self) -> Option<Vec<(f64, u64)>> {
        match self.capture {
            PathCapture::None => None,
            _ => Some(self.points),
        }
    }
}

/// One transition of the discrete kernel. Consumes exactly one uniform,
/// forced moves included, so draw counts equal step counts.
pub fn step_discrete(
    state: u64,
    time: u64,
    drift: &DriftFunction,
    rng: &mut StreamRng,
) -> Result<u64, SimError> {
    let u = rng.next_uniform();
    if state == 0 {
        return Ok(1);
    }
    debug_assert!(state <= time, "walk left the n <= t wedge: n = {state}, t = {time}");
    let p_up = 0.5 + drift.evaluate(state, time as f64)?;
    Ok(if u < p_up { state + 1 } else { state - 1 })
}

struct StatsBuilder<'a> {
    cfg: &'a WalkConfig,
    returns_to_zero: u64,
    first_return_time: Option<f64>,
    max_state: u64,
    time_at_zero: u64,
    hit_upper: Option<HitRecord>,
    sampled_states: Vec<u64>,
    sample_idx: usize,
    recorder: PathRecorder,
}

impl<'a> StatsBuilder<'a> {
    fn new(cfg: &'a WalkConfig) -> Self {
        let mut b = Self {
            cfg,
            returns_to_zero: 0,
            first_return_time: None,
            max_state: cfg.start_state,
            time_at_zero: u64::from(cfg.start_state == 0),
            hit_upper: None,
            sampled_states: Vec::with_capacity(cfg.sample_times.len()),
            sample_idx: 0,
            recorder: PathRecorder::new(cfg.capture),
        };
        b.recorder.push(cfg.start_time as f64, cfg.start_state);
        b.sample_up_to(cfg.start_time as f64, cfg.start_state, true);
        b
    }

    /// Records `state` for every pending sample time `<= now` (or `< now`
    /// when `inclusive` is false, for cadlag continuous sampling).
    fn sample_up_to(&mut self, now: f64, state: u64, inclusive: bool) {
        while self.sample_idx < self.cfg.sample_times.len() {
            let s = self.cfg.sample_times[self.sample_idx] as f64;
            let due = if inclusive { s <= now } else { s < now };
            if !due {
                break;
            }
            self.sampled_states.push(state);
            self.sample_idx += 1;
        }
    }

    /// Updates counters after a transition to `state` at `time`.
    /// Returns true when a stop condition fired.
    fn arrive(&mut self, time: f64, state: u64) -> bool {
        self.max_state = self.max_state.max(state);
        self.recorder.push(time, state);
        let mut stop = false;
        if state == 0 {
            self.returns_to_zero += 1;
            self.time_at_zero += 1;
            if self.first_return_time.is_none() {
                self.first_return_time = Some(time);
            }
            stop |= self.cfg.stop_at_zero;
        }
        if let Some(level) = self.cfg.escape_level {
            if state == level && self.hit_upper.is_none() {
                self.hit_upper = Some(HitRecord { level, time });
                stop |= self.cfg.stop_at_escape;
            }
        }
        stop
    }

    fn finish(mut self, final_time: f64, final_state: u64, steps: u64, draws: u64) -> TrajectoryStats {
        self.sample_up_to(f64::INFINITY, final_state, true); // absorbed state holds
        debug_assert!(self.max_state >= final_state);
        TrajectoryStats {
            returns_to_zero: self.returns_to_zero,
            first_return_time: self.first_return_time,
            max_state: self.max_state,
            final_state,
            final_time,
            hit_upper: self.hit_upper,
            time_at_zero: self.time_at_zero,
            steps,
            draws,
            sampled_states: self.sampled_states,
            path: self.recorder.finish(),
        }
    }
}

/// Runs the discrete walk from `(start_state, start_time)` to the horizon
/// (or an earlier stop). Deterministic in `(config, seed)`.
pub fn run_discrete(cfg: &WalkConfig) -> Result<TrajectoryStats, SimError> {
    cfg.validate()?;
    let mut rng = StreamRng::from_seed(cfg.seed);
    let mut stats = StatsBuilder::new(cfg);
    let mut state = cfg.start_state;
    let mut t = cfg.start_time;
    let mut steps = 0u64;
    let max_steps = cfg.max_steps.unwrap_or(u64::MAX);

    while t < cfg.horizon && steps < max_steps {
        state = step_discrete(state, t, &cfg.drift, &mut rng)?;
        t += 1;
        steps += 1;
        stats.sample_up_to(t as f64, state, true);
        if stats.arrive(t as f64, state) {
            break;
        }
    }
    Ok(stats.finish(t as f64, state, steps, rng.draws()))
}

/// Runs the embedded continuous-time process to the horizon (or an earlier
/// stop). Holding times are unit-mean exponentials; directions use the rates
/// frozen at the entry time unless `exact_rates` is set.
///
/// Jump times are random, so the jump count can outrun the clock and the
/// drift gets evaluated at `(n, τ)` pairs with `n > τ` that the discrete
/// walk never visits. A drift that is only a valid bias on the wedge
/// `n ≤ t` (steep power laws, say) then returns its domain error; that is
/// the declared signal that the embedded model is invalid there.
pub fn run_continuous(cfg: &WalkConfig) -> Result<TrajectoryStats, SimError> {
    cfg.validate()?;
    let mut rng = StreamRng::from_seed(cfg.seed);
    let mut stats = StatsBuilder::new(cfg);
    let mut state = cfg.start_state;
    let mut tau = cfg.start_time as f64;
    let mut jumps = 0u64;
    let max_jumps = cfg.max_steps.unwrap_or(u64::MAX);
    let horizon = cfg.horizon as f64;

    while tau < horizon && jumps < max_jumps {
        let hold = -(1.0 - rng.next_uniform()).ln();
        let jump_at = tau + hold;
        if jump_at >= horizon {
            stats.sample_up_to(horizon, state, true);
            tau = horizon;
            break;
        }
        let u_dir = rng.next_uniform();
        stats.sample_up_to(jump_at, state, false);
        let next = if state == 0 {
            1 // unit up-rate at the boundary
        } else {
            let rate_time = if cfg.exact_rates { jump_at } else { tau };
            let p_up = 0.5 + cfg.drift.evaluate(state, rate_time)?;
            if u_dir < p_up {
                state + 1
            } else {
                state - 1
            }
        };
        state = next;
        tau = jump_at;
        jumps += 1;
        stats.sample_up_to(tau, state, true);
        if stats.arrive(tau, state) {
            break;
        }
    }
    Ok(stats.finish(tau, state, jumps, rng.draws()))
}

/// Runs one trajectory in the config's mode.
pub fn run_walk(cfg: &WalkConfig) -> Result<TrajectoryStats, SimError> {
    match cfg.mode {
        Mode::Discrete => run_discrete(cfg),
        Mode::Continuous => run_continuous(cfg),
    }
}

/// A sampled mean-state point with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub time: u64,
    pub mean: f64,
    pub se: f64,
}

/// Aggregated ensemble statistics. Binomial standard errors are
/// `sqrt(p (1 − p) / replicas)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub replicas: u64,
    pub master_seed: u64,
    /// Fraction of replicas with at least one return to 0.
    pub return_frequency: f64,
    pub return_frequency_se: f64,
    pub mean_returns: f64,
    pub escape_level: Option<u64>,
    /// Fraction of replicas hitting the level before any return to 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_frequency_se: Option<f64>,
    pub mean_state_by_time: Vec<TimePoint>,
    /// Continuous runs: mean observed holding time between jumps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_holding_time: Option<f64>,
    pub total_steps: u64,
    pub total_draws: u64,
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Whether the replica hit the level before its first arrival at 0.
fn escaped(stats: &TrajectoryStats) -> bool {
    match (&stats.hit_upper, stats.first_return_time) {
        (Some(hit), Some(ret)) => hit.time < ret,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// Runs `replicas` trajectories with per-replica seeds derived from the
/// master seed and returns the aggregate plus the per-replica stats.
/// Replicas run in parallel; results are identical to a sequential run.
pub fn run_ensemble_detailed(
    cfg: &WalkConfig,
    replicas: u64,
    escape_level: Option<u64>,
) -> Result<(EnsembleStats, Vec<TrajectoryStats>), SimError> {
    if replicas == 0 {
        return Err(SimError::InvalidConfig("replicas must be >= 1".into()));
    }
    let mut base = cfg.clone();
    if escape_level.is_some() {
        base.escape_level = escape_level;
    }
    base.validate()?;

    let runs: Result<Vec<TrajectoryStats>, SimError> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut replica_cfg = base.clone();
            replica_cfg.seed = split_seed(base.seed, i);
            run_walk(&replica_cfg)
        })
        .collect();
    let runs = runs?;

    let n = replicas as f64;
    let returned = runs.iter().filter(|r| r.returns_to_zero > 0).count() as f64;
    let return_frequency = returned / n;
    let mean_returns = runs.iter().map(|r| r.returns_to_zero as f64).sum::<f64>() / n;

    let (escape_frequency, escape_frequency_se) = match base.escape_level {
        Some(_) => {
            let p = runs.iter().filter(|r| escaped(r)).count() as f64 / n;
            (Some(p), Some(binomial_se(p, replicas)))
        }
        None => (None, None),
    };

    let mut mean_state_by_time = Vec::with_capacity(base.sample_times.len());
    for (j, &time) in base.sample_times.iter().enumerate() {
        let mean = runs.iter().map(|r| r.sampled_states[j] as f64).sum::<f64>() / n;
        let var = runs
            .iter()
            .map(|r| {
                let d = r.sampled_states[j] as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        mean_state_by_time.push(TimePoint {
            time,
            mean,
            se: (var / n).sqrt(),
        });
    }

    let total_steps: u64 = runs.iter().map(|r| r.steps).sum();
    let mean_holding_time = (base.mode == Mode::Continuous && total_steps > 0).then(|| {
        let elapsed: f64 = runs
            .iter()
            .map(|r| r.final_time - base.start_time as f64)
            .sum();
        elapsed / total_steps as f64
    });

    let stats = EnsembleStats {
        replicas,
        master_seed: base.seed,
        return_frequency,
        return_frequency_se: binomial_se(return_frequency, replicas),
        mean_returns,
        escape_level: base.escape_level,
        escape_frequency,
        escape_frequency_se,
        mean_state_by_time,
        mean_holding_time,
        total_steps,
        total_draws: runs.iter().map(|r| r.draws).sum(),
    };
    Ok((stats, runs))
}

pub fn run_ensemble(
    cfg: &WalkConfig,
    replicas: u64,
    escape_level: Option<u64>,
) -> Result<EnsembleStats, SimError> {
    Ok(run_ensemble_detailed(cfg, replicas, escape_level)?.0)
}

/// One estimate of `E φ(X_t, t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub time: u64,
    pub mean_phi: f64,
    pub se: f64,
}

/// Drift-vanishing report over a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftVanishingReport {
    pub estimates: Vec<DriftEstimate>,
    /// Least-squares slope of `ln E φ` against `ln t` (requires two positive
    /// estimates).
    pub log_log_slope: Option<f64>,
    /// Last estimate below both the first one and the threshold.
    pub vanishing_at_horizon: bool,
    pub threshold: f64,
}

/// Estimates `E φ(X_t, t)` along `t_grid` from a replica ensemble and fits
/// the decay trend.
pub fn drift_vanishing_check(
    cfg: &WalkConfig,
    replicas: u64,
    t_grid: &[u64],
    threshold: f64,
) -> Result<DriftVanishingReport, SimError> {
    if t_grid.is_empty() || !t_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(SimError::InvalidConfig("t_grid must be non-empty and increasing".into()));
    }
    let mut base = cfg.clone();
    base.sample_times = t_grid.to_vec();
    let (_, runs) = run_ensemble_detailed(&base, replicas, None)?;

    let n = replicas as f64;
    let mut estimates = Vec::with_capacity(t_grid.len());
    for (j, &time) in t_grid.iter().enumerate() {
        let mut values = Vec::with_capacity(runs.len());
        for r in &runs {
            values.push(base.drift.evaluate(r.sampled_states[j], time as f64)?);
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        estimates.push(DriftEstimate {
            time,
            mean_phi: mean,
            se: (var / n).sqrt(),
        });
    }

    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.mean_phi > 0.0)
        .map(|e| ((e.time as f64).ln(), e.mean_phi.ln()))
        .collect();
    let log_log_slope = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });

    let first = estimates.first().map(|e| e.mean_phi).unwrap_or(0.0);
    let last = estimates.last().map(|e| e.mean_phi).unwrap_or(0.0);
    Ok(DriftVanishingReport {
        estimates,
        log_log_slope,
        vanishing_at_horizon: last < first && last < threshold,
        threshold,
    })
}
