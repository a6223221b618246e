//! Analytic recurrence/transience verdicts.
//!
//! Two families of tests live here:
//!
//! * the diagonal test for the time-inhomogeneous walk: the statistic
//!   `s(n) = 4 n φ(n, n²)` decides recurrence when a tail stays at or below
//!   some `c < 1` and transience when a tail stays at or above some `c > 1`;
//! * the classical criteria for homogeneous birth-and-death chains: the
//!   ratio statistic `r(n) = n (λ_n/μ_n − 1)` and the series criterion on
//!   `Σ_n Π_{k≤n} μ_k/λ_k` (divergent iff recurrent), decided through
//!   Raabe's test.
//!
//! "There exist `c` and `n₀`" is operationalized as a tail scan: for each
//! candidate `n₀` on a ratio-2 geometric grid, take the sup/inf of the
//! statistic over `[n₀, n_hi]`; a verdict requires the bound to clear 1 by
//! `margin`. Finite sampling cannot certify an asymptotic inequality, so
//! anything inside the margin is reported [`Label::Inconclusive`] rather than
//! guessed. The one exception is the recurrent side of the homogeneous ratio
//! test, whose bound is the marginless `λ_n/μ_n ≤ 1 + 1/n`; it is implemented
//! literally with `c = 1` (plus a float-noise allowance) and no witness `c`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drift::{DriftError, DriftFunction, TabulatedDrift, TailRule};

/// Default first tail candidate for the scans.
pub const DEFAULT_N_LO: u64 = 16;
/// Default last evaluation point for the scans.
pub const DEFAULT_N_HI: u64 = 1 << 20;
/// Default distance the tail bound must clear 1 by.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Absolute float-noise allowance on the literal `c = 1` recurrent bound of
/// the homogeneous tests: statistics equal to 1 in exact arithmetic land
/// within ~n·ε of it in doubles.
const RECURRENT_SLACK: f64 = 1e-9;

/// Log-spaced evaluation points per octave of the scan range.
const POINTS_PER_OCTAVE: u64 = 64;
/// Denser sampling over the last two octaves, where tails are decided.
const POINTS_PER_LAST_OCTAVES: u64 = 512;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid chain: {which} rate at n = {n} is {value}, must be positive and finite")]
    InvalidRate {
        n: u64,
        which: &'static str,
        value: f64,
    },
    #[error("invalid chain: {0}")]
    Invalid(String),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error("chain table at line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Recurrent,
    Transient,
    Inconclusive,
}

/// Sup/inf of the test statistic over the tail `[n0, n_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStat {
    pub n0: u64,
    pub sup: f64,
    pub inf: f64,
    pub samples: usize,
}

/// Partial-sum growth diagnostics attached by [`classify_series`].
///
/// Sums are reported in log space so strongly biased chains cannot overflow
/// the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    pub terms: u64,
    pub log_partial_sum: f64,
    /// `ln(S_N) − ln(S_{N/2})`; near zero for convergent series.
    pub log_growth_last_half: f64,
}

/// A verdict with its witnesses and per-tail evidence.
///
/// Invariants: `Recurrent` carries `c < 1` when a witness constant exists
/// (the homogeneous recurrent branch has none); `Transient` carries `c > 1`.
/// In both cases the test inequality held at every sampled `n ≥ n0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    #[serde(rename = "c")]
    pub witness_c: Option<f64>,
    #[serde(rename = "n0")]
    pub witness_n0: Option<u64>,
    pub stats: Vec<TailStat>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub series: Option<SeriesDiagnostics>,
}

impl Verdict {
    pub fn is_conclusive(&self) -> bool {
        self.label != Label::Inconclusive
    }
}

/// Positivity floor for the `1 + c/n` ratio family at the few small `n`
/// where the formula would go non-positive; the tail is never touched.
const RATIO_FLOOR: f64 = 0.05;

/// A homogeneous birth-and-death chain: birth rates `λ_n` (`n ≥ 0`) and
/// death rates `μ_n` (`n ≥ 1`), all positive.
///
/// Every verdict and oracle in this crate depends on the rates only through
/// the ratios `λ_n/μ_n`, so a common positive scale is irrelevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainSpec {
    /// `λ_n = birth`, `μ_n = death` for every `n`.
    Constant { birth: f64, death: f64 },
    /// `λ_n/μ_n = 1 + c/n` with `μ_n = scale`; the ratio is floored at 0.05
    /// for the small `n` where `1 + c/n ≤ 0` (the tail is never touched).
    RatioFamily { c: f64, scale: f64 },
    /// The homogeneous chain frozen on the diagonal `t = n²`:
    /// `λ_n = 1/2 + φ(n, n²)`, `μ_n = 1/2 − φ(n, n²)`.
    Diagonal { drift: DriftFunction },
    /// Explicit leading rates; `birth[n]` is `λ_n`, `death[n]` is `μ_{n+1}`.
    /// Past the table the last pair extends unchanged, so the asymptotic
    /// rates have positive limits by construction.
    Tabulated { birth: Vec<f64>, death: Vec<f64> },
}

impl ChainSpec {
    /// The simple random walk chain, `λ = μ = 1/2`.
    pub fn symmetric() -> Self {
        Self::Constant {
            birth: 0.5,
            death: 0.5,
        }
    }

    pub fn constant(birth: f64, death: f64) -> Result<Self, ChainError> {
        check_rate(0, "birth", birth)?;
        check_rate(1, "death", death)?;
        Ok(Self::Constant { birth, death })
    }

    /// `λ_n/μ_n = 1 + c/n` at unit scale.
    pub fn ratio_family(c: f64) -> Result<Self, ChainError> {
        if !c.is_finite() {
            return Err(ChainError::Invalid(format!("ratio constant c = {c} must be finite")));
        }
        Ok(Self::RatioFamily { c, scale: 1.0 })
    }

    pub fn diagonal_of(drift: DriftFunction) -> Self {
        Self::Diagonal { drift }
    }

    pub fn tabulated(birth: Vec<f64>, death: Vec<f64>) -> Result<Self, ChainError> {
        if birth.is_empty() || death.is_empty() {
            return Err(ChainError::Invalid("tabulated chain must have at least one rate of each kind".into()));
        }
        for (i, b) in birth.iter().enumerate() {
            check_rate(i as u64, "birth", *b)?;
        }
        for (i, d) in death.iter().enumerate() {
            check_rate(i as u64 + 1, "death", *d)?;
        }
        Ok(Self::Tabulated { birth, death })
    }

    /// Parses `n,lambda,mu` rows for n = 0, 1, 2, … (the `mu` entry of the
    /// n = 0 row is ignored; state 0 has no death rate).
    pub fn from_csv_str(text: &str) -> Result<Self, ChainError> {
        let mut rows: Vec<(u64, f64, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(ChainError::Table {
                    line: idx + 1,
                    reason: format!("expected 3 fields `n,lambda,mu`, got {}", fields.len()),
                });
            }
            match (
                fields[0].parse::<u64>(),
                fields[1].parse::<f64>(),
                fields[2].parse::<f64>(),
            ) {
                (Ok(n), Ok(l), Ok(m)) => rows.push((n, l, m)),
                _ if idx == 0 => continue,
                _ => {
                    return Err(ChainError::Table {
                        line: idx + 1,
                        reason: format!("could not parse `{line}` as n,lambda,mu"),
                    })
                }
            }
        }
        rows.sort_by_key(|r| r.0);
        if rows.first().map(|r| r.0) != Some(0) || rows.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
            return Err(ChainError::Table {
                line: 0,
                reason: "rows must cover n = 0, 1, 2, … without gaps".into(),
            });
        }
        let birth: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let death: Vec<f64> = rows.iter().skip(1).map(|r| r.2).collect();
        Self::tabulated(birth, death)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, ChainError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Birth rate `λ_n`, `n ≥ 0`.
    pub fn birth(&self, n: u64) -> Result<f64, ChainError> {
        let value = match self {
            Self::Constant { birth, .. } => *birth,
            Self::RatioFamily { c, scale } => {
                if n == 0 {
                    *scale
                } else {
                    scale * ratio_at(*c, n)
                }
            }
            Self::Diagonal { drift } => 0.5 + drift.diagonal(n.max(1))?,
            Self::Tabulated { birth, .. } => birth[(n as usize).min(birth.len() - 1)],
        };
        check_rate(n, "birth", value)?;
        Ok(value)
    }

    /// Death rate `μ_n`, `n ≥ 1`.
    pub fn death(&self, n: u64) -> Result<f64, ChainError> {
        if n == 0 {
            return Err(ChainError::Invalid("death rate is undefined at n = 0".into()));
        }
        let value = match self {
            Self::Constant { death, .. } => *death,
            Self::RatioFamily { scale, .. } => *scale,
            Self::Diagonal { drift } => 0.5 - drift.diagonal(n)?,
            Self::Tabulated { death, .. } => death[(n as usize - 1).min(death.len() - 1)],
        };
        check_rate(n, "death", value)?;
        Ok(value)
    }

    /// `λ_n/μ_n`, `n ≥ 1`.
    pub fn ratio(&self, n: u64) -> Result<f64, ChainError> {
        if n == 0 {
            return Err(ChainError::Invalid("jump ratio is undefined at n = 0".into()));
        }
        match self {
            // Exact by construction; avoids a same-value division.
            Self::RatioFamily { c, .. } => Ok(ratio_at(*c, n)),
            _ => Ok(self.birth(n)? / self.death(n)?),
        }
    }

    /// `ln(μ_n/λ_n)`, the increment of the log ladder product.
    pub fn log_ratio_step(&self, n: u64) -> Result<f64, ChainError> {
        Ok((self.death(n)? / self.birth(n)?).ln())
    }

    /// Rescales every rate by the same positive factor.
    pub fn scaled(&self, factor: f64) -> Result<Self, ChainError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(ChainError::Invalid(format!("scale factor {factor} must be positive")));
        }
        Ok(match self {
            Self::Constant { birth, death } => Self::Constant {
                birth: birth * factor,
                death: death * factor,
            },
            Self::RatioFamily { c, scale } => Self::RatioFamily {
                c: *c,
                scale: scale * factor,
            },
            Self::Diagonal { .. } => {
                return Err(ChainError::Invalid(
                    "diagonal chains are normalized to total rate 1 and cannot be rescaled".into(),
                ))
            }
            Self::Tabulated { birth, death } => Self::Tabulated {
                birth: birth.iter().map(|b| b * factor).collect(),
                death: death.iter().map(|d| d * factor).collect(),
            },
        })
    }

    /// The time-constant walk drift with this chain's jump ratios:
    /// `φ_n = λ_n/(λ_n + μ_n) − 1/2`, tabulated for `n = 1..=n_max` and
    /// constant-extended past it. Requires `λ_n ≥ μ_n` (a non-negative bias).
    pub fn as_walk_drift(&self, n_max: u64) -> Result<DriftFunction, ChainError> {
        if n_max == 0 {
            return Err(ChainError::Invalid("n_max must be at least 1".into()));
        }
        let mut phis = Vec::with_capacity(n_max as usize);
        for n in 1..=n_max {
            let birth = self.birth(n)?;
            let death = self.death(n)?;
            let phi = birth / (birth + death) - 0.5;
            if phi < 0.0 {
                return Err(ChainError::Invalid(format!(
                    "chain is negatively biased at n = {n} (lambda < mu); not representable as a walk drift"
                )));
            }
            phis.push(phi);
        }
        let table = TabulatedDrift::new(
            (1..=n_max).collect(),
            vec![1.0],
            phis,
            TailRule::ConstantExtend,
        )?;
        Ok(DriftFunction::tabulated(table))
    }
}

fn ratio_at(c: f64, n: u64) -> f64 {
    let r = 1.0 + c / n as f64;
    if r > RATIO_FLOOR {
        r
    } else {
        RATIO_FLOOR
    }
}

fn check_rate(n: u64, which: &'static str, value: f64) -> Result<(), ChainError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ChainError::InvalidRate { n, which, value })
    }
}

/// Evaluation points (log-spaced, denser over the last two octaves) and tail
/// candidates (ratio 2 from `n_lo`) for a scan of `[n_lo, n_hi]`.
fn scan_grid(n_lo: u64, n_hi: u64) -> (Vec<u64>, Vec<u64>) {
    let mut candidates = vec![n_lo];
    let mut c = n_lo.saturating_mul(2);
    while c <= n_hi / 2 {
        candidates.push(c);
        c = c.saturating_mul(2);
    }

    let dense_from = n_hi / 4;
    let mut points = BTreeSet::new();
    points.extend(candidates.iter().copied());
    points.insert(n_hi);
    let mut lo = n_lo;
    while lo < n_hi {
        let hi = (lo.saturating_mul(2)).min(n_hi);
        let ppo = if hi > dense_from {
            POINTS_PER_LAST_OCTAVES
        } else {
            POINTS_PER_OCTAVE
        };
        let (lof, hif) = (lo as f64, hi as f64);
        for j in 0..ppo {
            let x = lof * (hif / lof).powf(j as f64 / ppo as f64);
            points.insert((x.round() as u64).clamp(lo, hi));
        }
        lo = hi;
    }
    (points.into_iter().collect(), candidates)
}

fn check_scan_args(n_lo: u64, n_hi: u64, margin: f64) -> Result<(), ClassifyError> {
    if n_lo < 1 || n_lo >= n_hi {
        return Err(ClassifyError::InvalidScan(format!(
            "need 1 <= n_lo < n_hi, got n_lo = {n_lo}, n_hi = {n_hi}"
        )));
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(ClassifyError::InvalidScan(format!(
            "margin must be positive, got {margin}"
        )));
    }
    Ok(())
}

/// Sup/inf over each candidate tail, built in one descending pass.
fn tail_stats(values: &[(u64, f64)], candidates: &[u64]) -> Vec<TailStat> {
    let mut stats = Vec::with_capacity(candidates.len());
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut count = 0usize;
    let mut vi = values.len();
    for &n0 in candidates.iter().rev() {
        while vi > 0 && values[vi - 1].0 >= n0 {
            let v = values[vi - 1].1;
            sup = sup.max(v);
            inf = inf.min(v);
            count += 1;
            vi -= 1;
        }
        stats.push(TailStat {
            n0,
            sup,
            inf,
            samples: count,
        });
    }
    stats.reverse();
    stats
}

/// First candidate whose whole tail clears a bound decides; candidates are
/// scanned in ascending `n0` so the witness is the earliest tail start.
fn scan_verdict(
    stats: Vec<TailStat>,
    recurrent_cut: f64,
    transient_cut: f64,
    witness_c_on_recurrent: bool,
) -> Verdict {
    for st in &stats {
        if st.samples > 0 && st.sup <= recurrent_cut {
            return Verdict {
                label: Label::Recurrent,
                witness_c: witness_c_on_recurrent.then_some(st.sup),
                witness_n0: Some(st.n0),
                stats,
                series: None,
            };
        }
    }
    for st in &stats {
        if st.samples > 0 && st.inf >= transient_cut {
            return Verdict {
                label: Label::Transient,
                witness_c: Some(st.inf),
                witness_n0: Some(st.n0),
                stats,
                series: None,
            };
        }
    }
    Verdict {
        label: Label::Inconclusive,
        witness_c: None,
        witness_n0: None,
        stats,
        series: None,
    }
}

/// The diagonal test for the time-inhomogeneous walk driven by `f`.
///
/// Computes `s(n) = 4 n φ(n, n²)` over a geometric grid in `[n_lo, n_hi]`.
/// A tail with `sup s ≤ 1 − margin` is recurrent (witness `c` = that sup), a
/// tail with `inf s ≥ 1 + margin` is transient; anything else is
/// inconclusive. Drift domain errors propagate: callers classifying families
/// whose head violates `φ < 1/2` must start the scan past it.
pub fn classify_diagonal(
    f: &DriftFunction,
    n_lo: u64,
    n_hi: u64,
    margin: f64,
) -> Result<Verdict, ClassifyError> {
    check_scan_args(n_lo, n_hi, margin)?;
    let (points, candidates) = scan_grid(n_lo, n_hi);
    let mut values = Vec::with_capacity(points.len());
    for n in points {
        let s = 4.0 * n as f64 * f.diagonal(n)?;
        values.push((n, s));
    }
    Ok(scan_verdict(
        tail_stats(&values, &candidates),
        1.0 - margin,
        1.0 + margin,
        true,
    ))
}

/// The homogeneous ratio test on `r(n) = n (λ_n/μ_n − 1)`.
///
/// Transient when a tail has `r(n) ≥ c ≥ 1 + margin`; recurrent when a tail
/// has `r(n) ≤ 1` (the literal marginless bound, so no witness `c` is
/// reported on that side).
pub fn classify_ratio(
    chain: &ChainSpec,
    n_lo: u64,
    n_hi: u64,
    margin: f64,
) -> Result<Verdict, ClassifyError> {
    check_scan_args(n_lo, n_hi, margin)?;
    let (points, candidates) = scan_grid(n_lo, n_hi);
    let mut values = Vec::with_capacity(points.len());
    for n in points {
        let r = n as f64 * (chain.ratio(n)? - 1.0);
        values.push((n, r));
    }
    Ok(scan_verdict(
        tail_stats(&values, &candidates),
        1.0 + RECURRENT_SLACK,
        1.0 + margin,
        false,
    ))
}

/// Log partial sums `ln S_m` of the ladder series, `m = 1..=n_terms`, where
/// `S_m = Σ_{n=1}^m Π_{k=1}^n μ_k/λ_k`.
///
/// The products are cumulative sums of `ln(μ_k/λ_k)` and the outer sum keeps
/// a running maximum, so strongly biased chains cannot overflow
/// intermediates.
pub(crate) fn km_log_partial_sums(chain: &ChainSpec, n_terms: u64) -> Result<Vec<f64>, ChainError> {
    let mut out = Vec::with_capacity(n_terms as usize);
    let mut log_prod = 0.0;
    let mut peak = f64::NEG_INFINITY; // running max of the log terms
    let mut acc = 0.0; // Σ exp(log_term − peak)
    for n in 1..=n_terms {
        log_prod += chain.log_ratio_step(n)?;
        if log_prod > peak {
            acc *= (peak - log_prod).exp();
            peak = log_prod;
        }
        acc += (log_prod - peak).exp();
        out.push(peak + acc.ln());
    }
    Ok(out)
}

/// Partial sums `S_m` for `m = 1..=n_terms`, strictly increasing in `m`.
///
/// Values that exceed the double range come back as `inf`; use the verdict
/// functions (which work in log space throughout) for such chains.
pub fn karlin_mcgregor_partial_sums(
    chain: &ChainSpec,
    n_terms: u64,
) -> Result<Vec<f64>, ChainError> {
    Ok(km_log_partial_sums(chain, n_terms)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Raabe's statistic `R(n) = n (a_n/a_{n+1} − 1)` for the ladder terms
/// `a_n = Π_{k=1}^n μ_k/λ_k`, computed from the cumulative log products.
///
/// Algebraically `R(n) = n (λ_{n+1}/μ_{n+1} − 1)`; the series converges
/// (transience) when a tail has `R(n) ≥ c > 1` and diverges (recurrence)
/// when a tail has `R(n) ≤ 1`.
pub fn raabe_statistic(chain: &ChainSpec, n: u64) -> Result<f64, ChainError> {
    if n == 0 {
        return Err(ChainError::Invalid("Raabe statistic requires n >= 1".into()));
    }
    let mut log_a_n = 0.0;
    for k in 1..=n {
        log_a_n += chain.log_ratio_step(k)?;
    }
    let log_a_next = log_a_n + chain.log_ratio_step(n + 1)?;
    Ok(n as f64 * ((log_a_n - log_a_next).exp() - 1.0))
}

/// The series criterion: Raabe tail behavior plus partial-sum growth
/// diagnostics.
///
/// Agrees with [`classify_ratio`] whenever both are conclusive, since
/// `R(n) = r(n+1) · n/(n+1)`.
pub fn classify_series(
    chain: &ChainSpec,
    n_terms: u64,
    margin: f64,
) -> Result<Verdict, ClassifyError> {
    if n_terms < 100 {
        return Err(ClassifyError::InvalidScan(format!(
            "series scan needs at least 100 terms, got {n_terms}"
        )));
    }
    check_scan_args(1, n_terms, margin)?;

    // One pass over the cumulative log products gives every R(n).
    let scan_lo = 8u64.min(n_terms / 4).max(1);
    let mut values = Vec::with_capacity((n_terms - scan_lo) as usize);
    let mut log_prod = chain.log_ratio_step(1)?;
    let mut prev = log_prod;
    for n in 1..n_terms {
        log_prod += chain.log_ratio_step(n + 1)?;
        if n >= scan_lo {
            values.push((n, n as f64 * ((prev - log_prod).exp() - 1.0)));
        }
        prev = log_prod;
    }
    let mut candidates = vec![scan_lo];
    let mut c = scan_lo * 2;
    while c <= (n_terms - 1) / 2 {
        candidates.push(c);
        c *= 2;
    }

    let mut verdict = scan_verdict(
        tail_stats(&values, &candidates),
        1.0 + RECURRENT_SLACK,
        1.0 + margin,
        false,
    );
    let log_sums = km_log_partial_sums(chain, n_terms)?;
    verdict.series = Some(SeriesDiagnostics {
        terms: n_terms,
        log_partial_sum: log_sums[n_terms as usize - 1],
        log_growth_last_half: log_sums[n_terms as usize - 1] - log_sums[n_terms as usize / 2 - 1],
    });
    Ok(verdict)
}
