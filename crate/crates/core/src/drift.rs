//! Drift functions `φ(n, t)` and the birth/death rate schedules they induce.
//!
//! A drift function is the single source of all transition rates in this
//! crate. In state `n ≥ 1` at time `t` the walk steps up with probability
//! `1/2 + φ(n, t)` and down with probability `1/2 − φ(n, t)`; state 0 forces
//! an up-step. A drift is valid at `(n, t)` when `0 ≤ φ(n, t) < 1/2`, so both
//! step probabilities stay in `(0, 1]`, and it must be non-increasing in `t`
//! for fixed `n`.
//!
//! `t` is a positive real throughout: the discrete walk evaluates it at
//! integers, the continuous embedding at jump times, and both share one
//! function.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exclusive upper bound for a drift value; `φ = 1/2` would zero the death rate.
pub const MAX_DRIFT: f64 = 0.5;

/// Errors from drift construction and evaluation.
#[derive(Debug, Error)]
pub enum DriftError {
    /// The family's formula produced a value outside `[0, 1/2)` at `(n, t)`.
    /// This signals an invalid model, not a numeric bug.
    #[error("drift out of range at (n={n}, t={t}): phi = {value} is not in [0, 0.5)")]
    Domain { n: u64, t: f64, value: f64 },
    /// A constructor argument is unusable.
    #[error("invalid drift parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    /// Evaluation time must be positive and finite.
    #[error("time must be positive and finite, got t = {0}")]
    BadTime(f64),
    /// A tabulated grid file could not be parsed.
    #[error("tabulated drift at line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn param_err(name: &'static str, reason: impl Into<String>) -> DriftError {
    DriftError::Parameter {
        name,
        reason: reason.into(),
    }
}

/// `x^e` with fast paths for the exponents the built-in families use most.
fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 0.5 {
        x.sqrt()
    } else {
        x.powf(e)
    }
}

/// Rule for tabulated lookups past the grid's largest `n` or `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// Extend the boundary value unchanged.
    ConstantExtend,
    /// Treat the drift as zero (a symmetric tail).
    Zero,
}

/// Drift values on a finite `(n, t)` grid with nearest-lower-point lookup.
///
/// Lookups clamp to the first grid point below the grid's minimum and apply
/// the [`TailRule`] above its maximum, per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDrift {
    n_grid: Vec<u64>,
    t_grid: Vec<f64>,
    /// Row-major: `values[i * t_grid.len() + j]` is `φ(n_grid[i], t_grid[j])`.
    values: Vec<f64>,
    tail: TailRule,
}

impl TabulatedDrift {
    pub fn new(
        n_grid: Vec<u64>,
        t_grid: Vec<f64>,
        values: Vec<f64>,
        tail: TailRule,
    ) -> Result<Self, DriftError> {
        if n_grid.is_empty() || t_grid.is_empty() {
            return Err(param_err("grid", "tabulated grid must be non-empty"));
        }
        if !n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(param_err("grid", "n values must be strictly increasing"));
        }
        if !t_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(param_err("grid", "t values must be strictly increasing"));
        }
        if t_grid[0] <= 0.0 || !t_grid.iter().all(|t| t.is_finite()) {
            return Err(param_err("grid", "t values must be positive and finite"));
        }
        if values.len() != n_grid.len() * t_grid.len() {
            return Err(param_err(
                "grid",
                format!(
                    "expected {} values for a {}x{} grid, got {}",
                    n_grid.len() * t_grid.len(),
                    n_grid.len(),
                    t_grid.len(),
                    values.len()
                ),
            ));
        }
        if let Some(bad) = values
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v >= MAX_DRIFT)
        {
            return Err(param_err(
                "grid",
                format!("tabulated value {bad} is not in [0, 0.5)"),
            ));
        }
        Ok(Self {
            n_grid,
            t_grid,
            values,
            tail,
        })
    }

    /// Parses `n,t,phi` rows. A non-numeric first row is treated as a header.
    /// The rows must cover the full cartesian grid of their n and t values.
    pub fn from_csv_str(text: &str, tail: TailRule) -> Result<Self, DriftError> {
        let mut rows: Vec<(u64, f64, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(DriftError::Table {
                    line: idx + 1,
                    reason: format!("expected 3 fields `n,t,phi`, got {}", fields.len()),
                });
            }
            let parsed = (
                fields[0].parse::<u64>(),
                fields[1].parse::<f64>(),
                fields[2].parse::<f64>(),
            );
            match parsed {
                (Ok(n), Ok(t), Ok(phi)) => rows.push((n, t, phi)),
                _ if idx == 0 => continue, // header row
                _ => {
                    return Err(DriftError::Table {
                        line: idx + 1,
                        reason: format!("could not parse `{line}` as n,t,phi"),
                    })
                }
            }
        }
        if rows.is_empty() {
            return Err(DriftError::Table {
                line: 0,
                reason: "no data rows".into(),
            });
        }
        let n_grid: Vec<u64> = rows.iter().map(|r| r.0).collect::<BTreeSet<_>>().into_iter().collect();
        let mut t_grid: Vec<f64> = rows.iter().map(|r| r.1).collect();
        t_grid.sort_by(|a, b| a.total_cmp(b));
        t_grid.dedup();
        let mut values = vec![f64::NAN; n_grid.len() * t_grid.len()];
        for (n, t, phi) in &rows {
            let i = n_grid.binary_search(n).expect("n in grid");
            let j = t_grid
                .binary_search_by(|x| x.total_cmp(t))
                .expect("t in grid");
            values[i * t_grid.len() + j] = *phi;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(DriftError::Table {
                line: 0,
                reason: "grid is incomplete: every (n, t) pair must have a phi value".into(),
            });
        }
        Self::new(n_grid, t_grid, values, tail)
    }

    pub fn from_csv_path(path: &Path, tail: TailRule) -> Result<Self, DriftError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?, tail)
    }

    fn lookup(&self, n: u64, t: f64) -> f64 {
        let beyond_n = n > *self.n_grid.last().unwrap();
        let beyond_t = t > *self.t_grid.last().unwrap();
        if (beyond_n || beyond_t) && self.tail == TailRule::Zero {
            return 0.0;
        }
        let i = match self.n_grid.binary_search(&n) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let j = match self.t_grid.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(j) => j,
            Err(0) => 0,
            Err(j) => j - 1,
        };
        self.values[i * self.t_grid.len() + j]
    }
}

/// A drift function `φ(n, t)`.
///
/// The closed-form families:
/// * `PowerLaw`: `φ(n, t) = ρ nᵅ / (2 tᵝ)` with `ρ > 0`, `β ≥ 0`;
/// * `Exponential`: `φ(n, t) = exp(α n − β t)` with `β > 0`;
/// * `Constant`: `φ(n, t) = v` with `0 ≤ v < 1/2`.
///
/// Families with `β < 0` would increase in `t` and are rejected at
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DriftFunction {
    PowerLaw { rho: f64, alpha: f64, beta: f64 },
    Exponential { alpha: f64, beta: f64 },
    Constant { value: f64 },
    Tabulated(TabulatedDrift),
}

impl DriftFunction {
    pub fn power_law(rho: f64, alpha: f64, beta: f64) -> Result<Self, DriftError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(param_err("rho", format!("must be a positive real, got {rho}")));
        }
        if !alpha.is_finite() {
            return Err(param_err("alpha", format!("must be finite, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(param_err(
                "beta",
                format!("must be >= 0 (drifts increasing in t are unsupported), got {beta}"),
            ));
        }
        Ok(Self::PowerLaw { rho, alpha, beta })
    }

    pub fn exponential(alpha: f64, beta: f64) -> Result<Self, DriftError> {
        if !alpha.is_finite() {
            return Err(param_err("alpha", format!("must be finite, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(param_err("beta", format!("must be positive, got {beta}")));
        }
        Ok(Self::Exponential { alpha, beta })
    }

    pub fn constant(value: f64) -> Result<Self, DriftError> {
        if !(value.is_finite() && (0.0..MAX_DRIFT).contains(&value)) {
            return Err(param_err("value", format!("must be in [0, 0.5), got {value}")));
        }
        Ok(Self::Constant { value })
    }

    pub fn tabulated(table: TabulatedDrift) -> Self {
        Self::Tabulated(table)
    }

    /// Evaluates `φ(n, t)`.
    ///
    /// Returns [`DriftError::Domain`] when the formula yields a value outside
    /// `[0, 1/2)` at `(n, t)`.
    pub fn evaluate(&self, n: u64, t: f64) -> Result<f64, DriftError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(DriftError::BadTime(t));
        }
        let value = match self {
            Self::PowerLaw { rho, alpha, beta } => {
                rho * pow(n as f64, *alpha) / (2.0 * pow(t, *beta))
            }
            Self::Exponential { alpha, beta } => (alpha * n as f64 - beta * t).exp(),
            Self::Constant { value } => *value,
            Self::Tabulated(table) => table.lookup(n, t),
        };
        if !value.is_finite() || !(0.0..MAX_DRIFT).contains(&value) {
            return Err(DriftError::Domain { n, t, value });
        }
        Ok(value)
    }

    /// `φ(n, n²)`, the quantity the diagonal recurrence test inspects.
    pub fn diagonal(&self, n: u64) -> Result<f64, DriftError> {
        if n == 0 {
            return Err(param_err("n", "diagonal evaluation requires n >= 1"));
        }
        let nf = n as f64;
        self.evaluate(n, nf * nf)
    }
}

/// Which drift invariant a sampled point violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `φ(n, t)` outside `[0, 1/2)`.
    OutOfRange,
    /// `φ(n, ·)` increased between two sampled times.
    IncreasedInTime,
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub n: u64,
    pub t: f64,
    pub value: f64,
    pub kind: ViolationKind,
}

/// Samples the invariants `0 ≤ φ < 1/2` and "non-increasing in t" over the
/// wedge `1 ≤ n ≤ t`, `n ≤ n_max`, `t ≤ t_max`.
///
/// For each `n`, `t` runs over a geometric grid of ratio 2 starting at `n`
/// (symbolic monotonicity checks are impossible for arbitrary drifts, so
/// sampling is the contract). Violations are data, not errors: an empty list
/// means no sampled point broke an invariant.
pub fn validate(f: &DriftFunction, n_max: u64, t_max: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        let mut prev: Option<f64> = None;
        for t in geometric_times(n as f64, t_max) {
            match f.evaluate(n, t) {
                Ok(value) => {
                    if let Some(p) = prev {
                        if value > p {
                            out.push(Violation {
                                n,
                                t,
                                value,
                                kind: ViolationKind::IncreasedInTime,
                            });
                        }
                    }
                    prev = Some(value);
                }
                Err(DriftError::Domain { value, .. }) => {
                    out.push(Violation {
                        n,
                        t,
                        value,
                        kind: ViolationKind::OutOfRange,
                    });
                    prev = None;
                }
                Err(_) => unreachable!("t is positive and finite on the sample grid"),
            }
        }
    }
    out
}

fn geometric_times(start: f64, t_max: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut t = start;
    while t <= t_max {
        ts.push(t);
        t *= 2.0;
    }
    if ts.last().is_none_or(|last| *last < t_max) && start <= t_max {
        ts.push(t_max);
    }
    ts
}

/// Birth/death rates induced by a drift: `birth = 1/2 + φ`, `death = 1/2 − φ`.
///
/// The pair always sums to 1 exactly: `death` is computed as `1 − birth`,
/// which is exact in IEEE arithmetic for `birth ∈ [1/2, 1]`.
#[derive(Debug, Clone)]
pub struct RateSchedule {
    drift: DriftFunction,
}

impl RateSchedule {
    pub fn new(drift: DriftFunction) -> Self {
        Self { drift }
    }

    pub fn drift(&self) -> &DriftFunction {
        &self.drift
    }

    /// `(birth, death)` at `(n, t)` for `n ≥ 1`.
    pub fn rates(&self, n: u64, t: f64) -> Result<(f64, f64), DriftError> {
        let phi = self.drift.evaluate(n, t)?;
        let birth = 0.5 + phi;
        let death = 1.0 - birth;
        if death <= 0.0 {
            // Only reachable when phi rounds within one ulp of 1/2.
            return Err(DriftError::Domain { n, t, value: phi });
        }
        Ok((birth, death))
    }

    pub fn birth(&self, n: u64, t: f64) -> Result<f64, DriftError> {
        Ok(self.rates(n, t)?.0)
    }

    pub fn death(&self, n: u64, t: f64) -> Result<f64, DriftError> {
        Ok(self.rates(n, t)?.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_evaluates_its_formula() {
        // rho * n^alpha / (2 t^beta)
        let f = DriftFunction::power_law(0.5, 1.0, 1.0).unwrap();
        assert_eq!(f.evaluate(4, 16.0).unwrap(), 0.5 * 4.0 / (2.0 * 16.0));
        assert_eq!(f.evaluate(4, 16.0).unwrap(), 0.0625);
    }

    #[test]
    fn constant_zero_is_zero_everywhere() {
        let f = DriftFunction::constant(0.0).unwrap();
        assert_eq!(f.evaluate(7, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn exponential_evaluates_its_formula() {
        let f = DriftFunction::exponential(1.0, 1.0).unwrap();
        let got = f.evaluate(2, 10.0).unwrap();
        let expected = (-8.0f64).exp(); // 3.3546e-4, checked against a table
        assert!((got - expected).abs() < 1e-18);
        assert!((got - 3.3546e-4).abs() < 1e-8);
    }

    #[test]
    fn diagonal_matches_evaluate_bit_for_bit() {
        let fs = [
            DriftFunction::power_law(0.5, 1.0, 1.0).unwrap(),
            DriftFunction::power_law(1.0, 0.0, 0.5).unwrap(),
            DriftFunction::exponential(1.0, 1.0).unwrap(),
            DriftFunction::constant(0.25).unwrap(),
        ];
        for f in &fs {
            for n in [1u64, 2, 10, 25, 1000, 1 << 20] {
                let t = (n as f64) * (n as f64);
                match (f.diagonal(n), f.evaluate(n, t)) {
                    (Ok(d), Ok(e)) => assert_eq!(d.to_bits(), e.to_bits()),
                    (Err(_), Err(_)) => {} // families whose head is invalid at small n
                    (d, e) => panic!("diagonal/evaluate disagree at n = {n}: {d:?} vs {e:?}"),
                }
            }
        }
    }

    #[test]
    fn diagonal_values_of_the_sample_families() {
        // rho/(2n) on the alpha = beta = 1 family
        let f = DriftFunction::power_law(0.5, 1.0, 1.0).unwrap();
        assert!((f.diagonal(10).unwrap() - 0.025).abs() < 1e-15);
        // rho/(2n) again on the boundary family alpha = 0, beta = 1/2
        let f = DriftFunction::power_law(1.0, 0.0, 0.5).unwrap();
        assert!((f.diagonal(25).unwrap() - 0.02).abs() < 1e-15);
        // e^{alpha n - beta n^2}
        let f = DriftFunction::exponential(1.0, 1.0).unwrap();
        assert!((f.diagonal(5).unwrap() - (-20.0f64).exp()).abs() < 1e-22);
        assert!((f.diagonal(5).unwrap() - 2.061e-9).abs() < 1e-12);
    }

    #[test]
    fn domain_error_when_formula_leaves_range() {
        let f = DriftFunction::power_law(3.0, 1.0, 1.0).unwrap();
        match f.evaluate(10, 10.0) {
            Err(DriftError::Domain { value, .. }) => assert_eq!(value, 1.5),
            other => panic!("expected Domain error, got {other:?}"),
        }
        // 0^alpha for negative alpha is infinite
        let f = DriftFunction::power_law(1.0, -1.0, 0.0).unwrap();
        assert!(matches!(f.evaluate(0, 5.0), Err(DriftError::Domain { .. })));
    }

    #[test]
    fn bad_time_is_rejected() {
        let f = DriftFunction::constant(0.1).unwrap();
        assert!(matches!(f.evaluate(1, 0.0), Err(DriftError::BadTime(_))));
        assert!(matches!(f.evaluate(1, -3.0), Err(DriftError::BadTime(_))));
        assert!(matches!(f.evaluate(1, f64::NAN), Err(DriftError::BadTime(_))));
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(DriftFunction::power_law(0.0, 1.0, 1.0).is_err());
        assert!(DriftFunction::power_law(-0.5, 1.0, 1.0).is_err());
        assert!(DriftFunction::power_law(0.5, 1.0, -0.25).is_err());
        assert!(DriftFunction::exponential(1.0, 0.0).is_err());
        assert!(DriftFunction::constant(0.5).is_err());
        assert!(DriftFunction::constant(-0.1).is_err());
    }

    #[test]
    fn validate_flags_out_of_range_family() {
        let f = DriftFunction::power_law(3.0, 1.0, 1.0).unwrap();
        let violations = validate(&f, 10, 10.0);
        assert!(!violations.is_empty());
        assert!(violations
            .iter()
            .any(|v| v.n == 10 && v.t == 10.0 && v.value == 1.5 && v.kind == ViolationKind::OutOfRange));
    }

    #[test]
    fn validate_accepts_valid_families() {
        assert!(validate(&DriftFunction::constant(0.1).unwrap(), 20, 1000.0).is_empty());
        // rho n/(2t) < 1/2 on the wedge n <= t
        let f = DriftFunction::power_law(0.5, 1.0, 1.0).unwrap();
        assert!(validate(&f, 10, 100.0).is_empty());
    }

    #[test]
    fn validate_flags_non_monotone_tabulated() {
        let table = TabulatedDrift::new(
            vec![1],
            vec![1.0, 2.0, 4.0],
            vec![0.1, 0.3, 0.2],
            TailRule::ConstantExtend,
        )
        .unwrap();
        let f = DriftFunction::tabulated(table);
        let violations = validate(&f, 1, 4.0);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].kind, ViolationKind::IncreasedInTime);
        assert_eq!(violations[0].t, 2.0);
    }

    #[test]
    fn rates_sum_to_one_exactly() {
        let sched = RateSchedule::new(DriftFunction::power_law(0.9, 1.0, 1.0).unwrap());
        for n in 1..200u64 {
            let t = (n as f64) * 3.0;
            let (birth, death) = sched.rates(n, t).unwrap();
            assert_eq!(birth + death, 1.0);
            assert!(birth >= 0.5 && 0.5 >= death && death > 0.0);
        }
    }

    #[test]
    fn tabulated_lookup_uses_nearest_lower_point_and_tail_rule() {
        let table = TabulatedDrift::new(
            vec![1, 4],
            vec![1.0, 10.0],
            vec![0.4, 0.3, 0.2, 0.1],
            TailRule::ConstantExtend,
        )
        .unwrap();
        let f = DriftFunction::tabulated(table.clone());
        assert_eq!(f.evaluate(1, 1.0).unwrap(), 0.4);
        assert_eq!(f.evaluate(3, 5.0).unwrap(), 0.4); // floors to (1, 1.0)
        assert_eq!(f.evaluate(4, 10.0).unwrap(), 0.1);
        assert_eq!(f.evaluate(9, 99.0).unwrap(), 0.1); // constant extension
        let zero_tail = DriftFunction::tabulated(
            TabulatedDrift::new(vec![1, 4], vec![1.0, 10.0], vec![0.4, 0.3, 0.2, 0.1], TailRule::Zero)
                .unwrap(),
        );
        assert_eq!(zero_tail.evaluate(9, 99.0).unwrap(), 0.0);
        assert_eq!(zero_tail.evaluate(4, 10.0).unwrap(), 0.1);
    }

    #[test]
    fn tabulated_csv_round_trip() {
        let csv = "n,t,phi\n1,1.0,0.25\n1,4.0,0.125\n2,1.0,0.3\n2,4.0,0.15\n";
        let table = TabulatedDrift::from_csv_str(csv, TailRule::ConstantExtend).unwrap();
        let f = DriftFunction::tabulated(table);
        assert_eq!(f.evaluate(1, 1.0).unwrap(), 0.25);
        assert_eq!(f.evaluate(2, 4.0).unwrap(), 0.15);
        assert_eq!(f.evaluate(2, 3.9).unwrap(), 0.3);
    }

    #[test]
    fn tabulated_csv_rejects_incomplete_grids() {
        let csv = "1,1.0,0.25\n1,4.0,0.125\n2,1.0,0.3\n";
        assert!(TabulatedDrift::from_csv_str(csv, TailRule::Zero).is_err());
    }
}
