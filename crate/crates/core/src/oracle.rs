//! Exact finite computations for homogeneous chains, used as ground truth.
//!
//! Everything here reduces to the ladder products `Π μ_j/λ_j` (hitting
//! probabilities, escape/return analysis) or the detailed-balance products
//! `Π λ_{j−1}/μ_j` (stationary distributions). All products and sums run in
//! log space with running-max normalization: biased chains produce products
//! spanning hundreds of orders of magnitude well before the level bounds
//! these oracles are queried at.

use serde::Serialize;
use thiserror::Error;

use crate::classifier::{ChainError, ChainSpec};

/// Escape probabilities below this are treated as "effectively still
/// shrinking" when labeling a chain as infinitely returning.
pub const ESCAPE_TOLERANCE: f64 = 1e-6;

/// The escape probability at a doubled level must shrink by at least this
/// factor for the infinite-returns label.
pub const ESCAPE_DECAY_BOUND: f64 = 0.9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("invalid hitting problem: {0}")]
    InvalidProblem(String),
    #[error("unnormalized stationary masses still grow across the final octave at truncation {n_trunc}; the chain has no normalizable stationary distribution there")]
    NotNormalizable { n_trunc: u64 },
    #[error("truncation too small: {0}")]
    Truncation(String),
}

/// Reach `upper` before `lower`, starting from `start`, with both ends
/// absorbing.
#[derive(Debug, Clone, Serialize)]
pub struct HittingProblem {
    pub chain: ChainSpec,
    pub start: u64,
    pub lower: u64,
    pub upper: u64,
}

impl HittingProblem {
    pub fn new(chain: ChainSpec, start: u64, lower: u64, upper: u64) -> Result<Self, OracleError> {
        if lower >= upper {
            return Err(OracleError::InvalidProblem(format!(
                "need lower < upper, got lower = {lower}, upper = {upper}"
            )));
        }
        if start < lower || start > upper {
            return Err(OracleError::InvalidProblem(format!(
                "start = {start} must lie in [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            chain,
            start,
            lower,
            upper,
        })
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact probability of hitting `upper` before `lower` from `start`.
///
/// With `π_a = 1` and `π_n = Π_{j=a+1}^n μ_j/λ_j`, the answer is
/// `Σ_{n=a}^{k−1} π_n / Σ_{n=a}^{b−1} π_n`; the prefix structure makes it 0
/// at `start = lower` and exactly 1 at `start = upper`, and nondecreasing in
/// `start` between them.
pub fn hit_probability(problem: &HittingProblem) -> Result<f64, OracleError> {
    let (a, k, b) = (problem.lower, problem.start, problem.upper);
    let mut logs = Vec::with_capacity((b - a) as usize);
    let mut log_pi = 0.0;
    logs.push(log_pi); // π_a
    for n in (a + 1)..b {
        log_pi += problem.chain.log_ratio_step(n)?;
        logs.push(log_pi);
    }
    let num = log_sum_exp(&logs[..(k - a) as usize]);
    let den = log_sum_exp(&logs);
    Ok((num - den).exp())
}

/// Truncated stationary distribution with a geometric tail-mass estimate.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryDistribution {
    /// `P_n` for `n = 0..=n_trunc`, normalized over the truncation range.
    pub probabilities: Vec<f64>,
    pub n_trunc: u64,
    /// Geometric estimate of the mass beyond `n_trunc`, relative to the
    /// truncated total.
    pub tail_mass_bound: f64,
}

/// Solves the detailed-balance system on `0..=n_trunc`:
/// `P_n ∝ Π_{k=1}^n λ_{k−1}/μ_k`.
///
/// Fails with [`OracleError::NotNormalizable`] when the unnormalized masses
/// still grow across the final octave of the range (summed per octave, so
/// oscillating rates cannot fool a single-term check).
pub fn stationary(chain: &ChainSpec, n_trunc: u64) -> Result<StationaryDistribution, OracleError> {
    if n_trunc < 8 {
        return Err(OracleError::Truncation(format!(
            "need n_trunc >= 8 for the growth check, got {n_trunc}"
        )));
    }
    let len = n_trunc as usize + 1;
    let mut log_mass = Vec::with_capacity(len);
    let mut lm = 0.0;
    log_mass.push(lm);
    for n in 1..=n_trunc {
        lm += (chain.birth(n - 1)? / chain.death(n)?).ln();
        log_mass.push(lm);
    }
    let peak = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let masses: Vec<f64> = log_mass.iter().map(|l| (l - peak).exp()).collect();

    let octave = |from: u64, to: u64| -> f64 { masses[from as usize..=to as usize].iter().sum() };
    let last = octave(n_trunc / 2 + 1, n_trunc);
    let prev = octave(n_trunc / 4 + 1, n_trunc / 2);
    if last >= prev {
        return Err(OracleError::NotNormalizable { n_trunc });
    }

    let total: f64 = masses.iter().sum();
    let probabilities: Vec<f64> = masses.iter().map(|m| m / total).collect();
    let ratio = masses[len - 1] / masses[len - 2];
    let tail_mass_bound = if ratio < 1.0 {
        masses[len - 1] * ratio / (1.0 - ratio) / total
    } else {
        f64::MAX // growth check above makes this unreachable in practice
    };
    Ok(StationaryDistribution {
        probabilities,
        n_trunc,
        tail_mass_bound,
    })
}

/// Largest relative residual of the balance system under `dist`:
/// interior `|P_{n+1} μ_{n+1} + P_{n−1} λ_{n−1} − P_n (λ_n + μ_n)|` for
/// `0 < n < n_trunc` plus the boundary `|P_1 μ_1 − P_0 λ_0|`, each divided by
/// the largest flow term entering it (which makes the result invariant under
/// a common rescaling of all rates).
pub fn balance_residual(
    dist: &StationaryDistribution,
    chain: &ChainSpec,
) -> Result<f64, OracleError> {
    let p = &dist.probabilities;
    if p.len() != dist.n_trunc as usize + 1 || p.len() < 2 {
        return Err(OracleError::Truncation(
            "distribution length does not match its truncation level".into(),
        ));
    }
    let boundary_in = p[1] * chain.death(1)?;
    let boundary_out = p[0] * chain.birth(0)?;
    let mut worst = (boundary_in - boundary_out).abs() / boundary_in.max(boundary_out).max(f64::MIN_POSITIVE);
    for n in 1..dist.n_trunc as usize {
        let nn = n as u64;
        let inflow_up = p[n + 1] * chain.death(nn + 1)?;
        let inflow_down = p[n - 1] * chain.birth(nn - 1)?;
        let outflow = p[n] * (chain.birth(nn)? + chain.death(nn)?);
        let scale = inflow_up.max(inflow_down).max(outflow).max(f64::MIN_POSITIVE);
        worst = worst.max((inflow_up + inflow_down - outflow).abs() / scale);
    }
    Ok(worst)
}

/// Escape/return analysis for one excursion from 0.
#[derive(Debug, Clone, Serialize)]
pub struct ReturnAnalysis {
    /// The level the escape probability was evaluated at.
    pub horizon_states: u64,
    /// `P(hit horizon_states before 0 | start 1)`.
    pub escape_probability: f64,
    /// The same at twice the level, for the convergence diagnostic.
    pub escape_probability_doubled: f64,
    /// `escape_probability_doubled / escape_probability`; absent when the
    /// escape probability underflowed to zero.
    pub escape_decay_ratio: Option<f64>,
    /// `1 − escape_probability`: the chance one excursion returns to 0.
    pub return_probability: f64,
    /// Diagnostic label: the escape probability is below
    /// [`ESCAPE_TOLERANCE`] and still shrinking geometrically when the level
    /// doubles. Evidence of recurrence, not a proof.
    pub infinite_returns: bool,
    /// Expected number of completed excursions, `(1 − esc)/esc`; absent when
    /// the diagnostics point at infinitely many.
    pub expected_excursions: Option<f64>,
}

/// Return-probability analysis: escape probability at `horizon_states` (and
/// at double that, for the shrinking check), via the exact hitting formula.
pub fn expected_returns(chain: &ChainSpec, horizon_states: u64) -> Result<ReturnAnalysis, OracleError> {
    if horizon_states < 2 {
        return Err(OracleError::Truncation(format!(
            "need horizon_states >= 2, got {horizon_states}"
        )));
    }
    let b = horizon_states;
    let escape = hit_probability(&HittingProblem::new(chain.clone(), 1, 0, b)?)?;
    let escape_doubled = hit_probability(&HittingProblem::new(chain.clone(), 1, 0, 2 * b)?)?;
    let decay = (escape > 0.0).then(|| escape_doubled / escape);
    // relative slack so a log-space round-off at the threshold cannot flip the label
    let infinite_returns =
        escape <= ESCAPE_TOLERANCE * (1.0 + 1e-9) && decay.is_none_or(|r| r < ESCAPE_DECAY_BOUND);
    Ok(ReturnAnalysis {
        horizon_states: b,
        escape_probability: escape,
        escape_probability_doubled: escape_doubled,
        escape_decay_ratio: decay,
        return_probability: 1.0 - escape,
        infinite_returns,
        expected_excursions: (!infinite_returns && escape > 0.0).then(|| (1.0 - escape) / escape),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::karlin_mcgregor_partial_sums;

    #[test]
    fn symmetric_ruin_is_linear() {
        let p = HittingProblem::new(ChainSpec::symmetric(), 10, 0, 50).unwrap();
        assert!((hit_probability(&p).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn boundaries_are_exact() {
        let chain = ChainSpec::ratio_family(1.3).unwrap();
        let at = |k| hit_probability(&HittingProblem::new(chain.clone(), k, 3, 40).unwrap()).unwrap();
        assert_eq!(at(3), 0.0);
        assert_eq!(at(40), 1.0);
    }

    #[test]
    fn two_state_ladder_solved_by_hand() {
        // a = 0, b = 2, k = 1, lambda_1/mu_1 = 2: the one-unknown system
        // h_1 = (lambda h_2 + mu h_0)/(lambda + mu) gives h_1 = 2/3.
        let chain = ChainSpec::constant(2.0, 1.0).unwrap();
        let p = HittingProblem::new(chain, 1, 0, 2).unwrap();
        assert!((hit_probability(&p).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn hitting_problem_rejects_bad_bounds() {
        assert!(HittingProblem::new(ChainSpec::symmetric(), 1, 5, 5).is_err());
        assert!(HittingProblem::new(ChainSpec::symmetric(), 9, 0, 5).is_err());
    }

    #[test]
    fn mm1_stationary_matches_geometric_closed_form() {
        // lambda = p < mu = q: P_n = (1 − r) r^n with r = p/q.
        let chain = ChainSpec::constant(1.0, 2.0).unwrap();
        let dist = stationary(&chain, 100).unwrap();
        let r: f64 = 0.5;
        for (n, p_n) in dist.probabilities.iter().enumerate() {
            let expected = (1.0 - r) * r.powi(n as i32);
            assert!(
                (p_n - expected).abs() < 1e-12,
                "P_{n} = {p_n}, expected {expected}"
            );
        }
        let total: f64 = dist.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(dist.tail_mass_bound < 1e-29);
        assert!(balance_residual(&dist, &chain).unwrap() < 1e-12);
    }

    #[test]
    fn null_recurrent_chain_is_not_normalizable() {
        assert!(matches!(
            stationary(&ChainSpec::symmetric(), 256),
            Err(OracleError::NotNormalizable { .. })
        ));
    }

    #[test]
    fn uniform_distribution_balances_a_symmetric_segment() {
        let n = 32u64;
        let dist = StationaryDistribution {
            probabilities: vec![1.0 / (n as f64 + 1.0); n as usize + 1],
            n_trunc: n,
            tail_mass_bound: 0.0,
        };
        // Interior flows cancel exactly; only the reflecting boundary differs.
        let p = &dist.probabilities;
        for i in 1..n as usize {
            let res = p[i + 1] * 0.5 + p[i - 1] * 0.5 - p[i] * 1.0;
            assert_eq!(res, 0.0);
        }
    }

    #[test]
    fn perturbed_distribution_has_visible_residual() {
        let chain = ChainSpec::constant(1.0, 2.0).unwrap();
        let mut dist = stationary(&chain, 100).unwrap();
        assert!(balance_residual(&dist, &chain).unwrap() < 1e-12);
        dist.probabilities[0] += 0.01;
        let total: f64 = dist.probabilities.iter().sum();
        for p in &mut dist.probabilities {
            *p /= total;
        }
        assert!(balance_residual(&dist, &chain).unwrap() > 1e-3);
    }

    #[test]
    fn escape_matches_ladder_partial_sums() {
        // escape(b) = 1/(1 + S_{b−1}) where S is the ladder series.
        for c in [-1.5, 0.0, 1.0, 2.0] {
            let chain = ChainSpec::ratio_family(c).unwrap();
            let b = 1000u64;
            let analysis = expected_returns(&chain, b).unwrap();
            let sums = karlin_mcgregor_partial_sums(&chain, b - 1).unwrap();
            let expected = 1.0 / (1.0 + sums[b as usize - 2]);
            let rel = (analysis.escape_probability - expected).abs() / expected;
            assert!(rel < 1e-10, "c = {c}: {} vs {expected}", analysis.escape_probability);
        }
    }

    #[test]
    fn telescoping_family_escape_approaches_one_half() {
        // S_inf = 1 for the 1 + 2/n family, so escape → 1/(1 + 1) = 1/2.
        let chain = ChainSpec::ratio_family(2.0).unwrap();
        let analysis = expected_returns(&chain, 1000).unwrap();
        let expected = 1.0 / (2.0 - 2.0 / 1001.0);
        assert!((analysis.escape_probability - expected).abs() < 1e-12);
        assert!(!analysis.infinite_returns);
        assert!((analysis.return_probability + analysis.escape_probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_chain_reads_as_infinitely_returning() {
        let analysis = expected_returns(&ChainSpec::symmetric(), 1_000_000).unwrap();
        assert!((analysis.escape_probability - 1e-6).abs() < 1e-12);
        assert!((analysis.return_probability - (1.0 - 1e-6)).abs() < 1e-12);
        assert!(analysis.infinite_returns);
        assert!((analysis.escape_decay_ratio.unwrap() - 0.5).abs() < 1e-9);
        assert!(analysis.expected_excursions.is_none());
    }

    #[test]
    fn harmonic_family_escape_vanishes() {
        // S diverges, so escape(b) = 1/(1 + S_{b−1}) → 0.
        let chain = ChainSpec::ratio_family(1.0).unwrap();
        let a1 = expected_returns(&chain, 1000).unwrap();
        let a2 = expected_returns(&chain, 100_000).unwrap();
        assert!(a2.escape_probability < a1.escape_probability);
        let mut harmonic = 0.0;
        for n in 1..1000u64 {
            harmonic += 1.0 / (n as f64 + 1.0);
        }
        assert!((a1.escape_probability - 1.0 / (1.0 + harmonic)).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance_of_oracle_outputs() {
        let chain = ChainSpec::constant(0.7, 0.9).unwrap();
        let scaled = chain.scaled(256.0).unwrap(); // power of two: ratios identical in floats
        let p1 = hit_probability(&HittingProblem::new(chain.clone(), 4, 0, 30).unwrap()).unwrap();
        let p2 = hit_probability(&HittingProblem::new(scaled.clone(), 4, 0, 30).unwrap()).unwrap();
        assert_eq!(p1.to_bits(), p2.to_bits());
        let d1 = stationary(&chain, 64).unwrap();
        let d2 = stationary(&scaled, 64).unwrap();
        assert_eq!(d1.probabilities, d2.probabilities);
    }
}
