//! Recurrence/transience analysis for time-inhomogeneous birth-and-death
//! random walks.
//!
//! The walk moves up from state `n ≥ 1` at time `t` with probability
//! `1/2 + φ(n, t)` and down with probability `1/2 − φ(n, t)`; state 0 forces
//! an up-step. The crate classifies such walks analytically (the diagonal
//! test on `φ(n, n²)` against `c/(4n)`, plus the classical ratio and series
//! criteria for homogeneous chains), cross-validates the verdicts with exact
//! hitting-probability and stationary-distribution oracles, and corroborates
//! them with seeded, reproducible Monte Carlo ensembles in discrete time and
//! in the unit-rate continuous-time embedding.
//!
//! Module map:
//! * [`drift`]: drift functions `φ(n, t)` and rate schedules;
//! * [`classifier`]: analytic verdicts and chain criteria;
//! * [`oracle`]: exact finite ground truth for homogeneous chains;
//! * [`simulator`]: trajectory and ensemble sampling;
//! * [`experiments`]: parameter sweeps, phase diagrams, evidence reports;
//! * [`config`] / [`cli`]: config files and the command-line frontend.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod drift;
pub mod experiments;
pub mod oracle;
pub mod simulator;

pub use classifier::{
    classify_diagonal, classify_ratio, classify_series, karlin_mcgregor_partial_sums,
    raabe_statistic, ChainSpec, Label, Verdict,
};
pub use drift::{DriftFunction, RateSchedule, TabulatedDrift, TailRule};
pub use oracle::{
    balance_residual, expected_returns, hit_probability, stationary, HittingProblem,
    StationaryDistribution,
};
pub use simulator::{
    drift_vanishing_check, run_continuous, run_discrete, run_ensemble, split_seed, step_discrete,
    EnsembleStats, Mode, TrajectoryStats, WalkConfig,
};
