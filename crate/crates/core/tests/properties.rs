//! Cross-module invariants, mostly property-based.

use bdwalk::classifier::{
    classify_diagonal, classify_ratio, classify_series, karlin_mcgregor_partial_sums,
    raabe_statistic, ChainSpec, Label,
};
use bdwalk::drift::DriftFunction;
use bdwalk::oracle::{expected_returns, hit_probability, stationary, HittingProblem};
use bdwalk::simulator::{run_discrete, run_ensemble, Mode, WalkConfig};
use proptest::prelude::*;

fn power_law() -> impl Strategy<Value = DriftFunction> {
    (0.01f64..2.5, -1.5f64..1.5, 0.0f64..1.5)
        .prop_map(|(rho, alpha, beta)| DriftFunction::power_law(rho, alpha, beta).unwrap())
}

fn valid_drift() -> impl Strategy<Value = DriftFunction> {
    prop_oneof![
        power_law(),
        (-0.5f64..1.5, 0.05f64..2.0)
            .prop_map(|(alpha, beta)| DriftFunction::exponential(alpha, beta).unwrap()),
        (0.0f64..0.49).prop_map(|v| DriftFunction::constant(v).unwrap()),
    ]
}

proptest! {
    // Wherever a drift evaluates, it is a valid bias: 0 <= phi < 1/2, and
    // the induced birth/death pair sums to 1 exactly.
    #[test]
    fn drift_range_and_rate_sum(f in valid_drift(), n in 0u64..10_000, t in 1.0f64..1e9) {
        if let Ok(phi) = f.evaluate(n, t) {
            prop_assert!((0.0..0.5).contains(&phi));
            let birth = 0.5 + phi;
            let death = 1.0 - birth;
            prop_assert_eq!(birth + death, 1.0);
            prop_assert!(death > 0.0);
        }
    }

    // Built-in families never increase in t.
    #[test]
    fn drift_monotone_in_time(f in valid_drift(), n in 1u64..5_000, t in 1.0f64..1e6, factor in 1.0f64..64.0) {
        let (lo, hi) = (f.evaluate(n, t), f.evaluate(n, t * factor));
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            prop_assert!(hi <= lo, "phi rose from {lo} to {hi}");
        }
    }

    // diagonal(f, n) is evaluate(f, n, n^2), bit for bit.
    #[test]
    fn diagonal_is_evaluate_on_the_square(f in valid_drift(), n in 1u64..1_000_000) {
        let t = (n as f64) * (n as f64);
        match (f.diagonal(n), f.evaluate(n, t)) {
            (Ok(d), Ok(e)) => prop_assert_eq!(d.to_bits(), e.to_bits()),
            (Err(_), Err(_)) => {}
            (d, e) => prop_assert!(false, "mismatch at n = {}: {:?} vs {:?}", n, d, e),
        }
    }

    // Hitting probability is 0 at the lower boundary, 1 at the upper one,
    // and nondecreasing in the start state.
    #[test]
    fn hit_probability_monotone_in_start(c in -3.0f64..3.0, b in 3u64..60) {
        let chain = ChainSpec::ratio_family(c).unwrap();
        let hit = |k: u64| {
            hit_probability(&HittingProblem::new(chain.clone(), k, 0, b).unwrap()).unwrap()
        };
        prop_assert_eq!(hit(0), 0.0);
        prop_assert_eq!(hit(b), 1.0);
        let mut prev = 0.0;
        for k in 0..=b {
            let p = hit(k);
            prop_assert!(p >= prev - 1e-15, "p({k}) = {p} < p({}) = {prev}", k - 1);
            prev = p;
        }
    }

    // Rescaling all rates by a power of two changes nothing, bit for bit;
    // verdict labels are invariant under any positive rescaling.
    #[test]
    fn scale_invariance(k in -6i32..7, scale in 0.01f64..100.0, c in -2.0f64..3.0) {
        let chain = ChainSpec::ratio_family(c).unwrap();
        let pow2 = chain.scaled(2.0f64.powi(k)).unwrap();
        for n in [1u64, 5, 100, 10_000] {
            prop_assert_eq!(
                raabe_statistic(&chain, n).unwrap().to_bits(),
                raabe_statistic(&pow2, n).unwrap().to_bits()
            );
        }
        let p1 = hit_probability(&HittingProblem::new(chain.clone(), 3, 0, 20).unwrap()).unwrap();
        let p2 = hit_probability(&HittingProblem::new(pow2.clone(), 3, 0, 20).unwrap()).unwrap();
        prop_assert_eq!(p1.to_bits(), p2.to_bits());

        let arbitrary = chain.scaled(scale).unwrap();
        let va = classify_ratio(&chain, 16, 1 << 16, 0.05).unwrap();
        let vb = classify_ratio(&arbitrary, 16, 1 << 16, 0.05).unwrap();
        prop_assert_eq!(va.label, vb.label);
        let p3 = hit_probability(&HittingProblem::new(arbitrary, 3, 0, 20).unwrap()).unwrap();
        prop_assert!((p1 - p3).abs() <= 1e-12 * p1.max(1e-300));
    }

    // Ladder partial sums are strictly increasing in the term count.
    #[test]
    fn partial_sums_strictly_increase(c in -3.0f64..3.0) {
        let chain = ChainSpec::ratio_family(c).unwrap();
        let sums = karlin_mcgregor_partial_sums(&chain, 2_000).unwrap();
        prop_assert!(sums.windows(2).all(|w| w[1] > w[0]));
    }

    // The ratio test and the series criterion agree whenever both conclude.
    #[test]
    fn ratio_and_series_agree(c in -3.0f64..3.0) {
        let chain = ChainSpec::ratio_family(c).unwrap();
        let ratio = classify_ratio(&chain, 16, 1 << 18, 0.05).unwrap();
        let series = classify_series(&chain, 1 << 13, 0.05).unwrap();
        if ratio.label != Label::Inconclusive && series.label != Label::Inconclusive {
            prop_assert_eq!(ratio.label, series.label, "c = {}", c);
        }
    }

    // The diagonal test on a drift agrees with the ratio test on the chain
    // frozen along the diagonal whenever both conclude.
    #[test]
    fn diagonal_agrees_with_frozen_chain(f in power_law()) {
        let diag = classify_diagonal(&f, 16, 1 << 18, 0.05);
        let chain = classify_ratio(&ChainSpec::diagonal_of(f.clone()), 16, 1 << 18, 0.05);
        if let (Ok(a), Ok(b)) = (diag, chain) {
            if a.label != Label::Inconclusive && b.label != Label::Inconclusive {
                prop_assert_eq!(a.label, b.label, "drift {:?}", f);
            }
        }
    }

    // Escape probability from the return analysis equals the ladder-series
    // closed form 1/(1 + S_{b-1}) through an independent code path.
    #[test]
    fn escape_equals_series_closed_form(c in -3.0f64..3.0, b in 10u64..500) {
        let chain = ChainSpec::ratio_family(c).unwrap();
        let analysis = expected_returns(&chain, b).unwrap();
        let sums = karlin_mcgregor_partial_sums(&chain, b - 1).unwrap();
        let closed = 1.0 / (1.0 + sums[b as usize - 2]);
        let rel = (analysis.escape_probability - closed).abs() / closed;
        prop_assert!(rel < 1e-10, "escape {} vs closed form {closed}", analysis.escape_probability);
    }

    // Stationary outputs: probabilities sum to 1 and satisfy balance.
    #[test]
    fn stationary_balances(birth in 0.05f64..0.9) {
        let death = birth + 0.3;
        let chain = ChainSpec::constant(birth, death).unwrap();
        let dist = stationary(&chain, 200).unwrap();
        let total: f64 = dist.probabilities.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(dist.probabilities.iter().all(|p| *p >= 0.0));
        prop_assert!(bdwalk::oracle::balance_residual(&dist, &chain).unwrap() < 1e-12);
    }

    // Trajectories are pure functions of (config, seed).
    #[test]
    fn trajectories_replay(seed in any::<u64>()) {
        let mut cfg = WalkConfig::new(DriftFunction::constant(0.05).unwrap(), 3_000, seed, Mode::Discrete);
        cfg.sample_times = vec![100, 2000];
        let a = run_discrete(&cfg).unwrap();
        let b = run_discrete(&cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

// The reflected symmetric walk returns to 0 on almost every path by a long
// horizon, and its running maximum grows on the sqrt(T) scale.
#[test]
fn symmetric_walk_returns_and_spreads_diffusively() {
    let horizon = 10_000u64;
    let cfg = WalkConfig::new(DriftFunction::constant(0.0).unwrap(), horizon, 0xD1FF, Mode::Discrete);
    let (stats, runs) = bdwalk::simulator::run_ensemble_detailed(&cfg, 2_000, None).unwrap();
    assert!(
        stats.return_frequency > 0.95,
        "return frequency {}",
        stats.return_frequency
    );
    let mean_max = runs.iter().map(|r| r.max_state as f64).sum::<f64>() / runs.len() as f64;
    let sqrt_t = (horizon as f64).sqrt();
    assert!(
        (0.5 * sqrt_t..3.0 * sqrt_t).contains(&mean_max),
        "mean max state {mean_max} vs sqrt(T) = {sqrt_t}"
    );
}

// A time change does not affect recurrence: continuous-embedding return
// frequencies match the discrete ones within 3 combined standard errors.
#[test]
fn continuous_and_discrete_return_frequencies_agree() {
    let replicas = 2_000u64;
    let drift = DriftFunction::constant(0.0).unwrap();
    let discrete = run_ensemble(
        &WalkConfig::new(drift.clone(), 2_000, 0xAB1E, Mode::Discrete),
        replicas,
        None,
    )
    .unwrap();
    let continuous = run_ensemble(
        &WalkConfig::new(drift, 2_000, 0xAB1F, Mode::Continuous),
        replicas,
        None,
    )
    .unwrap();
    let diff = (discrete.return_frequency - continuous.return_frequency).abs();
    let se = (discrete.return_frequency_se.powi(2) + continuous.return_frequency_se.powi(2)).sqrt();
    assert!(diff <= 3.0 * se, "diff {diff} vs 3 se = {}", 3.0 * se);
}

// Escape frequency of the walk driven by the 1 + 2/n chain (as a tabulated
// drift) matches the exact escape probability at level 1000 within 3
// standard errors.
#[test]
fn tabulated_chain_escape_at_level_1000() {
    let chain = ChainSpec::ratio_family(2.0).unwrap();
    let b = 1_000u64;
    let p = expected_returns(&chain, b).unwrap().escape_probability;

    let drift = chain.as_walk_drift(b + 1).unwrap();
    let mut cfg = WalkConfig::new(drift, u64::MAX >> 1, 0x10_000, Mode::Discrete);
    cfg.start_state = 1;
    cfg.start_time = 1;
    cfg.stop_at_zero = true;
    cfg.stop_at_escape = true;
    cfg.max_steps = Some(10_000_000);
    let replicas = 1_000u64;
    let stats = run_ensemble(&cfg, replicas, Some(b)).unwrap();
    let p_hat = stats.escape_frequency.unwrap();
    let se = (p * (1.0 - p) / replicas as f64).sqrt();
    assert!(
        (p_hat - p).abs() <= 3.0 * se,
        "escape {p_hat} vs oracle {p} (3 se = {})",
        3.0 * se
    );
}

// Two-ensemble comparison: a clearly transient drift (rho = 0.75) returns
// far less often than a clearly recurrent one (rho = 0.25), with the gap
// exceeding five combined standard errors.
#[test]
fn transient_returns_trail_recurrent_returns_by_five_sigma() {
    let replicas = 1_000u64;
    let run = |rho: f64| {
        let drift = DriftFunction::power_law(rho, 1.0, 1.0).unwrap();
        run_ensemble(&WalkConfig::new(drift, 100_000, 0xFADE, Mode::Discrete), replicas, None).unwrap()
    };
    let recurrent = run(0.25);
    let transient = run(0.75);
    let gap = recurrent.return_frequency - transient.return_frequency;
    let se = (recurrent.return_frequency_se.powi(2) + transient.return_frequency_se.powi(2)).sqrt();
    assert!(
        gap > 5.0 * se,
        "gap {gap} vs 5 se = {} (p_rec = {}, p_tra = {})",
        5.0 * se,
        recurrent.return_frequency,
        transient.return_frequency
    );
}

// Ensemble escape frequencies track the exact ruin probability on randomly
// drawn positively biased chains (a light version of the full acceptance
// sweep; 3 standard errors, small replica counts).
#[test]
fn ensemble_escape_tracks_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xBD_CA5E);
    let replicas = 2_000u64;
    let mut failures = 0;
    for case in 0..12 {
        let c: f64 = rng.gen_range(0.0..3.0);
        let b: u64 = rng.gen_range(6..24);
        let k: u64 = rng.gen_range(1..b);
        let chain = ChainSpec::ratio_family(c).unwrap();
        let p = hit_probability(&HittingProblem::new(chain.clone(), k, 0, b).unwrap()).unwrap();

        let drift = chain.as_walk_drift(b + 1).unwrap();
        let mut cfg = WalkConfig::new(drift, 1_000_000, rng.gen(), Mode::Discrete);
        cfg.start_state = k;
        cfg.start_time = k.max(1);
        cfg.stop_at_zero = true;
        cfg.stop_at_escape = true;
        let stats = run_ensemble(&cfg, replicas, Some(b)).unwrap();
        let p_hat = stats.escape_frequency.unwrap();
        let se = (p * (1.0 - p) / replicas as f64).sqrt();
        if (p_hat - p).abs() > 3.0 * se {
            eprintln!("case {case}: c={c:.3} b={b} k={k}: {p_hat} vs {p} (3se = {})", 3.0 * se);
            failures += 1;
        }
    }
    assert!(failures <= 1, "{failures} of 12 cases outside 3 standard errors");
}
