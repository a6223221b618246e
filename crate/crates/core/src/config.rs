//! Experiment config files: TOML with strict key checking.
//!
//! Unknown keys are hard errors with a nearest-key suggestion, and all
//! violations in a file are reported at once. A JSON output file produced by
//! a previous run is also accepted: its embedded manifest spec is extracted,
//! so any result re-runs from its own output.

use std::path::Path;

use thiserror::Error;

use crate::experiments::ExperimentSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

const TOP_KEYS: &[&str] = &["name", "drift", "grid", "classifier", "simulation", "outputs"];
const DRIFT_KEYS: &[&str] = &["family", "rho", "alpha", "beta", "value", "path", "tail"];
const GRID_KEYS: &[&str] = &["rho", "alpha", "beta"];
const AXIS_KEYS: &[&str] = &["min", "max", "step", "values"];
const CLASSIFIER_KEYS: &[&str] = &["n_lo", "n_hi", "margin"];
const SIMULATION_KEYS: &[&str] = &[
    "replicas",
    "horizon",
    "escape_level",
    "seed",
    "start_state",
    "start_time",
    "mode",
];
const OUTPUT_KEYS: &[&str] = &["json", "csv", "gnuplot", "evidence"];

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            let next = (prev + cost).min(row[j] + 1).min(row[j + 1] + 1);
            prev = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

fn unknown_key_message(section: &str, key: &str, allowed: &[&str]) -> String {
    let suggestion = allowed
        .iter()
        .map(|k| (k, levenshtein(key, k)))
        .filter(|(_, d)| *d <= 2)
        .min_by_key(|(_, d)| *d)
        .map(|(k, _)| format!("; did you mean `{k}`?"))
        .unwrap_or_default();
    format!(
        "unknown key `{key}` in {section} (expected one of: {}){suggestion}",
        allowed.join(", ")
    )
}

fn check_table(
    table: &toml::Table,
    section: &str,
    allowed: &[&str],
    problems: &mut Vec<String>,
) {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            problems.push(unknown_key_message(section, key, allowed));
        }
    }
}

fn check_keys(root: &toml::Table) -> Vec<String> {
    let mut problems = Vec::new();
    check_table(root, "the top level", TOP_KEYS, &mut problems);
    let sections: &[(&str, &[&str])] = &[
        ("drift", DRIFT_KEYS),
        ("classifier", CLASSIFIER_KEYS),
        ("simulation", SIMULATION_KEYS),
        ("outputs", OUTPUT_KEYS),
    ];
    for (name, allowed) in sections {
        if let Some(toml::Value::Table(t)) = root.get(*name) {
            check_table(t, &format!("[{name}]"), allowed, &mut problems);
        }
    }
    if let Some(toml::Value::Table(grid)) = root.get("grid") {
        check_table(grid, "[grid]", GRID_KEYS, &mut problems);
        for (axis, value) in grid {
            if let toml::Value::Table(t) = value {
                check_table(t, &format!("[grid.{axis}]"), AXIS_KEYS, &mut problems);
            }
        }
    }
    problems
}

/// Semantic checks beyond key names; every problem names its field.
fn check_semantics(spec: &ExperimentSpec) -> Vec<String> {
    let mut problems = Vec::new();
    let d = &spec.drift;
    match d.family.as_str() {
        "power_law" | "power_law_boundary" => {
            if let Some(rho) = d.rho {
                if !(rho.is_finite() && rho > 0.0) {
                    problems.push(format!("drift.rho: must be a positive real, got {rho}"));
                }
            }
            if let Some(beta) = d.beta {
                if !(beta.is_finite() && beta >= 0.0) {
                    problems.push(format!("drift.beta: must be >= 0, got {beta}"));
                }
            }
        }
        "exponential" => {
            if let Some(beta) = d.beta {
                if !(beta.is_finite() && beta > 0.0) {
                    problems.push(format!("drift.beta: must be positive, got {beta}"));
                }
            }
        }
        "constant" => match d.value {
            Some(v) if v.is_finite() && (0.0..0.5).contains(&v) => {}
            Some(v) => problems.push(format!("drift.value: must be in [0, 0.5), got {v}")),
            None => problems.push("drift.value: required for the constant family".into()),
        },
        "tabulated" => {
            if d.path.is_none() {
                problems.push("drift.path: required for the tabulated family".into());
            }
            if let Some(tail) = d.tail.as_deref() {
                if tail != "constant" && tail != "zero" {
                    problems.push(format!("drift.tail: expected `constant` or `zero`, got `{tail}`"));
                }
            }
        }
        "" => problems.push("drift.family: required".into()),
        other => problems.push(format!("drift.family: unknown family `{other}`")),
    }
    if spec.classifier.n_lo < 1 || spec.classifier.n_lo >= spec.classifier.n_hi {
        problems.push(format!(
            "classifier.n_lo/n_hi: need 1 <= n_lo < n_hi, got {} and {}",
            spec.classifier.n_lo, spec.classifier.n_hi
        ));
    }
    if !(spec.classifier.margin.is_finite() && spec.classifier.margin > 0.0) {
        problems.push(format!(
            "classifier.margin: must be positive, got {}",
            spec.classifier.margin
        ));
    }
    if spec.simulation.replicas > 0 {
        if spec.simulation.start_time < 1 {
            problems.push("simulation.start_time: must be >= 1".into());
        }
        if spec.simulation.horizon <= spec.simulation.start_time {
            problems.push(format!(
                "simulation.horizon: must exceed start_time, got {} <= {}",
                spec.simulation.horizon, spec.simulation.start_time
            ));
        }
        if spec.simulation.start_state > spec.simulation.start_time {
            problems.push(format!(
                "simulation.start_state: must not exceed start_time {}, got {}",
                spec.simulation.start_time, spec.simulation.start_state
            ));
        }
    }
    problems
}

/// Parses and validates a TOML experiment spec.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let root: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let problems = check_keys(&root);
    if !problems.is_empty() {
        return Err(ConfigError::Validation(problems));
    }
    let spec: ExperimentSpec = toml::Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let problems = check_semantics(&spec);
    if !problems.is_empty() {
        return Err(ConfigError::Validation(problems));
    }
    Ok(spec)
}

/// Loads a spec from a TOML config file, or from the manifest embedded in a
/// JSON output of a previous run.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse(format!("JSON manifest: {e}")))?;
        let spec_value = value
            .pointer("/manifest/spec")
            .cloned()
            .ok_or_else(|| ConfigError::Parse("JSON file has no manifest.spec to re-run".into()))?;
        let spec: ExperimentSpec = serde_json::from_value(spec_value)
            .map_err(|e| ConfigError::Parse(format!("JSON manifest spec: {e}")))?;
        let problems = check_semantics(&spec);
        if !problems.is_empty() {
            return Err(ConfigError::Validation(problems));
        }
        return Ok(spec);
    }
    parse_config(&text)
}
