//! Scenario files: one JSON document that fixes the instance and dynamic.
//!
//! ```json
//! {
//!   "features": [{"name": "x1", "a": 0.3, "h0": 0.8}],
//!   "c": 0.0, "c_bar": 0.0, "k": 1, "delta": 0.9,
//!   "dynamic": {"type": "exponential", "params": {"w": 0.0}},
//!   "standardization": {"mu": [0.0], "sigma": [1.0]}
//! }
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use learnsel::{LearningDynamic, ProblemInstance, StandardizationSpec};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    name: Option<String>,
    a: f64,
    h0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum RawDynamic {
    Exponential { w: f64 },
    Tabulated { values: Vec<f64>, tail_w: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStandardization {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    features: Vec<RawFeature>,
    #[serde(default)]
    c: f64,
    #[serde(default)]
    c_bar: f64,
    k: usize,
    delta: f64,
    dynamic: RawDynamic,
    standardization: Option<RawStandardization>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: ProblemInstance,
    pub dynamic: LearningDynamic,
    pub standardization: Option<StandardizationSpec>,
    pub names: Vec<String>,
    /// Features kept despite a zero coefficient under `--allow-zero-coeff`.
    pub zero_features: Vec<usize>,
}

impl Scenario {
    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }
}

pub fn load_scenario(path: &Path, allow_zero: bool) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, &path.display().to_string(), allow_zero)
}

/// Parses and validates a scenario; standardization is applied here.
pub fn parse_scenario(text: &str, origin: &str, allow_zero: bool) -> Result<Scenario, CliError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let rule = |e: learnsel::Error| CliError::Input(format!("{origin}: {e}"));

    let n = raw.features.len();
    let names: Vec<String> = raw
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| f.name.clone().unwrap_or_else(|| format!("x{}", i + 1)))
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(CliError::Input(format!("{origin}: feature names must be unique, \"{dup}\" repeats")));
    }

    let mut a: Vec<f64> = raw.features.iter().map(|f| f.a).collect();
    let mut h0: Vec<f64> = raw.features.iter().map(|f| f.h0).collect();
    let (mut c, mut c_bar) = (raw.c, raw.c_bar);
    let standardization = match raw.standardization {
        Some(s) => {
            let spec = StandardizationSpec::new(s.mu, s.sigma).map_err(rule)?;
            if spec.mu().len() != n {
                return Err(CliError::Input(format!(
                    "{origin}: standardization has {} entries for {n} features",
                    spec.mu().len()
                )));
            }
            (a, c) = learnsel::model::standardize(&a, c, &spec).map_err(rule)?;
            (h0, c_bar) = learnsel::model::standardize(&h0, c_bar, &spec).map_err(rule)?;
            Some(spec)
        }
        None => None,
    };

    let instance = if allow_zero {
        ProblemInstance::new_allowing_zero(a, c, h0, c_bar, raw.k, raw.delta)
    } else {
        ProblemInstance::new(a, c, h0, c_bar, raw.k, raw.delta)
    }
    .map_err(rule)?;
    let dynamic = match raw.dynamic {
        RawDynamic::Exponential { w } => LearningDynamic::exponential(w),
        RawDynamic::Tabulated { values, tail_w } => LearningDynamic::tabulated(values, tail_w),
    }
    .map_err(rule)?;
    let zero_features = instance.zero_coefficients();
    Ok(Scenario {
        instance,
        dynamic,
        standardization,
        names,
        zero_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_FEATURES: &str = r#"{
        "features": [
            {"name": "x1", "a": 0.3, "h0": 0.8},
            {"name": "x2", "a": 0.2, "h0": 0.2},
            {"name": "x3", "a": 0.1, "h0": 0.15}
        ],
        "k": 3, "delta": 0.9,
        "dynamic": {"type": "exponential", "params": {"w": 0.0}}
    }"#;

    #[test]
    fn loads_three_features() {
        let s = parse_scenario(THREE_FEATURES, "t.json", false).unwrap();
        assert_eq!(s.instance.a(), &[0.3, 0.2, 0.1]);
        assert_eq!(s.names, ["x1", "x2", "x3"]);
        assert_eq!(s.dynamic.exponential_rate(), Some(0.0));
    }

    #[test]
    fn rejects_boundary_delta() {
        let text = THREE_FEATURES.replace("0.9,", "1.0,");
        let err = parse_scenario(&text, "t.json", false).unwrap_err();
        assert!(err.to_string().contains("delta must lie strictly inside (0,1)"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn parse_errors_carry_position() {
        let text = THREE_FEATURES.replace("\"h0\": 0.2}", "\"h0\": }");
        match parse_scenario(&text, "t.json", false).unwrap_err() {
            CliError::Parse { line, column, .. } => {
                assert_eq!(line, 4);
                assert!(column > 0);
            }
            other => panic!("{other}"),
        }
        let missing = THREE_FEATURES.replace("\"k\": 3,", "");
        let err = parse_scenario(&missing, "t.json", false).unwrap_err();
        assert!(err.to_string().contains("missing field `k`"), "{err}");
    }

    #[test]
    fn standardization_applies_and_validates() {
        let with = THREE_FEATURES.replace(
            "\"k\": 3,",
            "\"k\": 3, \"standardization\": {\"mu\": [1, 0, 0], \"sigma\": [2, 1, 1]},",
        );
        let s = parse_scenario(&with, "t.json", false).unwrap();
        assert_eq!(s.instance.a(), &[0.6, 0.2, 0.1]);
        assert!((s.instance.c() - 0.3).abs() < 1e-15);
        assert_eq!(s.instance.h0()[0], 1.6);
        assert!((s.instance.c_bar() - 0.8).abs() < 1e-15);
        let bad = with.replace("[2, 1, 1]", "[2, 0, 1]");
        assert!(parse_scenario(&bad, "t.json", false).is_err());
    }

    #[test]
    fn zero_coefficients_need_override() {
        let text = THREE_FEATURES.replace("\"a\": 0.2", "\"a\": 0.0");
        assert!(parse_scenario(&text, "t.json", false).is_err());
        let s = parse_scenario(&text, "t.json", true).unwrap();
        assert_eq!(s.zero_features, vec![1]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = THREE_FEATURES.replace("\"x2\"", "\"x1\"");
        assert!(parse_scenario(&text, "t.json", false).unwrap_err().to_string().contains("unique"));
    }
}
