//! Scenario files: a JSON description of one system, its pseudo-orbit and the
//! analysis settings. Every optional field is filled in at load time so the
//! in-memory scenario serializes back with all defaults spelled out.

use std::path::{Path, PathBuf};

use hu_shadow_core::{
    ClassifyOptions, ExpandingOptions, Family, MapSystem, RateKind, ResidualPolicy, C64,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// A family record plus an optional `rate_kind` key in the same JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct SystemSpec {
    pub family: Family,
    pub rate_kind: RateKind,
}

impl TryFrom<Value> for SystemSpec {
    type Error = String;

    fn try_from(value: Value) -> Result<Self, String> {
        let Value::Object(mut obj) = value else {
            return Err("system must be an object".into());
        };
        let rate_kind = obj
            .remove("rate_kind")
            .map(serde_json::from_value::<RateKind>)
            .transpose()
            .map_err(|e| format!("system.rate_kind: {e}"))?;
        let family: Family =
            serde_json::from_value(Value::Object(obj)).map_err(|e| format!("system: {e}"))?;
        let rate_kind = rate_kind.unwrap_or_else(|| family.default_rate_kind());
        Ok(Self { family, rate_kind })
    }
}

impl From<SystemSpec> for Value {
    fn from(spec: SystemSpec) -> Value {
        let mut obj = match serde_json::to_value(&spec.family) {
            Ok(Value::Object(o)) => o,
            _ => Map::new(),
        };
        obj.insert(
            "rate_kind".into(),
            serde_json::to_value(spec.rate_kind).unwrap_or(Value::Null),
        );
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Number of growth rates used for classification, independent of the
    /// orbit horizon.
    pub profile_horizon: usize,
    pub window: usize,
    pub tol: f64,
    pub max_period: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        let c = ClassifyOptions::default();
        Self {
            profile_horizon: 1000,
            window: c.window,
            tol: c.tol,
            max_period: c.max_period,
        }
    }
}

impl AnalysisSpec {
    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            window: self.window,
            tol: self.tol,
            max_period: self.max_period,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemSpec,
    /// `[re, im]`.
    #[serde(default = "default_a1")]
    pub a1: [f64; 2],
    pub epsilon: f64,
    #[serde(default = "default_residual")]
    pub residual: ResidualPolicy,
    pub horizon: usize,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub shadow: ExpandingOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_a1() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_residual() -> ResidualPolicy {
    ResidualPolicy::ConstantReal
}

impl Scenario {
    pub fn a1(&self) -> C64 {
        C64::new(self.a1[0], self.a1[1])
    }

    /// The validated system; errors name the offending field.
    pub fn map_system(&self) -> Result<MapSystem, CliError> {
        MapSystem::new(self.system.family.clone(), self.system.rate_kind).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.strip_prefix("invalid input: ").unwrap_or(&msg);
            CliError::Config(format!("system.{msg}"))
        })
    }

    /// Checks every field that the type system does not.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        let sys = self.map_system()?;
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return bad("epsilon: must be a finite nonnegative number");
        }
        if self.horizon == 0 {
            return bad("horizon: must be at least 1");
        }
        if !self.a1.iter().all(|x| x.is_finite()) {
            return bad("a1: components must be finite");
        }
        if sys.domain_kind() == hu_shadow_core::DomainKind::RealLine {
            if self.a1[1] != 0.0 {
                return bad("a1: imaginary part must be 0 for a real-line system");
            }
            if !self.residual.is_real() {
                return bad("residual: policy must be real-valued for a real-line system");
            }
        }
        if let ResidualPolicy::ConstantPhase { theta } = self.residual {
            if !theta.is_finite() {
                return bad("residual.theta: must be finite");
            }
        }
        let a = &self.analysis;
        if a.window == 0 {
            return bad("analysis.window: must be at least 1");
        }
        if a.profile_horizon < 4 * a.window {
            return bad("analysis.profile_horizon: must be at least 4 * analysis.window");
        }
        if !(a.tol > 0.0) {
            return bad("analysis.tol: must be positive");
        }
        if a.max_period == 0 {
            return bad("analysis.max_period: must be at least 1");
        }
        let s = &self.shadow;
        if !(s.tol > 0.0) {
            return bad("shadow.tol: must be positive");
        }
        if s.max_iter == 0 {
            return bad("shadow.max_iter: must be at least 1");
        }
        if !(s.tail_fraction > 0.0) {
            return bad("shadow.tail_fraction: must be positive");
        }
        Ok(())
    }
}

/// Parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!("line {} column {}: {e}", e.line(), e.column()))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"system": {"family": "periodic_linear", "coeffs": [2, 0.3333333333333333]},
        "epsilon": 0.001, "horizon": 200}"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.a1, [1.0, 0.0]);
        assert_eq!(s.residual, ResidualPolicy::ConstantReal);
        assert_eq!(s.system.rate_kind, RateKind::ContractingBound);
        assert_eq!(s.analysis, AnalysisSpec::default());
        assert_eq!(s.shadow, ExpandingOptions::default());
        assert_eq!(s.output, OutputSpec::default());
        let text = serde_json::to_string_pretty(&s).unwrap();
        for key in ["rate_kind", "profile_horizon", "tail_fraction", "formats", "residual"] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn zero_coefficient_is_rejected() {
        let err = parse_scenario(
            r#"{"system": {"family": "periodic_linear", "coeffs": [2, 0]}, "epsilon": 0.001, "horizon": 10}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("growth rate must be positive"), "{msg}");
        assert!(msg.contains("system.coeffs[1]"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario(
            r#"{"system": {"family": "periodic_linear", "coeffs": [2]}, "epsilon": 0.1, "horizon": 10, "colour": 1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("colour"));
        let err = parse_scenario(
            r#"{"system": {"family": "periodic_linear", "coeffs": [2], "slope": 3}, "epsilon": 0.1, "horizon": 10}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("slope"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario("{\n  \"epsilon\": 0.1,\n  oops\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = parse_scenario(
            r#"{"system": {"family": "affine_sinusoid", "slope": 3}, "epsilon": 0.1, "horizon": 10,
                "residual": {"kind": "low_discrepancy_phase"}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("residual:"), "{err}");
        let err = parse_scenario(
            r#"{"system": {"family": "periodic_linear", "coeffs": [2]}, "epsilon": -1, "horizon": 10}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("epsilon:"), "{err}");
    }
}
