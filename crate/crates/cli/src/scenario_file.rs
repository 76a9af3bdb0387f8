//! Scenario files and `key=value` overrides.

use std::path::Path;

use leaklab_core::scenario::ScenarioConfig;
use serde_json::Value;

use crate::error::{CliError, Result};

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Parses `key=value`. The value is read as JSON when it parses, otherwise
/// as a bare string, so `scenario_kind=byz_dual_active` needs no quotes.
pub fn parse_override(spec: &str) -> Result<(String, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Invalid(format!("override `{spec}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((key.to_owned(), value))
}

pub fn apply_override(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| CliError::Invalid("scenario document must be a JSON object".into()))?;
    obj.insert(key.to_owned(), value);
    Ok(())
}

/// Deserializes and validates a scenario, naming the offending field on failure.
pub fn to_config(doc: Value) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "(document)".to_owned() } else { path };
        CliError::Invalid(format!("invalid scenario: {field}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn override_values_are_json_or_strings() {
        assert_eq!(parse_override("p0=0.4").unwrap(), ("p0".into(), json!(0.4)));
        assert_eq!(parse_override("gst_epoch=null").unwrap().1, Value::Null);
        assert_eq!(parse_override("scenario_kind=bouncing").unwrap().1, json!("bouncing"));
        assert_eq!(parse_override("accounting=a=b").unwrap().1, json!("a=b"));
        assert!(parse_override("p0").is_err());
        assert!(parse_override("=1").is_err());
    }

    #[test]
    fn type_errors_name_the_field() {
        let doc = json!({ "scenario_kind": "honest_partition", "p0": "half", "horizon": 10 });
        let err = to_config(doc).unwrap_err().to_string();
        assert!(err.contains("p0"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let doc = json!({ "scenario_kind": "honest_partition", "p0": 0.5, "horizon": 10, "betaa": 0.1 });
        let err = to_config(doc).unwrap_err().to_string();
        assert!(err.contains("betaa"), "{err}");
    }

    #[test]
    fn validation_errors_keep_exit_code_two() {
        let doc = json!({ "scenario_kind": "probabilistic_bouncing", "p0": 0.1, "beta0": 0.2, "horizon": 10 });
        let err = to_config(doc).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("p0"), "{err}");
    }
}
