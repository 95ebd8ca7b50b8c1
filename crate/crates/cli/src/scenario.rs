//! Scenario loading and `KEY=VALUE` overrides.

use std::path::Path;

use fadetrack_core::sim::ScenarioConfig;
use serde_json::Value;

use crate::error::CliError;

/// Sets the value at a dotted path (`a.b.0.c`). Missing object keys are
/// created; array indices must exist. The value is parsed as JSON and falls
/// back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override {assignment:?}: expected KEY=VALUE"))?;
    if key.is_empty() {
        return Err(format!("override {assignment:?}: empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut node = root;
    for part in path {
        node = match node {
            Value::Object(map) => map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default())),
            Value::Array(items) => index(items, part, key)?,
            _ => return Err(format!("override {key}: {part:?} is not inside an object or array")),
        };
    }
    match node {
        Value::Object(map) => {
            map.insert(last.to_string(), value);
        }
        Value::Array(items) => *index(items, last, key)? = value,
        _ => return Err(format!("override {key}: {last:?} is not inside an object or array")),
    }
    Ok(())
}

fn index<'a>(items: &'a mut [Value], part: &str, key: &str) -> Result<&'a mut Value, String> {
    let len = items.len();
    let i: usize = part
        .parse()
        .map_err(|_| format!("override {key}: {part:?} is not an array index"))?;
    items
        .get_mut(i)
        .ok_or_else(|| format!("override {key}: index {i} out of range (length {len})"))
}

/// Reads the scenario at `path` (or the built-in reference scenario),
/// applies overrides in order and validates the result.
pub fn load_scenario(path: Option<&Path>, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => ScenarioConfig::reference().to_json_pretty(),
    };
    let name = path.map_or_else(|| "<reference>".to_string(), |p| p.display().to_string());
    let cfg: ScenarioConfig = if overrides.is_empty() {
        // parse the text directly so errors carry line and column
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{name}: {e}")))?
    } else {
        let mut tree: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        for o in overrides {
            apply_override(&mut tree, o).map_err(CliError::Config)?;
        }
        serde_json::from_value(tree).map_err(|e| CliError::Config(format!("{name} (after overrides): {e}")))?
    };
    cfg.validate().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dotted_paths() {
        let mut v = json!({"a": {"b": 1}, "list": [1, {"x": 2}]});
        apply_override(&mut v, "a.b=5").unwrap();
        apply_override(&mut v, "list.1.x=[1,2]").unwrap();
        apply_override(&mut v, "new.key=text").unwrap();
        assert_eq!(v, json!({"a": {"b": 5}, "list": [1, {"x": [1, 2]}], "new": {"key": "text"}}));
        assert!(apply_override(&mut v, "list.7=1").is_err());
        assert!(apply_override(&mut v, "a.b.c=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn reference_with_overrides() {
        let cfg = load_scenario(None, &["runs=3".into(), "master_seed=18446744073709551615".into()]).unwrap();
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.master_seed, u64::MAX);
        let e = load_scenario(None, &["comm_range_m=-1".into()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = load_scenario(None, &["comm_range=600".into()]).unwrap_err();
        assert!(e.to_string().contains("comm_range"), "{e}");
    }
}
