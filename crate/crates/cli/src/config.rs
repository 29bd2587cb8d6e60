//! Resolution of subcommand settings: flags override the config file, which
//! overrides built-in defaults.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

fn as_object(v: Value, what: &str) -> Result<Map<String, Value>, CliError> {
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{what} must be a JSON object"))),
    }
}

/// Merges `defaults ← file ← flags` and deserializes the result.
///
/// Keys in the file that the defaults do not have are rejected; `null` flag
/// values mean "not given".
pub fn resolve<T, F>(file: Option<&Value>, flags: &F) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
    F: Serialize,
{
    let mut merged = as_object(serde_json::to_value(T::default())?, "defaults")?;
    if let Some(file) = file {
        for (k, v) in as_object(file.clone(), "config file")? {
            if !merged.contains_key(&k) {
                let known: Vec<&str> = merged.keys().map(String::as_str).collect();
                return Err(CliError::Usage(format!(
                    "unknown config field {k:?}; expected one of: {}",
                    known.join(", ")
                )));
            }
            merged.insert(k, v);
        }
    }
    for (k, v) in as_object(serde_json::to_value(flags)?, "flags")? {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("invalid config: {e}")))
}
