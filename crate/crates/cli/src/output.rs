use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Serialize)]
pub struct OutputEnvelope {
    pub command: String,
    pub params: Value,
    pub result: Value,
    pub diagnostics: Value,
    pub version: String,
}

impl OutputEnvelope {
    pub fn new(command: &str, params: Value, result: Value, diagnostics: Value) -> Self {
        Self {
            command: command.to_string(),
            params,
            result,
            diagnostics,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope holds only JSON values")
    }

    /// `section.key = value` lines; floats printed with 17 significant digits
    /// so they round-trip to the same values as the JSON form.
    pub fn to_human(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} (msob {})", self.command, self.version).unwrap();
        for (name, section) in [
            ("params", &self.params),
            ("result", &self.result),
            ("diagnostics", &self.diagnostics),
        ] {
            flatten(name, section, &mut out);
        }
        out
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        Value::Array(items) if items.iter().any(|v| v.is_object() || v.is_array()) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        _ => writeln!(out, "{prefix} = {}", scalar(value)).unwrap(),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().unwrap()),
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

/// Builds a JSON object from `(key, value)` pairs, keeping their order.
pub fn object<I, K>(pairs: I) -> Value
where
    I: IntoIterator<Item = (K, Value)>,
    K: Into<String>,
{
    Value::Object(
        pairs
            .into_iter()
            .map(|(k, v)| (k.into(), v))
            .collect::<Map<_, _>>(),
    )
}
