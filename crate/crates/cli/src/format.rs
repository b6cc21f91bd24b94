//! Number and document formatting shared by every output.

use serde::Serialize;

/// Shortest decimal that parses back to the same `f64`.
pub fn number(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:?}");
        s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
    } else {
        x.to_string()
    }
}

pub fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

pub fn parse_optional(field: &str) -> Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| format!("bad number {field:?}: {e}"))
}

/// Compact JSON with object keys in lexicographic order. Non-finite
/// numbers become `null`.
pub fn canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // serde_json::Map is ordered by key unless preserve_order is enabled
    let value = serde_json::to_value(value)?;
    serde_json::to_string(&value)
}
