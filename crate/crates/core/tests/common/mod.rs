#![allow(dead_code)]

use serde_json::Value;

/// Reference values computed independently in extended precision by
/// `tests/oracle/generate.py`.
pub fn oracle() -> Value {
    serde_json::from_str(include_str!("../fixtures/oracle.json")).expect("valid oracle fixture")
}

pub fn f(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("missing number `{key}` in {v}"))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
