//! JSON report construction and the report schema.
//!
//! serde_json's default map is ordered (BTreeMap), and floats print in the
//! shortest round-trip form, so identical inputs yield byte-identical
//! reports. Complex numbers serialize as [re, im]; matrices row-major.

use serde_json::{json, Map, Value};

use germflow::linalg::CMat;
use germflow::C64;

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn cmat(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn obj(entries: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

/// Minimal structural schema for each subcommand's report: required keys
/// and their JSON types. Reports are checked against this before printing.
pub fn required_keys(command: &str) -> &'static [(&'static str, &'static str)] {
    match command {
        "validate" => &[("valid", "bool"), ("n", "number"), ("k", "number")],
        "gauge" => &[
            ("gauge_basis", "array"),
            ("pairing_matrix", "array"),
            ("pairing_constant", "number"),
        ],
        "germ" => &[
            ("delta_c", "number"),
            ("delta_p_minus", "number"),
            ("p_minus_matrix", "array"),
            ("r_perp_dim", "number"),
        ],
        "norm" => &[("norm", "number"), ("routes", "object")],
        "project" => &[("a_check", "array"), ("c_check", "array"), ("routes", "object")],
        "evolve" => &[
            ("t", "number"),
            ("a_t", "array"),
            ("c_t", "array"),
            ("symplectic_residual", "number"),
            ("riccati_agreement", "number"),
        ],
        "stability" => &[("stable", "bool"), ("eigenvalues", "array")],
        "spectrum" => &[("stable", "bool"), ("levels", "array")],
        "oracle-compare" => &[("checks", "object")],
        _ => &[],
    }
}

pub fn validate_report(command: &str, report: &Value) -> Result<(), String> {
    let Value::Object(map) = report else {
        return Err("report must be a JSON object".into());
    };
    for (key, ty) in required_keys(command) {
        let Some(v) = map.get(*key) else {
            return Err(format!("report missing required key '{key}'"));
        };
        let ok = match *ty {
            "bool" => v.is_boolean(),
            "number" => v.is_number(),
            "array" => v.is_array(),
            "object" => v.is_object(),
            _ => true,
        };
        if !ok {
            return Err(format!("report key '{key}' must be {ty}"));
        }
    }
    Ok(())
}

pub fn render(report: &Value, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(report).expect("report serializes")
    } else {
        serde_json::to_string(report).expect("report serializes")
    }
}
