//! Field-by-field comparison of two `report.json` files.

use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Envelope exponents drifting more than this are flagged.
pub const DRIFT_LIMIT: f64 = 0.2;

const IGNORED: [&str; 3] = ["config", "config_hash", "created_unix"];

fn report_type(v: &Value) -> (Option<&str>, Option<&str>) {
    let exp = v.get("experiment").and_then(Value::as_str);
    let model = v.pointer("/result/decay/model").and_then(Value::as_str);
    (exp, model)
}

fn flatten<'a>(prefix: String, v: &'a Value, out: &mut Vec<(String, &'a Value)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if prefix.is_empty() && IGNORED.contains(&k.as_str()) {
                    continue;
                }
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(p, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(format!("{prefix}[{i}]"), x, out);
            }
        }
        _ => out.push((prefix, v)),
    }
}

/// `|b − a| / |a|`, 0 when equal, infinite when only `a` vanishes.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        0.0
    } else if a == 0.0 {
        f64::INFINITY
    } else {
        (b - a).abs() / a.abs()
    }
}

pub fn compare(a: &Value, b: &Value) -> Result<Value, CliError> {
    let (ta, tb) = (report_type(a), report_type(b));
    if ta.0.is_none() || ta != tb {
        return Err(CliError::Validation {
            path: Some("experiment".into()),
            message: format!("report types differ: {ta:?} vs {tb:?}"),
        });
    }
    let mut fa = Vec::new();
    let mut fb = Vec::new();
    flatten(String::new(), a, &mut fa);
    flatten(String::new(), b, &mut fb);
    let mb: Map<String, Value> = fb.into_iter().map(|(k, v)| (k, v.clone())).collect();

    let mut fields = Vec::new();
    let mut changed = Vec::new();
    let mut only_a = Vec::new();
    let mut drift = Vec::new();
    let mut max_rel: f64 = 0.0;
    for (path, va) in &fa {
        let Some(vb) = mb.get(path) else {
            only_a.push(path.clone());
            continue;
        };
        match (va.as_f64(), vb.as_f64()) {
            (Some(x), Some(y)) => {
                let r = rel_diff(x, y);
                max_rel = max_rel.max(r);
                if path.ends_with("envelope.C") {
                    drift.push(json!({ "path": path, "a": x, "b": y, "rel_diff": r, "flagged": r > DRIFT_LIMIT }));
                }
                fields.push(json!({ "path": path, "a": x, "b": y, "rel_diff": r }));
            }
            _ => {
                if *va != vb {
                    changed.push(json!({ "path": path, "a": va, "b": vb }));
                }
            }
        }
    }
    let keys_a: std::collections::BTreeSet<&String> = fa.iter().map(|(k, _)| k).collect();
    let only_b: Vec<&String> = mb.keys().filter(|k| !keys_a.contains(k)).collect();
    let flagged = drift.iter().any(|d| d["flagged"] == json!(true));
    Ok(json!({
        "experiment": ta.0,
        "identical": max_rel == 0.0 && changed.is_empty() && only_a.is_empty() && only_b.is_empty(),
        "max_rel_diff": max_rel,
        "envelope_drift": drift,
        "drift_flagged": flagged,
        "fields": fields,
        "changed": changed,
        "only_in_a": only_a,
        "only_in_b": only_b,
    }))
}
