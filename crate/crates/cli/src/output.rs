use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

/// Provenance attached to every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str, parameters: Value, seeds: Vec<u64>, started: Instant) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            parameters,
            seeds,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn json_document(manifest: &RunManifest, body: Value) -> Vec<u8> {
    let mut doc = json!({ "manifest": manifest });
    if let (Value::Object(map), Value::Object(extra)) = (&mut doc, body) {
        map.extend(extra);
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text.into_bytes()
}

/// JSON body for a single number, exact when possible.
pub fn exact_value(query: Value, value: &BigRational, route: &str) -> Value {
    json!({
        "query": query,
        "value_rational": value.to_string(),
        "value_float": fourvertex::hahn::to_f64(value),
        "route": route,
    })
}

pub fn integer_value(query: Value, value: &BigInt, route: &str) -> Value {
    json!({
        "query": query,
        "value_rational": value.to_string(),
        "value_float": fourvertex::exact::to_f64(value),
        "route": route,
    })
}

pub fn float_value(query: Value, value: f64, route: &str) -> Value {
    json!({
        "query": query,
        "value_rational": Value::Null,
        "value_float": value,
        "route": route,
    })
}

/// CSV with the manifest on a leading comment line.
pub fn csv_document(manifest: &RunManifest, header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut text = format!("# manifest {}\n{header}\n", manifest.to_json());
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    text.into_bytes()
}

/// Binary graymap with the manifest as a header comment. `values` is
/// row-major with the top image row first and is clamped to `[0, 1]`.
pub fn pgm_document(manifest: &RunManifest, width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n# manifest {}\n{width} {height}\n255\n", manifest.to_json()).into_bytes();
    out.extend(values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}
