//! JSON and CSV emission.

use crate::error::CliError;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty JSON with a trailing newline. Floats use the shortest representation
/// that parses back to the same double.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn qq_csv(pairs: &[(f64, f64)]) -> String {
    let mut s = String::from("theoretical,empirical\n");
    for (t, e) in pairs {
        s.push_str(&format!("{t:?},{e:?}\n"));
    }
    s
}

/// Fixed two-decimal cell, blank when missing.
pub fn cell(v: Option<f64>, best: bool) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.2}{}", if best { "*" } else { "" }),
        _ => String::new(),
    }
}
