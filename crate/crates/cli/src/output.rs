use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{Number, Value};

use crate::CliError;

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// A JSON number carrying 17 significant digits; `null` when not finite.
pub fn real(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Number::from_str(&format!("{x:.16e}"))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Rewrites every non-integer number in `v` with [`real`].
pub fn widen(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => real(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => Value::Array(items.into_iter().map(widen).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, widen(v))).collect()),
        other => other,
    }
}

pub fn write_json(out: &mut dyn Write, v: Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, &widen(v)).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}
