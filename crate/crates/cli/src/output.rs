use std::io::Write;

use anyhow::{Context, Result};
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};

/// A command's result: the JSON document and its flat CSV view.
pub struct Report {
    pub doc: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// Floats printed at 1e-12: anything finer is rounded away.
pub fn round12(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r = if x.abs() < 1e3 { (x * 1e12).round() / 1e12 } else { x };
            // -0.0 prints as "-0.0"; normalize.
            serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round12).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round12(v))).collect()),
        other => other,
    }
}

fn cell(v: &Value) -> String {
    match round12(v.clone()) {
        Value::String(s) => s,
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&round12(self.doc.clone()))?;
                s.push('\n');
                Ok(s.into_bytes())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(cell))?;
                }
                Ok(w.into_inner().context("flushing CSV")?)
            }
        }
    }

    pub fn emit(&self, cfg: &ExperimentConfig) -> Result<()> {
        let bytes = self.render(cfg.format())?;
        match &cfg.out {
            Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
            None => Ok(std::io::stdout().write_all(&bytes)?),
        }
    }
}
