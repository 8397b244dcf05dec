//! CSV and JSON emitters for the analysis time series.
//!
//! CSV numbers are printed with 17 significant digits so emitted files
//! round-trip to the exact f64 values; JSON goes through serde_json's
//! shortest-round-trip formatting. Identical inputs produce byte-identical
//! files.

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One output row of any verb: a time index plus named numeric columns.
#[derive(Debug, Serialize)]
pub struct Row {
    pub k: usize,
    #[serde(flatten)]
    pub values: serde_json::Map<String, serde_json::Value>,
}

pub struct Table {
    /// Column names after `k`.
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, k: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns.len());
        let mut map = serde_json::Map::new();
        for (name, &v) in self.columns.iter().zip(values) {
            map.insert(
                name.clone(),
                serde_json::Number::from_f64(v)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null),
            );
        }
        self.rows.push(Row { k, values: map });
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::from("k");
                for c in &self.columns {
                    out.push(',');
                    out.push_str(c);
                }
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.k.to_string());
                    for c in &self.columns {
                        out.push(',');
                        match &row.values[c] {
                            serde_json::Value::Number(n) => {
                                out.push_str(&format_sig17(n.as_f64().unwrap_or(f64::NAN)))
                            }
                            _ => out.push_str("nan"),
                        }
                    }
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let mut out =
                    serde_json::to_string_pretty(&self.rows).expect("rows serialize to JSON");
                out.push('\n');
                out
            }
        }
    }
}

/// 17 significant digits: enough for exact f64 round-trips.
fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes to the path, or to stdout when no path is given.
pub fn emit(text: &str, output: Option<&std::path::Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
