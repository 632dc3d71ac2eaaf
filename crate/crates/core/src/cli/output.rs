use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: &str = "1.0.0";

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Top-level JSON document emitted by every subcommand.
#[derive(Debug, Serialize)]
pub struct OutputEnvelope {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub inputs: Value,
    pub result: Value,
    pub warnings: Vec<String>,
}

/// A command's payload in both output shapes.
pub struct Rendered {
    pub envelope: OutputEnvelope,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
}

impl Rendered {
    pub fn new(command: &'static str, inputs: Value, result: Value) -> Self {
        Rendered {
            envelope: OutputEnvelope {
                schema_version: SCHEMA_VERSION,
                command,
                inputs,
                result: round_floats(result),
                warnings: Vec::new(),
            },
            csv_header: Vec::new(),
            csv_rows: Vec::new(),
        }
    }

    pub fn csv<S: Into<String>>(
        mut self,
        header: impl IntoIterator<Item = S>,
        rows: Vec<Vec<String>>,
    ) -> Self {
        self.csv_header = header.into_iter().map(Into::into).collect();
        self.csv_rows = rows;
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.envelope.warnings.push(msg.into());
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.envelope)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.csv_header)?;
                for row in &self.csv_rows {
                    w.write_record(row)?;
                }
                w.flush()
            }
        }
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

pub fn fmt_prob(x: f64) -> String {
    round_sig(x).to_string()
}

fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, round_floats(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.123_456_789_012_345), 0.123_456_789_012);
        assert_eq!(round_sig(126.0 / 3201.0), 0.039_362_699_156_5);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(1.0), 1.0);
    }

    #[test]
    fn nested_floats_are_rounded() {
        let v = round_floats(json!({"a": [1.0 / 3.0, 2], "b": {"c": 2.0 / 3.0}}));
        assert_eq!(
            v,
            json!({"a": [0.333333333333, 2], "b": {"c": 0.666666666667}})
        );
    }
}
