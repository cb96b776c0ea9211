//! One run per value of a single document parameter.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::Value;

use super::config::parse_document;
use super::report::MetricsReport;
use super::run::run_scenario;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: Value,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: String,
    pub points: Vec<SweepPoint>,
}

/// `"0.1, 2, drop_stalest"` → JSON values; anything that is not JSON becomes
/// a string.
pub fn parse_grid(text: &str) -> Vec<Value> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
        .collect()
}

/// Sets the dotted `path` (array elements by index) in `doc`. Every segment
/// but the last must already exist.
pub fn set_parameter(doc: &mut Value, path: &str, value: Value) -> Result<(), HarnessError> {
    let unknown = || HarnessError::UnknownParameter(path.to_string());
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(unknown());
    }
    let (last, parents) = segments.split_last().expect("split yields at least one segment");
    let mut cur = doc;
    for seg in parents {
        cur = match cur {
            Value::Object(m) => m.get_mut(*seg).ok_or_else(unknown)?,
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)).ok_or_else(unknown)?,
            _ => return Err(unknown()),
        };
    }
    match cur {
        Value::Object(m) => {
            m.insert(last.to_string(), value);
        }
        Value::Array(a) => {
            let slot = last.parse::<usize>().ok().and_then(|i| a.get_mut(i)).ok_or_else(unknown)?;
            *slot = value;
        }
        _ => return Err(unknown()),
    }
    Ok(())
}

/// Runs every grid point (in parallel) with the same base seed.
pub fn sweep(
    doc: &Value,
    param: &str,
    grid: &[Value],
    seed_override: Option<u64>,
) -> Result<SweepResult, HarnessError> {
    let configs = grid
        .iter()
        .map(|v| {
            let mut d = doc.clone();
            set_parameter(&mut d, param, v.clone())?;
            parse_document(d).map_err(|errs| {
                if errs.iter().any(|e| e.path == param && e.message.starts_with("unknown field")) {
                    HarnessError::UnknownParameter(param.to_string())
                } else {
                    HarnessError::Schema(errs)
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reports = configs
        .par_iter()
        .map(|cfg| run_scenario(cfg, seed_override))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        param: param.to_string(),
        points: grid
            .iter()
            .cloned()
            .zip(reports)
            .map(|(value, report)| SweepPoint { value, report })
            .collect(),
    })
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepResult {
    /// Long form: one line per (grid value, flow, metric).
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["param", "value", "flow", "metric", "metric_value"])
            .expect("in-memory write");
        for p in &self.points {
            let value = render_value(&p.value);
            let t = &p.report.metrics;
            for row in &t.rows {
                let flow = row[0].render();
                for (col, cell) in t.columns.iter().zip(row).skip(1) {
                    w.write_record([&self.param, &value, &flow, col, &cell.render()])
                        .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sweep: {}", self.param);
        if let Some(first) = self.points.first() {
            let _ = writeln!(out, "scenario: {}", first.report.kind);
            let _ = writeln!(out, "seed: {}", first.report.meta.seed);
        }
        for p in &self.points {
            let _ = writeln!(out, "\n{} = {}", self.param, render_value(&p.value));
            for (k, v) in &p.report.summary {
                let _ = writeln!(out, "  {k}: {v}");
            }
        }
        out
    }

    pub fn files(&self) -> Vec<(String, String)> {
        vec![
            ("sweep.csv".to_string(), self.to_csv()),
            ("summary.txt".to_string(), self.summary_text()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn grid_values() {
        assert_eq!(parse_grid("1, 2.5,tail_drop"), vec![json!(1), json!(2.5), json!("tail_drop")]);
        assert_eq!(parse_grid("7"), vec![json!(7)]);
    }

    #[test]
    fn parameter_paths() {
        let mut doc = json!({"a": {"b": [1, {"c": 2}]}});
        set_parameter(&mut doc, "a.b.1.c", json!(5)).unwrap();
        set_parameter(&mut doc, "a.b.0", json!(9)).unwrap();
        set_parameter(&mut doc, "a.new", json!(true)).unwrap();
        assert_eq!(doc, json!({"a": {"b": [9, {"c": 5}], "new": true}}));
        for bad in ["x.y", "a.b.7", "a..b", "a.b.1.c.d"] {
            assert!(matches!(set_parameter(&mut doc, bad, json!(0)), Err(HarnessError::UnknownParameter(_))));
        }
    }
}
