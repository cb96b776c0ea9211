//! Metrics tables and their text renderings.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::ScenarioKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format!("{v:.6}"),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell of the first row whose first column equals `flow`.
    pub fn get(&self, flow: &str, column: &str) -> Option<&Cell> {
        let c = self.column(column)?;
        self.rows
            .iter()
            .find(|r| matches!(&r[0], Cell::Text(s) if s == flow))
            .map(|r| &r[c])
    }

    /// Comma separated, `.` decimals, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }
}

/// Columns shared by every scenario kind, before the kind-specific ones.
pub const COMMON_COLUMNS: [&str; 10] = [
    "flow",
    "time_average_age_ms",
    "eq1_loss",
    "delivered",
    "dropped_lifetime_expired",
    "dropped_traffic_pared",
    "dropped_buffer_overflow",
    "dropped_no_route",
    "throughput",
    "energy_consumed_j",
];

pub fn extra_columns(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::Sampling => &[
            "samples_generated",
            "transmissions",
            "sample_rate_per_s",
            "mean_penalty",
            "min_battery_j",
        ],
        ScenarioKind::RandomAccess => &["average_age_slots", "collisions", "idle", "mean_active"],
        ScenarioKind::Dtn => &["injected", "mean_delivery_age_ms", "max_delivery_age_ms"],
        ScenarioKind::MarsRtt => &[
            "min_rtt_ms",
            "mean_rtt_ms",
            "max_rtt_ms",
            "mean_one_way_ms",
            "outage_ms",
            "outage_windows",
        ],
        ScenarioKind::RelayOverflow => &[
            "injected",
            "mean_delivery_age_ms",
            "offered_bytes",
            "forwarded_bytes",
            "overflow_bytes",
            "peak_occupancy_bytes",
        ],
        ScenarioKind::EndToEnd => &["injected", "samples_generated", "mean_delivery_age_ms"],
    }
}

pub fn columns(kind: ScenarioKind) -> Vec<&'static str> {
    COMMON_COLUMNS.iter().chain(extra_columns(kind)).copied().collect()
}

/// Common per-flow metrics; `None` where a kind has no such quantity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowMetrics {
    pub flow: String,
    pub time_average_age_ms: Option<f64>,
    pub eq1_loss: Option<f64>,
    pub delivered: Option<u64>,
    /// Lifetime expired, traffic pared, buffer overflow, no route.
    pub drops: Option<[u64; 4]>,
    pub throughput: Option<f64>,
    pub energy_consumed_j: Option<f64>,
}

impl FlowMetrics {
    pub fn cells(&self) -> Vec<Cell> {
        let d = |i: usize| Cell::from(self.drops.map(|d| d[i]));
        vec![
            self.flow.as_str().into(),
            self.time_average_age_ms.into(),
            self.eq1_loss.into(),
            self.delivered.into(),
            d(0),
            d(1),
            d(2),
            d(3),
            self.throughput.into(),
            self.energy_consumed_j.into(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    /// SHA-256 of the canonical scenario document.
    pub scenario_hash: String,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub kind: ScenarioKind,
    pub horizon_ms: u64,
    pub flows: Vec<FlowMetrics>,
    /// `metrics.csv`: the flows plus kind-specific columns.
    pub metrics: Table,
    /// Additional CSV files by name, e.g. `rtt_trace.csv`.
    pub traces: Vec<(String, Table)>,
    /// Headline numbers for `summary.txt`.
    pub summary: Vec<(String, String)>,
    pub meta: RunMeta,
}

impl MetricsReport {
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.kind);
        let _ = writeln!(out, "seed: {}", self.meta.seed);
        let _ = writeln!(out, "scenario_sha256: {}", self.meta.scenario_hash);
        let _ = writeln!(out, "horizon_ms: {}", self.horizon_ms);
        let _ = writeln!(out, "wall_time_ms: {:.1}", self.meta.wall_time_ms);
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k}: {v}");
        }
        out.push('\n');
        let name_width = self.metrics.columns.iter().map(String::len).max().unwrap_or(0);
        for row in &self.metrics.rows {
            let _ = writeln!(out, "[{}]", row[0].render());
            for (col, cell) in self.metrics.columns.iter().zip(row).skip(1) {
                if *cell != Cell::Empty {
                    let _ = writeln!(out, "  {col:<name_width$}  {}", cell.render());
                }
            }
        }
        out
    }

    /// Every output file in write order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut files = vec![("metrics.csv".to_string(), self.metrics.to_csv())];
        for (name, t) in &self.traces {
            files.push((name.clone(), t.to_csv()));
        }
        files.push(("summary.txt".to_string(), self.summary_text()));
        files
    }
}
