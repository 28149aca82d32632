use serde::Serialize;
use serde_json::{json, Map, Value};

use super::Config;

/// Aggregate metrics of one simulation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    /// Mean routing-table entries per node after advertisement.
    pub rt_size: f64,
    /// Mean query plus response messages per query.
    pub traffic: f64,
    /// Mean hops to the farthest responder, over queries with a response.
    pub latency: f64,
    /// Misled query messages as a percentage of all query messages.
    pub misled_pct: f64,
    /// Mean fraction of matching streams found per query.
    pub recall: f64,
}

impl Metrics {
    pub const FIELDS: [&'static str; 5] = ["rt_size", "traffic", "latency", "misled_pct", "recall"];

    pub fn values(&self) -> [f64; 5] {
        [self.rt_size, self.traffic, self.latency, self.misled_pct, self.recall]
    }
}

/// Config, policy metrics, baseline metrics and compression ratio of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<(&'static str, String)>,
    pub metrics: Metrics,
    pub baseline: Metrics,
    /// Unsummarized RT-size over the policy's RT-size.
    pub compression_ratio: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn scalar(s: &str) -> Value {
    if let Ok(i) = s.parse::<i64>() {
        return json!(i);
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => json!(s),
    }
}

impl Report {
    pub fn new(cfg: &Config, metrics: Metrics, baseline: Metrics, nsum_rt_size: f64) -> Self {
        Self {
            columns: cfg.columns(),
            metrics,
            baseline,
            compression_ratio: ratio(nsum_rt_size, metrics.rt_size),
        }
    }

    /// Column names matching [`Report::fields`].
    pub fn field_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.columns.iter().map(|(k, _)| k.to_string()).collect();
        cols.extend(Metrics::FIELDS.iter().map(|f| f.to_string()));
        cols.extend(Metrics::FIELDS.iter().map(|f| format!("baseline_{f}")));
        cols.push("compression_ratio".into());
        cols
    }

    pub fn fields(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.columns.iter().map(|(_, v)| v.clone()).collect();
        cols.extend(self.metrics.values().iter().map(f64::to_string));
        cols.extend(self.baseline.values().iter().map(f64::to_string));
        cols.push(self.compression_ratio.to_string());
        cols
    }

    pub fn csv_header(&self) -> String {
        self.field_names().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().join(",")
    }

    pub fn to_json(&self) -> Value {
        let config: Map<String, Value> = self
            .columns
            .iter()
            .map(|(k, v)| (k.to_string(), scalar(v)))
            .collect();
        json!({
            "config": config,
            "metrics": self.metrics,
            "baseline": self.baseline,
            "compression_ratio": self.compression_ratio,
        })
    }
}
