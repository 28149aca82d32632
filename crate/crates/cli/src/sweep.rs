use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use sumroute::routing::Policy;
use sumroute::simnet::{run_on_world, Config, Metrics, Report, SimError, World};
use sumroute::sumtree::EmbeddingSet;
use sumroute::Dataset;
use toml::{Table, Value};

use crate::input::config_from_table;

/// A base config and the values each swept field takes.
#[derive(Debug, Clone)]
pub struct Plan {
    pub base: Config,
    pub nodes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub policy: Vec<Policy>,
    pub c: Vec<u8>,
    pub cov: Vec<f64>,
    pub out: Option<PathBuf>,
}

/// One point of the Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub nodes: usize,
    pub seed: u64,
    pub policy: Policy,
    pub c: u8,
    pub cov: f64,
}

fn invalid(key: &str, reason: impl Into<String>) -> SimError {
    SimError::ConfigInvalid {
        key: key.into(),
        reason: reason.into(),
    }
}

fn list<T>(sweep: &Table, key: &str, parse: impl Fn(&Value) -> Option<T>) -> Result<Option<Vec<T>>, SimError> {
    let full = format!("sweep.{key}");
    let Some(v) = sweep.get(key) else {
        return Ok(None);
    };
    let arr = v.as_array().ok_or_else(|| invalid(&full, "expected a list"))?;
    if arr.is_empty() {
        return Err(invalid(&full, "list is empty"));
    }
    arr.iter()
        .map(|x| parse(x).ok_or_else(|| invalid(&full, format!("bad value `{x}`"))))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

impl Plan {
    /// Parses a plan file:
    ///
    /// ```toml
    /// out = "results"
    /// [base]
    /// seed = 1
    /// [base.network]
    /// nodes = 1000
    /// [sweep]
    /// nodes = [500, 1000]
    /// seeds = [1, 2, 3]
    /// policy = ["hash", "meaning"]
    /// c = [1, 2, 3]
    /// cov = [1.0, 0.75, 0.5, 0.25]
    /// ```
    ///
    /// Lists that are left out hold the base value only.
    pub fn parse(text: &str, seed: Option<u64>) -> Result<Self, SimError> {
        let mut root = crate::input::parse_table(text)?;
        for key in root.keys() {
            if !["out", "base", "sweep"].contains(&key.as_str()) {
                return Err(invalid(key, "unknown key"));
            }
        }
        let base = match root.remove("base") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(invalid("base", "expected a table")),
            None => Table::new(),
        };
        let base = config_from_table(base, seed).map_err(|e| match e {
            SimError::ConfigInvalid { key, reason } => invalid(&format!("base.{key}"), reason),
            other => other,
        })?;
        let sweep = match root.remove("sweep") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(invalid("sweep", "expected a table")),
            None => Table::new(),
        };
        for key in sweep.keys() {
            if !["nodes", "seeds", "policy", "c", "cov"].contains(&key.as_str()) {
                return Err(invalid(&format!("sweep.{key}"), "unknown key"));
            }
        }
        let uint = |v: &Value| v.as_integer().filter(|&i| i >= 0);
        let out = match root.remove("out") {
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(invalid("out", "expected a string")),
            None => None,
        };
        Ok(Self {
            nodes: list(&sweep, "nodes", |v| uint(v).map(|i| i as usize))?.unwrap_or(vec![base.network.nodes]),
            seeds: list(&sweep, "seeds", |v| uint(v).map(|i| i as u64))?.unwrap_or(vec![base.seed]),
            policy: list(&sweep, "policy", |v| v.as_str()?.parse().ok())?.unwrap_or(vec![base.policy.name]),
            c: list(&sweep, "c", |v| uint(v).and_then(|i| u8::try_from(i).ok()))?.unwrap_or(vec![base.policy.c]),
            cov: list(&sweep, "cov", |v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))?
                .unwrap_or(vec![base.policy.cov]),
            base,
            out,
        })
    }

    /// Points in a fixed order: nodes, then seed, policy, c and cov. Points
    /// sharing nodes and seed are adjacent, so their world is built once.
    pub fn points(&self) -> Vec<Point> {
        let mut pts = Vec::new();
        for &nodes in &self.nodes {
            for &seed in &self.seeds {
                for &policy in &self.policy {
                    for &c in &self.c {
                        for &cov in &self.cov {
                            pts.push(Point { nodes, seed, policy, c, cov });
                        }
                    }
                }
            }
        }
        pts
    }

    pub fn config_at(&self, p: &Point) -> Config {
        let mut cfg = self.base.clone();
        cfg.network.nodes = p.nodes;
        cfg.seed = p.seed;
        cfg.policy.name = p.policy;
        cfg.policy.c = p.c;
        cfg.policy.cov = p.cov;
        cfg
    }
}

type Key = (usize, String, u8, String);

fn key_of(p: &Point) -> Key {
    (p.nodes, p.policy.to_string(), p.c, p.cov.to_string())
}

#[derive(Default)]
struct Aggregate {
    runs: usize,
    failed: usize,
    metrics: [f64; 5],
    baseline: [f64; 5],
    ratio: f64,
}

/// Runs every point, writing `runs.csv` and `summary.csv` under `out`.
/// A failing point leaves an `error` entry in its row and the sweep goes on.
pub fn run_sweep(
    plan: &Plan,
    dataset: Option<&Dataset>,
    embeddings: Option<&EmbeddingSet>,
    out: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let points = plan.points();
    let mut runs = csv::Writer::from_path(out.join("runs.csv"))?;
    let mut header = Report::new(&plan.base, Metrics::default(), Metrics::default(), 0.0).field_names();
    header.push("error".into());
    runs.write_record(&header)?;

    let mut world: Option<((usize, u64), Result<World, String>)> = None;
    let mut agg: BTreeMap<Key, Aggregate> = BTreeMap::new();
    let mut order: Vec<Key> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        eprintln!(
            "[{}/{}] nodes={} seed={} policy={} c={} cov={}",
            i + 1,
            points.len(),
            p.nodes,
            p.seed,
            p.policy,
            p.c,
            p.cov
        );
        let cfg = plan.config_at(p);
        if world.as_ref().map(|(k, _)| *k) != Some((p.nodes, p.seed)) {
            let w = cfg.validate().and_then(|_| match dataset {
                Some(ds) => World::from_dataset(&cfg, ds.clone(), embeddings.cloned()),
                None => World::generate(&cfg, embeddings.cloned()),
            });
            world = Some(((p.nodes, p.seed), w.map_err(|e| e.to_string())));
        }
        let result = match &world.as_ref().unwrap().1 {
            Ok(w) => cfg.validate().and_then(|_| run_on_world(&cfg, w)).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        let key = key_of(p);
        if !agg.contains_key(&key) {
            order.push(key.clone());
        }
        let a = agg.entry(key).or_default();
        match result {
            Ok(report) => {
                let mut row = report.fields();
                row.push(String::new());
                runs.write_record(&row)?;
                a.runs += 1;
                for (s, v) in a.metrics.iter_mut().zip(report.metrics.values()) {
                    *s += v;
                }
                for (s, v) in a.baseline.iter_mut().zip(report.baseline.values()) {
                    *s += v;
                }
                a.ratio += report.compression_ratio;
            }
            Err(e) => {
                eprintln!("  failed: {e}");
                let mut row: Vec<String> = cfg.columns().into_iter().map(|(_, v)| v).collect();
                row.resize(header.len() - 1, String::new());
                row.push(e);
                runs.write_record(&row)?;
                a.failed += 1;
            }
        }
    }
    runs.flush()?;

    let mut summary = csv::Writer::from_path(out.join("summary.csv"))?;
    let mut cols: Vec<String> = ["nodes", "policy", "c", "cov", "runs", "failed"].map(String::from).to_vec();
    cols.extend(Metrics::FIELDS.iter().map(|f| format!("mean_{f}")));
    cols.extend(Metrics::FIELDS.iter().map(|f| format!("mean_baseline_{f}")));
    cols.push("mean_compression_ratio".into());
    summary.write_record(&cols)?;
    for key in &order {
        let a = &agg[key];
        let mean = |s: f64| if a.runs == 0 { String::new() } else { (s / a.runs as f64).to_string() };
        let mut row = vec![
            key.0.to_string(),
            key.1.clone(),
            key.2.to_string(),
            key.3.clone(),
            a.runs.to_string(),
            a.failed.to_string(),
        ];
        row.extend(a.metrics.iter().map(|&s| mean(s)));
        row.extend(a.baseline.iter().map(|&s| mean(s)));
        row.push(mean(a.ratio));
        summary.write_record(&row)?;
    }
    summary.flush()?;
    Ok(())
}
