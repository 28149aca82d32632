use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use toml::{Table, Value};

use super::{Layout, SimError};
use crate::routing::{CoverageSource, Policy};
use crate::sumtree::{DEFAULT_EXTRA_LEVELS, DEFAULT_N_CHAR};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub nodes: usize,
    pub deg_min: usize,
    pub deg_max: usize,
    /// Nodes of at most this degree host streams.
    pub edge_degree: usize,
    pub layout: Layout,
}

/// Synthetic corpus generator settings, unused when a dataset is supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub streams: usize,
    pub attributes: usize,
    /// Keywords per attribute.
    pub vocab: usize,
    pub topics: usize,
    /// Probability that a stream carries a given attribute.
    pub presence: f64,
    /// Probability that a value is drawn outside the stream's topic.
    pub noise: f64,
    /// Zipf exponent of keyword popularity within a topic.
    pub zipf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub name: Policy,
    pub c: u8,
    /// Hash depth; 0 picks the smallest feasible depth per attribute.
    pub d: u16,
    pub extra_levels: u8,
    pub n_char: u16,
    pub cov: f64,
    pub coverage_source: CoverageSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    Random,
    Region,
}

impl fmt::Display for PlacementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlacementMode::Random => "random",
            PlacementMode::Region => "region",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    pub mode: PlacementMode,
    pub regions: usize,
    pub clusters: usize,
    /// Each stream gets `U{0..=replication}` extra hosts.
    pub replication: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub queries: usize,
    pub alpha: f64,
}

/// Hop bounds; `None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Bounds {
    pub b_ad: Option<u32>,
    pub b_q: Option<u32>,
}

/// What a policy run is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    NSum,
    /// nSum with at most this many entries per table, LRU evicted.
    Lru(usize),
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::NSum => f.write_str("nsum"),
            Baseline::Lru(n) => write!(f, "lru:{n}"),
        }
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "nsum" {
            return Ok(Baseline::NSum);
        }
        match s.strip_prefix("lru:").map(str::parse::<usize>) {
            Some(Ok(n)) => Ok(Baseline::Lru(n)),
            _ => Err(format!("expected `nsum` or `lru:<max_entries>`, found `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub network: NetworkConfig,
    pub corpus: CorpusConfig,
    pub policy: PolicyConfig,
    pub placement: PlacementConfig,
    pub workload: WorkloadConfig,
    pub bounds: Bounds,
    pub baseline: Baseline,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            network: NetworkConfig {
                nodes: 1000,
                deg_min: 2,
                deg_max: 10,
                edge_degree: 4,
                layout: Layout::Spatial,
            },
            corpus: CorpusConfig {
                streams: 5000,
                attributes: 15,
                vocab: 200,
                topics: 14,
                presence: 0.6,
                noise: 0.1,
                zipf: 1.0,
            },
            policy: PolicyConfig {
                name: Policy::Hash,
                c: 2,
                d: 0,
                extra_levels: DEFAULT_EXTRA_LEVELS,
                n_char: DEFAULT_N_CHAR,
                cov: 1.0,
                coverage_source: CoverageSource::Scv,
            },
            placement: PlacementConfig {
                mode: PlacementMode::Random,
                regions: 7,
                clusters: 14,
                replication: 2,
            },
            workload: WorkloadConfig {
                queries: 500,
                alpha: 1.0,
            },
            bounds: Bounds::default(),
            baseline: Baseline::NSum,
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> SimError {
    SimError::ConfigInvalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

struct Reader<'a> {
    root: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        let mut table = self.root;
        let mut parts = key.split('.').peekable();
        while let Some(part) = parts.next() {
            let v = table.get(part)?;
            if parts.peek().is_none() {
                return Some(v);
            }
            table = v.as_table()?;
        }
        None
    }

    fn int(&mut self, key: &str, default: Option<i64>) -> Result<i64, SimError> {
        match self.get(key) {
            Some(Value::Integer(i)) => Ok(*i),
            Some(other) => Err(invalid(key, format!("expected an integer, found {}", other.type_str()))),
            None => default.ok_or_else(|| invalid(key, "missing required key")),
        }
    }

    fn uint<T: TryFrom<i64>>(&mut self, key: &str, default: T) -> Result<T, SimError>
    where
        i64: TryFrom<T>,
    {
        let d = i64::try_from(default).ok();
        let v = self.int(key, d)?;
        T::try_from(v).map_err(|_| invalid(key, format!("{v} is out of range")))
    }

    fn float(&mut self, key: &str, default: f64) -> Result<f64, SimError> {
        match self.get(key) {
            Some(Value::Float(f)) => Ok(*f),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(other) => Err(invalid(key, format!("expected a number, found {}", other.type_str()))),
            None => Ok(default),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<&'a str>, SimError> {
        match self.get(key) {
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(other) => Err(invalid(key, format!("expected a string, found {}", other.type_str()))),
            None => Ok(None),
        }
    }

    fn bound(&mut self, key: &str) -> Result<Option<u32>, SimError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) if s.eq_ignore_ascii_case("inf") => Ok(None),
            Some(Value::Integer(i)) => u32::try_from(*i)
                .map(Some)
                .map_err(|_| invalid(key, format!("{i} is out of range"))),
            Some(_) => Err(invalid(key, "expected a hop count or \"inf\"")),
        }
    }

    fn unknown_keys(&self) -> Option<String> {
        fn walk(table: &Table, prefix: &str, used: &BTreeSet<String>) -> Option<String> {
            for (k, v) in table {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                match v {
                    Value::Table(t) => {
                        if let Some(bad) = walk(t, &path, used) {
                            return Some(bad);
                        }
                    }
                    _ if !used.contains(&path) => return Some(path),
                    _ => {}
                }
            }
            None
        }
        walk(self.root, "", &self.used)
    }
}

impl Config {
    /// Parses and validates a TOML config. `seed` is required; everything else
    /// has a default.
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| invalid("<file>", e.message().to_string()))?;
        let mut r = Reader {
            root: &root,
            used: BTreeSet::new(),
        };
        let d = Config::default();
        let seed = r.int("seed", None)?;
        let seed = u64::try_from(seed).map_err(|_| invalid("seed", "must be non-negative"))?;

        let network = NetworkConfig {
            nodes: r.uint("network.nodes", d.network.nodes)?,
            deg_min: r.uint("network.deg_min", d.network.deg_min)?,
            deg_max: r.uint("network.deg_max", d.network.deg_max)?,
            edge_degree: r.uint("network.edge_degree", d.network.edge_degree)?,
            layout: match r.string("network.layout")? {
                Some(s) => s.parse().map_err(|e: String| invalid("network.layout", e))?,
                None => d.network.layout,
            },
        };
        let corpus = CorpusConfig {
            streams: r.uint("corpus.streams", d.corpus.streams)?,
            attributes: r.uint("corpus.attributes", d.corpus.attributes)?,
            vocab: r.uint("corpus.vocab", d.corpus.vocab)?,
            topics: r.uint("corpus.topics", d.corpus.topics)?,
            presence: r.float("corpus.presence", d.corpus.presence)?,
            noise: r.float("corpus.noise", d.corpus.noise)?,
            zipf: r.float("corpus.zipf", d.corpus.zipf)?,
        };
        let name = match r.string("policy.name")? {
            Some(s) => s.parse().map_err(|_| invalid("policy.name", format!("unknown policy `{s}`")))?,
            None => d.policy.name,
        };
        let coverage_source = match r.string("policy.coverage_source")? {
            Some(s) => s
                .parse()
                .map_err(|_| invalid("policy.coverage_source", format!("unknown source `{s}`")))?,
            None => d.policy.coverage_source,
        };
        let policy = PolicyConfig {
            name,
            c: r.uint("policy.c", d.policy.c)?,
            d: r.uint("policy.d", d.policy.d)?,
            extra_levels: r.uint("policy.extra_levels", d.policy.extra_levels)?,
            n_char: r.uint("policy.n_char", d.policy.n_char)?,
            cov: r.float("policy.cov", d.policy.cov)?,
            coverage_source,
        };
        let mode = match r.string("placement.mode")? {
            None => d.placement.mode,
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "random" => PlacementMode::Random,
                "region" => PlacementMode::Region,
                _ => return Err(invalid("placement.mode", format!("expected random or region, found `{s}`"))),
            },
        };
        let placement = PlacementConfig {
            mode,
            regions: r.uint("placement.regions", d.placement.regions)?,
            clusters: r.uint("placement.clusters", d.placement.clusters)?,
            replication: r.uint("placement.replication", d.placement.replication)?,
        };
        let workload = WorkloadConfig {
            queries: r.uint("workload.queries", d.workload.queries)?,
            alpha: r.float("workload.alpha", d.workload.alpha)?,
        };
        let bounds = Bounds {
            b_ad: r.bound("bounds.b_ad")?,
            b_q: r.bound("bounds.b_q")?,
        };
        let baseline = match r.string("baseline")? {
            Some(s) => s.parse().map_err(|e: String| invalid("baseline", e))?,
            None => d.baseline,
        };
        if let Some(key) = r.unknown_keys() {
            return Err(invalid(&key, "unknown key"));
        }
        let cfg = Config {
            seed,
            network,
            corpus,
            policy,
            placement,
            workload,
            bounds,
            baseline,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = &self.network;
        if n.nodes < 2 {
            return Err(invalid("network.nodes", "need at least 2 nodes"));
        }
        if n.deg_min < 1 || n.deg_min > n.deg_max {
            return Err(invalid("network.deg_min", "need 1 <= deg_min <= deg_max"));
        }
        if n.deg_max >= n.nodes {
            return Err(invalid("network.deg_max", "must be below the node count"));
        }
        if n.deg_max > crate::routing::MAX_NEIGHBORS {
            return Err(invalid(
                "network.deg_max",
                format!("at most {} neighbors are supported", crate::routing::MAX_NEIGHBORS),
            ));
        }
        let c = &self.corpus;
        for (key, v) in [("corpus.streams", c.streams), ("corpus.attributes", c.attributes), ("corpus.vocab", c.vocab), ("corpus.topics", c.topics)] {
            if v == 0 {
                return Err(invalid(key, "must be positive"));
            }
        }
        for (key, v) in [("corpus.presence", c.presence), ("corpus.noise", c.noise)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(key, "must lie in [0, 1]"));
            }
        }
        if c.zipf < 0.0 {
            return Err(invalid("corpus.zipf", "must be non-negative"));
        }
        let p = &self.policy;
        if p.c == 0 || p.c > 8 {
            return Err(invalid("policy.c", "must lie in 1..=8"));
        }
        if !(0.0..=1.0).contains(&p.cov) {
            return Err(invalid("policy.cov", "must lie in [0, 1]"));
        }
        if p.n_char < 2 {
            return Err(invalid("policy.n_char", "must be at least 2"));
        }
        let pl = &self.placement;
        if pl.regions == 0 {
            return Err(invalid("placement.regions", "must be positive"));
        }
        if pl.clusters == 0 {
            return Err(invalid("placement.clusters", "must be positive"));
        }
        let w = &self.workload;
        if !(0.0..=1.0).contains(&w.alpha) {
            return Err(invalid("workload.alpha", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Every config value as `(column, value)` in a fixed order.
    pub fn columns(&self) -> Vec<(&'static str, String)> {
        let bound = |b: Option<u32>| b.map(|v| v.to_string()).unwrap_or_else(|| "inf".into());
        vec![
            ("seed", self.seed.to_string()),
            ("nodes", self.network.nodes.to_string()),
            ("deg_min", self.network.deg_min.to_string()),
            ("deg_max", self.network.deg_max.to_string()),
            ("edge_degree", self.network.edge_degree.to_string()),
            ("layout", self.network.layout.to_string()),
            ("streams", self.corpus.streams.to_string()),
            ("attributes", self.corpus.attributes.to_string()),
            ("vocab", self.corpus.vocab.to_string()),
            ("topics", self.corpus.topics.to_string()),
            ("presence", self.corpus.presence.to_string()),
            ("noise", self.corpus.noise.to_string()),
            ("zipf", self.corpus.zipf.to_string()),
            ("policy", self.policy.name.to_string()),
            ("c", self.policy.c.to_string()),
            ("d", self.policy.d.to_string()),
            ("extra_levels", self.policy.extra_levels.to_string()),
            ("n_char", self.policy.n_char.to_string()),
            ("cov", self.policy.cov.to_string()),
            ("coverage_source", self.policy.coverage_source.to_string()),
            ("placement", self.placement.mode.to_string()),
            ("regions", self.placement.regions.to_string()),
            ("clusters", self.placement.clusters.to_string()),
            ("replication", self.placement.replication.to_string()),
            ("queries", self.workload.queries.to_string()),
            ("alpha", self.workload.alpha.to_string()),
            ("b_ad", bound(self.bounds.b_ad)),
            ("b_q", bound(self.bounds.b_q)),
            ("baseline", self.baseline.to_string()),
        ]
    }
}
