use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use sumroute::simnet::{Config, SimError, World};
use sumroute::sumtree::EmbeddingSet;
use sumroute::Dataset;
use toml::{Table, Value};

/// Inputs shared by the commands that set up a world.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Run config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset file used instead of the generated corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Keyword vectors, one `keyword v1 v2 ...` line each.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Parses a config table, inserting the seed override before validation so a
/// file without `seed` is accepted when one is given on the command line.
pub fn config_from_table(mut table: Table, seed: Option<u64>) -> Result<Config, SimError> {
    if let Some(seed) = seed {
        let seed = i64::try_from(seed).map_err(|_| SimError::ConfigInvalid {
            key: "seed".into(),
            reason: "too large".into(),
        })?;
        table.insert("seed".into(), Value::Integer(seed));
    }
    Config::from_toml_str(&table.to_string())
}

pub fn parse_table(text: &str) -> Result<Table, SimError> {
    text.parse().map_err(|e: toml::de::Error| SimError::ConfigInvalid {
        key: "<file>".into(),
        reason: e.message().to_string(),
    })
}

impl InputArgs {
    /// The config file with overrides applied, or the defaults when no file
    /// was given.
    pub fn config(&self) -> Result<Config> {
        let table = match &self.config {
            Some(path) => parse_table(&read(path)?)?,
            None => {
                let mut t = Table::new();
                t.insert("seed".into(), Value::Integer(Config::default().seed as i64));
                t
            }
        };
        Ok(config_from_table(table, self.seed)?)
    }

    pub fn require_config(&self) -> Result<Config> {
        anyhow::ensure!(self.config.is_some(), "--config is required");
        self.config()
    }

    pub fn dataset(&self) -> Result<Option<Dataset>> {
        let Some(path) = &self.corpus else {
            return Ok(None);
        };
        let ds = Dataset::parse(&read(path)?).with_context(|| format!("in {}", path.display()))?;
        Ok(Some(ds))
    }

    pub fn embeddings(&self) -> Result<Option<EmbeddingSet>> {
        let Some(path) = &self.embeddings else {
            return Ok(None);
        };
        let set = EmbeddingSet::parse(&read(path)?).with_context(|| format!("in {}", path.display()))?;
        Ok(Some(set))
    }

    pub fn world(&self, cfg: &Config) -> Result<World> {
        let emb = self.embeddings()?;
        let world = match self.dataset()? {
            Some(ds) => World::from_dataset(cfg, ds, emb)?,
            None => World::generate(cfg, emb)?,
        };
        Ok(world)
    }
}
