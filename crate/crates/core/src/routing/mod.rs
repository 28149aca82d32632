//! Routing tables with coverage-driven summarization, and the per-node
//! advertisement and query handlers.
//!
//! Codes are interned in a [`CodeBook`] shared by every node of a world. Ids
//! follow code order, so the descendants of a code occupy the id range right
//! after it. A node's table stores, per code, a bitmask over its neighbor slots.

mod codebook;
mod protocol;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sumtree::{TreeError, TreeKind};

pub use codebook::{CodeBook, CodeId};
pub use protocol::{handle_adv, handle_query, AdvMsg, AdvOutcome, NodeState, QueryMsg, QueryStep};
pub use table::{InsertOutcome, RoutingTable, MAX_NEIGHBORS};

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("code book is built for policy `{found}`, configuration asks for `{expected}`")]
    PolicyMismatch { expected: Policy, found: Policy },
    #[error("node has {0} neighbors; routing tables support at most {MAX_NEIGHBORS}")]
    TooManyNeighbors(usize),
    #[error("coverage threshold {0} is outside [0, 1]")]
    InvalidCoverage(f64),
    #[error("node {0} is not a neighbor")]
    UnknownNeighbor(crate::NodeId),
    #[error("code id {0} is not in the code book")]
    UnknownCode(CodeId),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("unknown coverage source `{0}`")]
    UnknownCoverageSource(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Summarization policy. `None` is the baseline that stores raw keywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Alph,
    Hash,
    Meaning,
    None,
}

impl Policy {
    pub fn tree_kind(self) -> Option<TreeKind> {
        match self {
            Policy::Alph => Some(TreeKind::Alph),
            Policy::Hash => Some(TreeKind::Hash),
            Policy::Meaning => Some(TreeKind::Meaning),
            Policy::None => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Alph => "alph",
            Policy::Hash => "hash",
            Policy::Meaning => "meaning",
            Policy::None => "none",
        }
    }
}

impl From<TreeKind> for Policy {
    fn from(kind: TreeKind) -> Self {
        match kind {
            TreeKind::Alph => Policy::Alph,
            TreeKind::Hash => Policy::Hash,
            TreeKind::Meaning => Policy::Meaning,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "alph" => Ok(Policy::Alph),
            "hash" => Ok(Policy::Hash),
            "meaning" => Ok(Policy::Meaning),
            "none" | "nsum" => Ok(Policy::None),
            _ => Err(RoutingError::UnknownPolicy(s.to_string())),
        }
    }
}

/// Where the size of a full sibling code set comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageSource {
    Scv,
    Estimator,
}

impl fmt::Display for CoverageSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageSource::Scv => "scv",
            CoverageSource::Estimator => "estimator",
        })
    }
}

impl FromStr for CoverageSource {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scv" => Ok(CoverageSource::Scv),
            "estimator" | "est" => Ok(CoverageSource::Estimator),
            _ => Err(RoutingError::UnknownCoverageSource(s.to_string())),
        }
    }
}

/// How a routing table summarizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummarizationConfig {
    pub policy: Policy,
    pub cov: f64,
    pub coverage_source: CoverageSource,
}

impl SummarizationConfig {
    pub fn new(policy: Policy, cov: f64, coverage_source: CoverageSource) -> Result<Self, RoutingError> {
        if !(0.0..=1.0).contains(&cov) {
            return Err(RoutingError::InvalidCoverage(cov));
        }
        Ok(Self {
            policy,
            cov,
            coverage_source,
        })
    }

    /// `rc ≥ cov·s`, with at least one sibling present.
    pub fn covers(&self, present: usize, fscs: u16) -> bool {
        present >= 1 && present as f64 + 1e-9 >= self.cov * fscs as f64
    }
}
