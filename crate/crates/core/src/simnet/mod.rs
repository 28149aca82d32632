//! Deterministic round-based network simulation.

mod config;
mod corpus;
mod metrics;
mod placement;
mod sim;
mod topology;
mod workload;

use thiserror::Error;

pub use config::{
    Baseline, Bounds, Config, CorpusConfig, NetworkConfig, PlacementConfig, PlacementMode, PolicyConfig,
    WorkloadConfig,
};
pub use corpus::{generate_corpus, Corpus};
pub use metrics::{Metrics, Report};
pub use placement::{place_streams, stream_embedding, Placement, PlacementParams};
pub use sim::{
    advertise, build_codebook, build_tree, build_trees, run_experiment, run_on_world, run_query, simulate, sub_seed,
    QueryOutcome, RunResult, SimParams, World,
};
pub use topology::{gen_random_topology, gen_topology, generate_topology, Layout, Topology};
pub use workload::{gen_workload, WorkloadQuery};

use crate::annotation::AnnotationError;
use crate::routing::RoutingError;
use crate::sumtree::TreeError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config key `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },
    #[error("infeasible degree sequence: {0}")]
    InfeasibleDegreeSequence(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("no embedding for keyword `{0}`")]
    MissingEmbedding(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}
