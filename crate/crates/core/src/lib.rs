//! # sumroute
//!
//! Routing-table summarization for multi-attribute keyword discovery routing in
//! peer-to-peer IoT data networks.
//!
//! Data streams are annotated with `attribute=value` descriptors. Every node keeps a
//! routing table of `(attribute, code, neighbor)` entries built by flooding
//! advertisements, and resolves discovery queries by forwarding them towards the
//! neighbors whose entries match. Instead of raw keywords the tables hold compact
//! *codes* drawn from a per-attribute summarization tree, so that a set of sibling
//! codes learned through the same neighbor can be replaced by their parent code.
//!
//! The crate is organized as:
//!
//! - [`annotation`]: the descriptor data model, attr-match and α-match semantics, and
//!   the dataset file format.
//! - [`sumtree`]: alphabetical (trie), hash and meaning (embedding clustering) trees,
//!   their codes, sibling-count vectors and the binary tree file.
//! - [`estimator`]: closed-form and fitted sibling-count estimators used when sibling
//!   count vectors are not carried.
//! - [`routing`]: routing tables with coverage-driven summarization and the
//!   advertisement / query forwarding protocol handlers.
//! - [`simnet`]: a deterministic synchronous-round network simulator with topology
//!   generation, stream placement, workloads and metrics.

pub mod annotation;
pub mod error;
pub mod estimator;
pub mod routing;
pub mod simnet;
pub mod sumtree;

pub use annotation::{
    alpha_match, attr_match, AttrId, AttributeRegistry, Dataset, Descriptor, Query,
    StreamAnnotation,
};
pub use error::{Error, Result};

/// Identifier of a network node in a simulated world.
pub type NodeId = u32;
