use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::PlacementMode;
use super::{SimError, Topology};
use crate::annotation::StreamAnnotation;
use crate::sumtree::{kmeans, EmbeddingSet};
use crate::NodeId;

/// Hosts of every stream, and the reverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    hosts: Vec<Vec<NodeId>>,
    by_node: Vec<Vec<usize>>,
}

impl Placement {
    /// `hosts[s]` lists the nodes holding stream `s`.
    pub fn from_hosts(n_nodes: usize, hosts: Vec<Vec<NodeId>>) -> Self {
        let mut by_node = vec![Vec::new(); n_nodes];
        for (s, hs) in hosts.iter().enumerate() {
            for &h in hs {
                by_node[h as usize].push(s);
            }
        }
        Self { hosts, by_node }
    }

    pub fn hosts(&self, stream: usize) -> &[NodeId] {
        &self.hosts[stream]
    }

    pub fn streams_at(&self, node: NodeId) -> &[usize] {
        &self.by_node[node as usize]
    }

    pub fn stream_count(&self) -> usize {
        self.hosts.len()
    }

    /// Nodes hosting at least one stream, ascending.
    pub fn host_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.by_node
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(n, _)| n as NodeId)
    }
}

/// Placement parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementParams {
    pub mode: PlacementMode,
    pub regions: usize,
    pub clusters: usize,
    /// Extra replicas per stream are drawn from `U{0..=replication}`.
    pub replication: usize,
    /// Nodes of at most this degree are preferred hosts.
    pub edge_degree: usize,
}

fn pick_hosts(pool: &[NodeId], replication: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let extra = rng.gen_range(0..=replication);
    let mut hosts: Vec<NodeId> = pool.choose_multiple(rng, (1 + extra).min(pool.len())).copied().collect();
    hosts.sort_unstable();
    hosts
}

fn edge_hosts(topology: &Topology, nodes: &[NodeId], edge_degree: usize) -> Vec<NodeId> {
    let edge: Vec<NodeId> = nodes
        .iter()
        .copied()
        .filter(|&n| topology.degree(n) <= edge_degree)
        .collect();
    if edge.is_empty() {
        nodes.to_vec()
    } else {
        edge
    }
}

/// Mean embedding of a stream's descriptor values.
pub fn stream_embedding(stream: &StreamAnnotation, emb: &EmbeddingSet) -> Result<Vec<f64>, SimError> {
    let mut sum = vec![0.0; emb.dim()];
    for d in stream.descriptors() {
        let v = emb
            .get(&d.value)
            .ok_or_else(|| SimError::MissingEmbedding(d.value.clone()))?;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = stream.descriptors().len().max(1) as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Places streams on edge hosts, at random or clustered by region.
///
/// Region mode splits the breadth-first order from node 0 into contiguous
/// regions, clusters streams by mean descriptor embedding, and assigns
/// cluster `j` to region `j mod regions`.
pub fn place_streams(
    topology: &Topology,
    streams: &[StreamAnnotation],
    params: &PlacementParams,
    embeddings: Option<&EmbeddingSet>,
    seed: u64,
) -> Result<Placement, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<NodeId> = (0..topology.len() as NodeId).collect();
    let hosts = match params.mode {
        PlacementMode::Random => {
            let pool = edge_hosts(topology, &all, params.edge_degree);
            streams
                .iter()
                .map(|_| pick_hosts(&pool, params.replication, &mut rng))
                .collect()
        }
        PlacementMode::Region => {
            let emb = embeddings.ok_or_else(|| SimError::MissingEmbedding("<no embedding set>".into()))?;
            let order = topology.bfs_order(0);
            let regions = params.regions.min(order.len()).max(1);
            let pools: Vec<Vec<NodeId>> = (0..regions)
                .map(|r| {
                    let lo = r * order.len() / regions;
                    let hi = (r + 1) * order.len() / regions;
                    edge_hosts(topology, &order[lo..hi], params.edge_degree)
                })
                .collect();
            let points = streams
                .iter()
                .map(|s| stream_embedding(s, emb))
                .collect::<Result<Vec<_>, _>>()?;
            let clusters = kmeans(&points, params.clusters, seed ^ 0x5eed);
            let mut region_of = vec![0usize; streams.len()];
            for (j, cluster) in clusters.iter().enumerate() {
                for &s in cluster {
                    region_of[s] = j % regions;
                }
            }
            region_of
                .iter()
                .map(|&r| pick_hosts(&pools[r], params.replication, &mut rng))
                .collect()
        }
    };
    Ok(Placement::from_hosts(topology.len(), hosts))
}
