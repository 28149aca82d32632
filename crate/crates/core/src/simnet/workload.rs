use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::annotation::{Query, StreamAnnotation};
use crate::NodeId;

/// One issued query and the stream it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadQuery {
    pub query: Query,
    pub target: usize,
    /// Queries run one after another; each starts once the previous one is quiescent.
    pub issue_round: u32,
}

/// Draws queries by picking a stream uniformly, then a uniform-size subset
/// of its descriptors, and a uniform source node.
pub fn gen_workload(
    streams: &[StreamAnnotation],
    n_nodes: usize,
    queries: usize,
    alpha: f64,
    hop_bound: Option<u32>,
    seed: u64,
) -> Result<Vec<WorkloadQuery>, SimError> {
    if streams.is_empty() || n_nodes == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..queries)
        .map(|i| {
            let target = rng.gen_range(0..streams.len());
            let ds = streams[target].descriptors();
            let k = rng.gen_range(1..=ds.len());
            let chosen = ds.choose_multiple(&mut rng, k).cloned().collect();
            let src = rng.gen_range(0..n_nodes) as NodeId;
            Ok(WorkloadQuery {
                query: Query::new(chosen, alpha, src, hop_bound)?,
                target,
                issue_round: i as u32,
            })
        })
        .collect()
}
