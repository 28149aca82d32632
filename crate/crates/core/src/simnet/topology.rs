use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::NodeId;

/// Connected undirected graph; adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adj: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds a topology from an edge list, for hand-made worlds.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, SimError> {
        let mut adj = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a == b || a as usize >= n || b as usize >= n {
                return Err(SimError::InvalidTopology(format!("bad edge {a}-{b}")));
            }
            adj[a as usize].insert(b);
            adj[b as usize].insert(a);
        }
        let t = Self {
            adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
        };
        if !t.is_connected() {
            return Err(SimError::InvalidTopology("graph is not connected".into()));
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        &self.adj[n as usize]
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adj[n as usize].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Breadth-first order from `start`, visiting neighbors in id order.
    pub fn bfs_order(&self, start: NodeId) -> Vec<NodeId> {
        self.bfs(start).0
    }

    /// Hop distances from `start`.
    pub fn distances(&self, start: NodeId) -> Vec<u32> {
        self.bfs(start).1
    }

    fn bfs(&self, start: NodeId) -> (Vec<NodeId>, Vec<u32>) {
        let mut dist = vec![u32::MAX; self.len()];
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([start]);
        dist[start as usize] = 0;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in self.neighbors(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        (order, dist)
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.bfs_order(0).len() == self.len()
    }
}

fn infeasible(msg: impl Into<String>) -> SimError {
    SimError::InfeasibleDegreeSequence(msg.into())
}

fn check_range(n: usize, deg_min: usize, deg_max: usize) -> Result<(), SimError> {
    if n < 2 {
        return Err(infeasible("need at least 2 nodes"));
    }
    if deg_min < 1 || deg_min > deg_max || deg_max >= n {
        return Err(infeasible(format!("degree range {deg_min}..={deg_max} invalid for {n} nodes")));
    }
    Ok(())
}

/// How nodes choose their neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Nodes sit in the unit square and link to nearby nodes.
    #[default]
    Spatial,
    /// Neighbors are chosen without regard to position.
    Random,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Spatial => "spatial",
            Layout::Random => "random",
        })
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spatial" => Ok(Layout::Spatial),
            "random" => Ok(Layout::Random),
            other => Err(format!("unknown layout `{other}`, expected spatial or random")),
        }
    }
}

/// Connected graph with per-node target degrees drawn from `U[deg_min, deg_max]`.
pub fn generate_topology(
    layout: Layout,
    n: usize,
    deg_min: usize,
    deg_max: usize,
    seed: u64,
) -> Result<Topology, SimError> {
    match layout {
        Layout::Spatial => gen_topology(n, deg_min, deg_max, seed),
        Layout::Random => gen_random_topology(n, deg_min, deg_max, seed),
    }
}

/// Random graph without geometry.
///
/// A spanning tree is grown first, attaching nodes in descending target order
/// to random nodes with spare degree. Remaining stubs are paired at random,
/// and nodes still below `deg_min` are joined to nodes with spare room.
pub fn gen_random_topology(n: usize, deg_min: usize, deg_max: usize, seed: u64) -> Result<Topology, SimError> {
    check_range(n, deg_min, deg_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target: Vec<usize> = (0..n).map(|_| rng.gen_range(deg_min..=deg_max)).collect();
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    let spare = |adj: &[BTreeSet<NodeId>], v: usize| target[v].saturating_sub(adj[v].len());

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order.sort_by(|a, b| target[*b].cmp(&target[*a]));
    let mut open: Vec<usize> = vec![order[0]];
    for &v in &order[1..] {
        open.retain(|&u| spare(&adj, u) > 0);
        let Some(&u) = open.choose(&mut rng) else {
            return Err(infeasible("targets too small to form a spanning tree"));
        };
        adj[u].insert(v as NodeId);
        adj[v].insert(u as NodeId);
        open.push(v);
    }

    for _ in 0..20 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(spare(&adj, v))).collect();
        if stubs.len() < 2 {
            break;
        }
        stubs.shuffle(&mut rng);
        let mut added = false;
        for pair in stubs.chunks(2) {
            if let [a, b] = *pair {
                if a != b && spare(&adj, a) > 0 && spare(&adj, b) > 0 && !adj[a].contains(&(b as NodeId)) {
                    adj[a].insert(b as NodeId);
                    adj[b].insert(a as NodeId);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }

    for v in 0..n {
        while adj[v].len() < deg_min {
            let candidates: Vec<usize> = (0..n)
                .filter(|&u| u != v && adj[u].len() < deg_max && !adj[v].contains(&(u as NodeId)))
                .collect();
            let preferred: Vec<usize> = candidates.iter().copied().filter(|&u| spare(&adj, u) > 0).collect();
            let pool = if preferred.is_empty() { &candidates } else { &preferred };
            let Some(&u) = pool.choose(&mut rng) else {
                return Err(infeasible(format!("node {v} cannot reach degree {deg_min}")));
            };
            adj[u].insert(v as NodeId);
            adj[v].insert(u as NodeId);
        }
    }

    Ok(Topology {
        adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

/// Spatial graph: nodes get uniform positions in the unit square.
///
/// A spanning tree is grown in descending target order, attaching each node
/// to the nearest node with spare degree. Every node then links to its nearest
/// nodes with spare degree, and nodes still below `deg_min` join the nearest
/// node below `deg_max`.
pub fn gen_topology(n: usize, deg_min: usize, deg_max: usize, seed: u64) -> Result<Topology, SimError> {
    check_range(n, deg_min, deg_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target: Vec<usize> = (0..n).map(|_| rng.gen_range(deg_min..=deg_max)).collect();
    let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let dist = |a: usize, b: usize| (pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2);
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    let spare = |adj: &[BTreeSet<NodeId>], v: usize| target[v].saturating_sub(adj[v].len());
    let nearest = |adj: &[BTreeSet<NodeId>], v: usize, pool: &[usize]| {
        pool.iter()
            .copied()
            .filter(|&u| u != v && spare(adj, u) > 0 && !adj[v].contains(&(u as NodeId)))
            .min_by(|&a, &b| dist(v, a).total_cmp(&dist(v, b)))
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order.sort_by(|a, b| target[*b].cmp(&target[*a]));
    let mut open: Vec<usize> = vec![order[0]];
    for &v in &order[1..] {
        open.retain(|&u| spare(&adj, u) > 0);
        let Some(u) = nearest(&adj, v, &open) else {
            return Err(infeasible("targets too small to form a spanning tree"));
        };
        adj[u].insert(v as NodeId);
        adj[v].insert(u as NodeId);
        open.push(v);
    }
    let mut fill: Vec<usize> = (0..n).collect();
    fill.shuffle(&mut rng);
    let all: Vec<usize> = (0..n).collect();
    for &v in &fill {
        while spare(&adj, v) > 0 {
            let Some(u) = nearest(&adj, v, &all) else { break };
            adj[u].insert(v as NodeId);
            adj[v].insert(u as NodeId);
        }
    }
    for v in 0..n {
        while adj[v].len() < deg_min {
            let u = (0..n)
                .filter(|&u| u != v && adj[u].len() < deg_max && !adj[v].contains(&(u as NodeId)))
                .min_by(|&a, &b| dist(v, a).total_cmp(&dist(v, b)))
                .ok_or_else(|| infeasible(format!("node {v} cannot reach degree {deg_min}")))?;
            adj[u].insert(v as NodeId);
            adj[v].insert(u as NodeId);
        }
    }
    Ok(Topology {
        adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(t: &Topology, lo: usize, hi: usize) {
        assert!(t.is_connected());
        for v in 0..t.len() as NodeId {
            let d = t.degree(v);
            assert!((lo..=hi).contains(&d), "node {v} degree {d}");
            for &w in t.neighbors(v) {
                assert_ne!(w, v);
                assert!(t.neighbors(w).contains(&v));
            }
        }
    }

    const LAYOUTS: [Layout; 2] = [Layout::Spatial, Layout::Random];

    #[test]
    fn single_edge_in_every_layout() {
        for layout in LAYOUTS {
            let t = generate_topology(layout, 2, 1, 1, 0).unwrap();
            assert_eq!(t.neighbors(0), &[1]);
        }
    }

    #[test]
    fn deterministic_thousand_nodes() {
        for layout in LAYOUTS {
            let a = generate_topology(layout, 1000, 2, 10, 42).unwrap();
            let b = generate_topology(layout, 1000, 2, 10, 42).unwrap();
            assert_eq!(a, b);
            check(&a, 2, 10);
            assert_ne!(generate_topology(layout, 1000, 2, 10, 43).unwrap(), a);
        }
    }

    #[test]
    fn degree_histogram_is_near_uniform() {
        // chi-square against U[2, 10] over 10K nodes, 8 degrees of freedom;
        // 26.1 is the 0.001 critical value
        for layout in LAYOUTS {
            let t = generate_topology(layout, 10_000, 2, 10, 7).unwrap();
            check(&t, 2, 10);
            let mut counts = [0usize; 11];
            for v in 0..t.len() as NodeId {
                counts[t.degree(v)] += 1;
            }
            let expected = 10_000.0 / 9.0;
            let chi2: f64 = counts[2..=10]
                .iter()
                .map(|&c| (c as f64 - expected).powi(2) / expected)
                .sum();
            assert!(chi2 < 26.1, "{layout}: chi2 {chi2}, counts {counts:?}");
        }
    }

    #[test]
    fn spatial_graphs_have_longer_paths() {
        let spatial = gen_topology(1000, 2, 10, 5).unwrap();
        let random = gen_random_topology(1000, 2, 10, 5).unwrap();
        let ecc = |t: &Topology| *t.distances(0).iter().max().unwrap();
        assert!(ecc(&spatial) > ecc(&random));
    }

    #[test]
    fn infeasible_sequences() {
        for layout in LAYOUTS {
            assert!(matches!(
                generate_topology(layout, 3, 1, 1, 0),
                Err(SimError::InfeasibleDegreeSequence(_))
            ));
            assert!(generate_topology(layout, 1, 1, 1, 0).is_err());
            assert!(generate_topology(layout, 5, 3, 2, 0).is_err());
            assert!(generate_topology(layout, 5, 1, 5, 0).is_err());
        }
        assert_eq!("random".parse::<Layout>(), Ok(Layout::Random));
        assert!("grid".parse::<Layout>().is_err());
    }

    #[test]
    fn bfs_and_edges() {
        let t = Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        assert_eq!(t.bfs_order(0), vec![0, 1, 2, 3]);
        assert_eq!(t.distances(3), vec![2, 2, 1, 0]);
        assert_eq!(t.edge_count(), 4);
        assert!(Topology::from_edges(3, &[(0, 1)]).is_err());
    }
}
