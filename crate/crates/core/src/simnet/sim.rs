use std::collections::{BTreeMap, HashSet, VecDeque};
use std::rc::Rc;

use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::config::{Baseline, PolicyConfig};
use super::metrics::{Metrics, Report};
use super::placement::{place_streams, Placement, PlacementParams};
use super::workload::{gen_workload, WorkloadQuery};
use super::{generate_corpus, generate_topology, Config, SimError, Topology};
use crate::annotation::{alpha_match_advertised, AttrId, Dataset, StreamAnnotation};
use crate::routing::{
    handle_adv, handle_query, AdvMsg, CodeBook, CodeId, CoverageSource, NodeState, Policy, QueryMsg,
    RoutingTable, SummarizationConfig,
};
use crate::sumtree::{build_alph, build_hash, build_meaning, min_depth, EmbeddingSet, SumTree};
use crate::NodeId;

/// Derives an independent seed for one generation stage.
pub fn sub_seed(seed: u64, stage: &str) -> u64 {
    xxh3_64_with_seed(stage.as_bytes(), seed)
}

/// Everything about a run that does not depend on the routing policy.
#[derive(Debug, Clone)]
pub struct World {
    pub topology: Topology,
    pub dataset: Dataset,
    /// The system-wide keyword set per attribute; trees are built over it.
    pub vocabulary: BTreeMap<AttrId, Vec<String>>,
    pub embeddings: EmbeddingSet,
    pub placement: Placement,
    pub workload: Vec<WorkloadQuery>,
}

impl World {
    /// Generates topology, corpus, placement and workload from the config.
    /// Without embeddings, the corpus's topic vectors are used.
    pub fn generate(cfg: &Config, embeddings: Option<EmbeddingSet>) -> Result<Self, SimError> {
        cfg.validate()?;
        let corpus = generate_corpus(&cfg.corpus, sub_seed(cfg.seed, "corpus"));
        let embeddings = embeddings.unwrap_or(corpus.embeddings);
        Self::assemble(cfg, corpus.dataset, corpus.vocabulary, Some(embeddings))
    }

    /// Uses a given dataset; its keywords form the vocabulary. Without
    /// embeddings, trigram vectors of the keywords are used.
    pub fn from_dataset(
        cfg: &Config,
        dataset: Dataset,
        embeddings: Option<EmbeddingSet>,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        let vocabulary = (0..dataset.registry.len() as AttrId)
            .map(|a| (a, dataset.keywords(a)))
            .filter(|(_, kws)| !kws.is_empty())
            .collect();
        Self::assemble(cfg, dataset, vocabulary, embeddings)
    }

    fn assemble(
        cfg: &Config,
        dataset: Dataset,
        vocabulary: BTreeMap<AttrId, Vec<String>>,
        embeddings: Option<EmbeddingSet>,
    ) -> Result<Self, SimError> {
        let net = &cfg.network;
        let topology = generate_topology(
            net.layout,
            net.nodes,
            net.deg_min,
            net.deg_max,
            sub_seed(cfg.seed, "topology"),
        )?;
        let embeddings = embeddings.unwrap_or_else(|| {
            EmbeddingSet::fallback(vocabulary.values().flatten().map(String::as_str))
        });
        let params = PlacementParams {
            mode: cfg.placement.mode,
            regions: cfg.placement.regions,
            clusters: cfg.placement.clusters,
            replication: cfg.placement.replication,
            edge_degree: net.edge_degree,
        };
        let placement = place_streams(
            &topology,
            &dataset.streams,
            &params,
            Some(&embeddings),
            sub_seed(cfg.seed, "placement"),
        )?;
        let workload = gen_workload(
            &dataset.streams,
            topology.len(),
            cfg.workload.queries,
            cfg.workload.alpha,
            cfg.bounds.b_q,
            sub_seed(cfg.seed, "workload"),
        )?;
        Ok(Self {
            topology,
            dataset,
            vocabulary,
            embeddings,
            placement,
            workload,
        })
    }

    pub fn n_attrs(&self) -> usize {
        self.dataset.registry.len()
    }

    /// Total number of distinct keywords across attributes.
    pub fn keyword_count(&self) -> usize {
        self.vocabulary.values().map(Vec::len).sum()
    }
}

/// Builds the tree of one attribute, or `None` for the unsummarized policy.
///
/// A hash depth of 0 selects the smallest depth that fits the keywords.
pub fn build_tree(
    attr: AttrId,
    keywords: &[String],
    policy: &PolicyConfig,
    embeddings: &EmbeddingSet,
    seed: u64,
) -> Result<Option<SumTree>, SimError> {
    let tree_seed = sub_seed(seed, "tree") ^ attr as u64;
    let tree = match policy.name {
        Policy::Hash => {
            let d = if policy.d == 0 { min_depth(keywords.len(), policy.c) } else { policy.d };
            build_hash(attr, keywords, policy.c, d, policy.extra_levels, tree_seed)?
        }
        Policy::Alph => build_alph(attr, keywords, policy.n_char)?,
        Policy::Meaning => build_meaning(attr, keywords, embeddings, policy.c, tree_seed)?,
        Policy::None => return Ok(None),
    };
    Ok(Some(tree))
}

/// Builds one tree per attribute for a tree-based policy.
pub fn build_trees(world: &World, policy: &PolicyConfig, seed: u64) -> Result<Vec<SumTree>, SimError> {
    let mut trees = Vec::with_capacity(world.vocabulary.len());
    for (&attr, kws) in &world.vocabulary {
        match build_tree(attr, kws, policy, &world.embeddings, seed)? {
            Some(tree) => trees.push(tree),
            None => return Ok(Vec::new()),
        }
    }
    Ok(trees)
}

/// The code book of a policy over the world's vocabulary.
pub fn build_codebook(world: &World, policy: &PolicyConfig, seed: u64) -> Result<CodeBook, SimError> {
    let book = match policy.name {
        Policy::None => CodeBook::nsum(
            world
                .vocabulary
                .iter()
                .flat_map(|(&a, kws)| kws.iter().map(move |k| (a, k.as_str()))),
        )?,
        _ => CodeBook::from_trees(&build_trees(world, policy, seed)?)?,
    };
    Ok(book)
}

/// Parameters of one simulation on a fixed world and code book.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub summarization: SummarizationConfig,
    pub b_ad: Option<u32>,
    /// Per-node entry bound enforced by least-recently-used eviction.
    pub lru_bound: Option<usize>,
    /// Forward to every other neighbor when the table has no match, as a
    /// cache-based discovery scheme does after a miss.
    pub flood_on_miss: bool,
}

impl SimParams {
    pub fn from_policy(policy: &PolicyConfig, b_ad: Option<u32>) -> Result<Self, SimError> {
        Ok(Self {
            summarization: SummarizationConfig::new(policy.name, policy.cov, policy.coverage_source)?,
            b_ad,
            lru_bound: None,
            flood_on_miss: false,
        })
    }

    /// Unsummarized tables. A bounded table floods on a miss.
    pub fn nsum(b_ad: Option<u32>, lru_bound: Option<usize>) -> Self {
        Self {
            summarization: SummarizationConfig::new(Policy::None, 1.0, CoverageSource::Scv)
                .expect("cov 1 is valid"),
            b_ad,
            lru_bound,
            flood_on_miss: lru_bound.is_some(),
        }
    }
}

/// Metrics of one run plus per-node detail.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub metrics: Metrics,
    pub node_rt_sizes: Vec<usize>,
    pub evictions: usize,
    pub query_messages: u64,
    pub response_messages: u64,
    pub misled_messages: u64,
}

fn stream_codes<'a>(book: &'a CodeBook, stream: &'a StreamAnnotation) -> impl Iterator<Item = CodeId> + 'a {
    stream
        .descriptors()
        .iter()
        .filter_map(|d| book.keyword(d.attr, &d.value))
}

/// Runs advertisement to quiescence and returns every node's state.
///
/// Every host floods one message with the codes of all its streams. Rounds are
/// synchronous: a FIFO queue delivers all messages of round `r` before any of
/// round `r + 1`.
pub fn advertise(world: &World, book: &CodeBook, params: &SimParams) -> Result<Vec<NodeState>, SimError> {
    let topo = &world.topology;
    let mut nodes = (0..topo.len() as NodeId)
        .map(|n| {
            let table = match params.lru_bound {
                Some(b) => RoutingTable::with_lru_bound(book, b),
                None => RoutingTable::new(book),
            };
            NodeState::new(n, topo.neighbors(n).to_vec(), table)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if params.b_ad == Some(0) {
        return Ok(nodes);
    }
    let mut queue: VecDeque<(NodeId, NodeId, Rc<AdvMsg>)> = VecDeque::new();
    for host in world.placement.host_nodes() {
        let mut codes: Vec<CodeId> = world
            .placement
            .streams_at(host)
            .iter()
            .flat_map(|&s| stream_codes(book, &world.dataset.streams[s]))
            .collect();
        codes.sort_unstable();
        codes.dedup();
        let msg = Rc::new(AdvMsg {
            origin: host,
            codes,
            hops_remaining: params.b_ad.map(|b| b - 1),
        });
        for &nb in topo.neighbors(host) {
            queue.push_back((nb, host, Rc::clone(&msg)));
        }
    }
    while let Some((to, from, msg)) = queue.pop_front() {
        let out = handle_adv(&mut nodes[to as usize], book, &params.summarization, &msg, from)?;
        if let Some(fwd) = out.forward {
            let fwd = Rc::new(fwd);
            for t in out.targets {
                queue.push_back((t, to, Rc::clone(&fwd)));
            }
        }
    }
    Ok(nodes)
}

struct Transmission {
    node: NodeId,
    from: Option<NodeId>,
    parent: usize,
    depth: u32,
    hops: Option<u32>,
}

/// Outcome of one query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryOutcome {
    pub query_messages: u64,
    pub response_messages: u64,
    pub misled_messages: u64,
    /// Arrivals at a node that had already handled the query.
    pub duplicate_messages: u64,
    /// Depth of the farthest responder, `None` without responses.
    pub latency: Option<u32>,
    pub found: Vec<usize>,
    pub truth: Vec<usize>,
}

impl QueryOutcome {
    pub fn recall(&self) -> f64 {
        if self.truth.is_empty() {
            return 1.0;
        }
        let found: HashSet<usize> = self.found.iter().copied().collect();
        let hit = self.truth.iter().filter(|s| found.contains(s)).count();
        hit as f64 / self.truth.len() as f64
    }
}

/// Floods one query along routing-table matches.
///
/// Transmissions form a tree rooted at the source. A node handles a query only
/// once; later arrivals are counted but dropped. Each responder sends one
/// response message per hop back to the source. A transmission is misled when
/// its subtree produced no response.
pub fn run_query(
    world: &World,
    book: &CodeBook,
    nodes: &mut [NodeState],
    query_id: u32,
    wq: &WorkloadQuery,
    flood_on_miss: bool,
) -> QueryOutcome {
    let q = &wq.query;
    let n_attrs = world.n_attrs();
    let streams = &world.dataset.streams;
    let msg_codes: Vec<Option<CodeId>> = q
        .descriptors()
        .iter()
        .map(|d| book.keyword(d.attr, &d.value))
        .collect();
    let mut txs = vec![Transmission {
        node: q.src,
        from: None,
        parent: usize::MAX,
        depth: 0,
        hops: q.hop_bound,
    }];
    let mut visited = vec![false; nodes.len()];
    let mut responded: Vec<u64> = Vec::new();
    let mut out = QueryOutcome::default();
    let mut found = HashSet::new();
    let mut i = 0;
    while i < txs.len() {
        let (node, from, depth, hops) = (txs[i].node, txs[i].from, txs[i].depth, txs[i].hops);
        if std::mem::replace(&mut visited[node as usize], true) {
            responded.push(0);
            out.duplicate_messages += 1;
            i += 1;
            continue;
        }
        let hosted = world.placement.streams_at(node);
        let local: Vec<&StreamAnnotation> = hosted.iter().map(|&s| &streams[s]).collect();
        let msg = QueryMsg {
            query_id,
            codes: msg_codes.clone(),
            hops_remaining: hops,
        };
        let state = &mut nodes[node as usize];
        let mut step = handle_query(state, book, &msg, q, n_attrs, from, &local);
        if flood_on_miss && step.forward.is_empty() && hops != Some(0) {
            step.forward = state.neighbors().iter().copied().filter(|&n| Some(n) != from).collect();
        }
        if step.local_matches.is_empty() {
            responded.push(0);
        } else {
            responded.push(1);
            out.response_messages += depth as u64;
            out.latency = Some(out.latency.map_or(depth, |l| l.max(depth)));
            found.extend(step.local_matches.iter().map(|&m| hosted[m]));
        }
        for t in step.forward {
            txs.push(Transmission {
                node: t,
                from: Some(node),
                parent: i,
                depth: depth + 1,
                hops: hops.map(|h| h - 1),
            });
        }
        i += 1;
    }
    // children always follow their parent, so one backward pass sums subtrees
    for j in (1..txs.len()).rev() {
        if responded[j] == 0 {
            out.misled_messages += 1;
        }
        let p = txs[j].parent;
        responded[p] += responded[j];
    }
    out.query_messages = txs.len() as u64 - 1;
    out.found = found.into_iter().collect();
    out.found.sort_unstable();
    out.truth = (0..streams.len())
        .filter(|&s| alpha_match_advertised(q, &streams[s], n_attrs))
        .collect();
    out
}

/// Advertises, then runs the workload query by query.
pub fn simulate(world: &World, book: &CodeBook, params: &SimParams) -> Result<RunResult, SimError> {
    let mut nodes = advertise(world, book, params)?;
    let node_rt_sizes: Vec<usize> = nodes.iter().map(|n| n.table.len()).collect();
    let mut res = RunResult {
        metrics: Metrics::default(),
        node_rt_sizes,
        evictions: 0,
        query_messages: 0,
        response_messages: 0,
        misled_messages: 0,
    };
    let mut recall_sum = 0.0;
    let mut latency_sum = 0u64;
    let mut answered = 0usize;
    for (i, wq) in world.workload.iter().enumerate() {
        let q = run_query(world, book, &mut nodes, i as u32, wq, params.flood_on_miss);
        res.query_messages += q.query_messages;
        res.response_messages += q.response_messages;
        res.misled_messages += q.misled_messages;
        recall_sum += q.recall();
        if let Some(l) = q.latency {
            latency_sum += l as u64;
            answered += 1;
        }
    }
    res.evictions = nodes.iter().map(|n| n.table.evictions()).sum();
    let n_queries = world.workload.len();
    let mean = |x: f64, n: usize| if n == 0 { 0.0 } else { x / n as f64 };
    res.metrics = Metrics {
        rt_size: mean(res.node_rt_sizes.iter().sum::<usize>() as f64, nodes.len()),
        traffic: mean((res.query_messages + res.response_messages) as f64, n_queries),
        latency: mean(latency_sum as f64, answered),
        misled_pct: if res.query_messages == 0 {
            0.0
        } else {
            100.0 * res.misled_messages as f64 / res.query_messages as f64
        },
        recall: if n_queries == 0 { 1.0 } else { recall_sum / n_queries as f64 },
    };
    Ok(res)
}

/// Runs the configured policy and the unsummarized baseline on one world.
pub fn run_on_world(cfg: &Config, world: &World) -> Result<Report, SimError> {
    let book = build_codebook(world, &cfg.policy, cfg.seed)?;
    let policy = simulate(world, &book, &SimParams::from_policy(&cfg.policy, cfg.bounds.b_ad)?)?;
    let nsum_book;
    let nsum = if cfg.policy.name == Policy::None {
        nsum_book = book;
        policy.clone()
    } else {
        let nsum_policy = PolicyConfig { name: Policy::None, ..cfg.policy.clone() };
        nsum_book = build_codebook(world, &nsum_policy, cfg.seed)?;
        simulate(world, &nsum_book, &SimParams::nsum(cfg.bounds.b_ad, None))?
    };
    let baseline = match cfg.baseline {
        Baseline::NSum => nsum.clone(),
        Baseline::Lru(bound) => simulate(world, &nsum_book, &SimParams::nsum(cfg.bounds.b_ad, Some(bound)))?,
    };
    Ok(Report::new(cfg, policy.metrics, baseline.metrics, nsum.metrics.rt_size))
}

/// Generates the world from the config and runs it.
pub fn run_experiment(cfg: &Config, embeddings: Option<EmbeddingSet>) -> Result<Report, SimError> {
    let world = World::generate(cfg, embeddings)?;
    run_on_world(cfg, &world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{AttributeRegistry, Descriptor, Query};
    use crate::simnet::config::PlacementMode;

    fn stream(id: &str, pairs: &[(AttrId, &str)]) -> StreamAnnotation {
        let ds = pairs.iter().map(|&(a, v)| Descriptor::new(a, v).unwrap()).collect();
        StreamAnnotation::new(id, ds).unwrap()
    }

    fn query(pairs: &[(AttrId, &str)], src: NodeId) -> WorkloadQuery {
        let ds = pairs.iter().map(|&(a, v)| Descriptor::new(a, v).unwrap()).collect();
        WorkloadQuery {
            query: Query::new(ds, 1.0, src, None).unwrap(),
            target: 0,
            issue_round: 0,
        }
    }

    /// A hand-built world with one attribute.
    fn manual_world(
        n: usize,
        edges: &[(NodeId, NodeId)],
        streams: Vec<(StreamAnnotation, Vec<NodeId>)>,
        workload: Vec<WorkloadQuery>,
    ) -> World {
        let (streams, hosts): (Vec<_>, Vec<_>) = streams.into_iter().unzip();
        let dataset = Dataset {
            registry: AttributeRegistry::new(["type"]).unwrap(),
            streams,
        };
        let vocabulary: BTreeMap<AttrId, Vec<String>> = [(0, dataset.keywords(0))].into();
        World {
            topology: Topology::from_edges(n, edges).unwrap(),
            embeddings: EmbeddingSet::fallback(vocabulary[&0].iter()),
            placement: Placement::from_hosts(n, hosts),
            dataset,
            vocabulary,
            workload,
        }
    }

    fn policy(name: Policy, cov: f64) -> PolicyConfig {
        PolicyConfig {
            name,
            cov,
            ..Config::default().policy
        }
    }

    fn run(world: &World, name: Policy, cov: f64) -> RunResult {
        let p = policy(name, cov);
        let book = build_codebook(world, &p, 1).unwrap();
        simulate(world, &book, &SimParams::from_policy(&p, None).unwrap()).unwrap()
    }

    #[test]
    fn line_hand_computation() {
        let world = manual_world(
            3,
            &[(0, 1), (1, 2)],
            vec![(stream("s", &[(0, "rain")]), vec![2])],
            vec![query(&[(0, "rain")], 0)],
        );
        let r = run(&world, Policy::None, 1.0);
        // two query hops out, two response hops back
        assert_eq!(r.query_messages, 2);
        assert_eq!(r.response_messages, 2);
        assert_eq!(r.misled_messages, 0);
        assert_eq!(r.node_rt_sizes, vec![1, 1, 0]);
        assert_eq!(
            r.metrics,
            Metrics {
                rt_size: 2.0 / 3.0,
                traffic: 4.0,
                latency: 2.0,
                misled_pct: 0.0,
                recall: 1.0,
            }
        );
    }

    /// Source 0 reaches the true host 3 directly and a host of three sibling
    /// keywords through node 1. Partial coverage summarizes those siblings into
    /// their parent, which then attracts queries for the fourth sibling.
    fn misled_world() -> World {
        let kws = ["k1", "k2", "k3", "k4"];
        manual_world(
            4,
            &[(0, 1), (1, 2), (0, 3)],
            vec![
                (stream("a", &[(0, kws[0])]), vec![2]),
                (stream("b", &[(0, kws[1])]), vec![2]),
                (stream("c", &[(0, kws[2])]), vec![2]),
                (stream("d", &[(0, kws[3])]), vec![3]),
            ],
            vec![query(&[(0, "k4")], 0)],
        )
    }

    #[test]
    fn partial_coverage_misleads_a_branch() {
        let world = misled_world();
        let r = run(&world, Policy::Meaning, 0.7);
        assert_eq!(r.query_messages, 3);
        assert_eq!(r.misled_messages, 2);
        assert_eq!(r.response_messages, 1);
        assert_eq!(r.metrics.recall, 1.0);
        assert!((r.metrics.misled_pct - 200.0 / 3.0).abs() < 1e-9);

        let exact = run(&world, Policy::Meaning, 1.0);
        assert_eq!(exact.query_messages, 1);
        assert_eq!(exact.misled_messages, 0);
        assert!(exact.metrics.rt_size >= r.metrics.rt_size);
    }

    #[test]
    fn fully_answered_query_has_no_misled_messages() {
        let world = manual_world(
            4,
            &[(0, 1), (0, 2), (0, 3)],
            vec![(stream("s", &[(0, "x")]), vec![1, 2, 3])],
            vec![query(&[(0, "x")], 0)],
        );
        let r = run(&world, Policy::None, 1.0);
        assert_eq!(r.query_messages, 3);
        assert_eq!(r.misled_messages, 0);
        assert_eq!(r.metrics.latency, 1.0);
    }

    fn evicting_line() -> World {
        manual_world(
            3,
            &[(0, 1), (1, 2)],
            vec![
                (stream("b", &[(0, "bee")]), vec![0]),
                (stream("a", &[(0, "ant")]), vec![2]),
            ],
            vec![query(&[(0, "bee")], 2)],
        )
    }

    #[test]
    fn lru_eviction_loses_recall() {
        let world = evicting_line();
        let book = build_codebook(&world, &policy(Policy::None, 1.0), 1).unwrap();
        let full = simulate(&world, &book, &SimParams::nsum(None, None)).unwrap();
        assert_eq!(full.metrics.recall, 1.0);
        let params = SimParams {
            flood_on_miss: false,
            ..SimParams::nsum(None, Some(1))
        };
        let bounded = simulate(&world, &book, &params).unwrap();
        // node 1 keeps the later `ant` entry and drops the only route to `bee`
        assert!(bounded.evictions > 0);
        assert_eq!(bounded.metrics.recall, 0.0);
        assert!(bounded.node_rt_sizes.iter().all(|&s| s <= 1));
    }

    #[test]
    fn flooding_after_a_miss_recovers_at_a_cost() {
        let world = evicting_line();
        let book = build_codebook(&world, &policy(Policy::None, 1.0), 1).unwrap();
        let full = simulate(&world, &book, &SimParams::nsum(None, None)).unwrap();
        let bounded = simulate(&world, &book, &SimParams::nsum(None, Some(1))).unwrap();
        assert!(bounded.evictions > 0);
        assert_eq!(bounded.metrics.recall, 1.0);
        assert_eq!(bounded.metrics.traffic, full.metrics.traffic);

        // the source misses and floods; the leaves have nowhere else to go
        let star = manual_world(
            4,
            &[(0, 1), (0, 2), (0, 3)],
            vec![(stream("s", &[(0, "x")]), vec![3])],
            vec![query(&[(0, "y")], 0)],
        );
        let book = build_codebook(&star, &policy(Policy::None, 1.0), 1).unwrap();
        let plain = simulate(&star, &book, &SimParams::nsum(None, None)).unwrap();
        assert_eq!(plain.query_messages, 0);
        let flooding = simulate(&star, &book, &SimParams::nsum(None, Some(8))).unwrap();
        assert_eq!(flooding.query_messages, 3);
        assert_eq!(flooding.misled_messages, 3);
    }

    #[test]
    fn advertisement_hop_bound() {
        let world = manual_world(
            4,
            &[(0, 1), (1, 2), (2, 3)],
            vec![(stream("s", &[(0, "x")]), vec![0])],
            vec![query(&[(0, "x")], 3)],
        );
        let book = build_codebook(&world, &policy(Policy::None, 1.0), 1).unwrap();
        let params = SimParams::nsum(Some(2), None);
        let r = simulate(&world, &book, &params).unwrap();
        assert_eq!(r.node_rt_sizes, vec![0, 1, 1, 0]);
        assert_eq!(r.metrics.recall, 0.0);
        let none = simulate(&world, &book, &SimParams::nsum(Some(0), None)).unwrap();
        assert_eq!(none.node_rt_sizes, vec![0; 4]);
    }

    fn small_config(seed: u64) -> Config {
        let mut cfg = Config::default();
        cfg.seed = seed;
        cfg.network.nodes = 120;
        cfg.corpus.streams = 400;
        cfg.corpus.vocab = 60;
        cfg.workload.queries = 80;
        cfg
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = small_config(3);
        assert_eq!(run_experiment(&cfg, None).unwrap(), run_experiment(&cfg, None).unwrap());
    }

    #[test]
    fn full_coverage_is_lossless_and_compresses() {
        for seed in [1, 2] {
            let cfg = small_config(seed);
            let world = World::generate(&cfg, None).unwrap();
            let nsum = run(&world, Policy::None, 1.0);
            assert_eq!(nsum.metrics.recall, 1.0);
            for name in [Policy::Hash, Policy::Alph, Policy::Meaning] {
                let r = run(&world, name, 1.0);
                assert_eq!(r.metrics.recall, 1.0, "{name} seed {seed}");
                for (a, b) in r.node_rt_sizes.iter().zip(&nsum.node_rt_sizes) {
                    assert!(a <= b, "{name}: {a} > {b}");
                }
                assert!(r.metrics.traffic >= nsum.metrics.traffic - 1e-9);
            }
        }
    }

    #[test]
    fn region_placement_runs() {
        let mut cfg = small_config(4);
        cfg.placement.mode = PlacementMode::Region;
        let report = run_experiment(&cfg, None).unwrap();
        assert_eq!(report.metrics.recall, 1.0);
        assert!(report.compression_ratio >= 1.0);
    }

    #[test]
    fn latency_at_least_distance_to_nearest_match() {
        let cfg = small_config(5);
        let world = World::generate(&cfg, None).unwrap();
        let book = build_codebook(&world, &cfg.policy, cfg.seed).unwrap();
        let params = SimParams::from_policy(&cfg.policy, None).unwrap();
        let mut nodes = advertise(&world, &book, &params).unwrap();
        for (i, wq) in world.workload.iter().enumerate() {
            let out = run_query(&world, &book, &mut nodes, i as u32, wq, false);
            let dist = world.topology.distances(wq.query.src);
            let nearest = out
                .truth
                .iter()
                .flat_map(|&s| world.placement.hosts(s))
                .map(|&h| dist[h as usize])
                .min()
                .unwrap();
            assert!(out.latency.unwrap() >= nearest);
        }
    }
}
