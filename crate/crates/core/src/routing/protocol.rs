use std::collections::HashSet;

use super::{CodeBook, CodeId, InsertOutcome, RoutingError, RoutingTable, SummarizationConfig, MAX_NEIGHBORS};
use crate::annotation::{alpha_match, Query, StreamAnnotation};
use crate::NodeId;

/// Routing state owned by one node.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    neighbors: Vec<NodeId>,
    pub table: RoutingTable,
    seen_origins: HashSet<NodeId>,
}

impl NodeState {
    pub fn new(id: NodeId, neighbors: Vec<NodeId>, table: RoutingTable) -> Result<Self, RoutingError> {
        if neighbors.len() > MAX_NEIGHBORS {
            return Err(RoutingError::TooManyNeighbors(neighbors.len()));
        }
        Ok(Self {
            id,
            neighbors,
            table,
            seen_origins: HashSet::new(),
        })
    }

    pub fn neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub fn slot_of(&self, neighbor: NodeId) -> Option<u8> {
        self.neighbors.iter().position(|&n| n == neighbor).map(|p| p as u8)
    }

    fn all_slots(&self) -> u16 {
        ((1u32 << self.neighbors.len()) - 1) as u16
    }
}

/// Advertisement of all descriptors hosted by `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvMsg {
    pub origin: NodeId,
    pub codes: Vec<CodeId>,
    /// `None` is unbounded.
    pub hops_remaining: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdvOutcome {
    pub outcomes: Vec<InsertOutcome>,
    /// Message to send to every neighbor in `targets`.
    pub forward: Option<AdvMsg>,
    pub targets: Vec<NodeId>,
}

/// Handles an advertisement arriving from `sender`.
///
/// Only the first advertisement per origin is processed. Its codes are
/// inserted toward the sender, and the node forwards the entries now covering
/// them (possibly summarized parents) to every other neighbor.
pub fn handle_adv(
    state: &mut NodeState,
    book: &CodeBook,
    cfg: &SummarizationConfig,
    msg: &AdvMsg,
    sender: NodeId,
) -> Result<AdvOutcome, RoutingError> {
    if msg.origin == state.id || !state.seen_origins.insert(msg.origin) {
        return Ok(AdvOutcome::default());
    }
    let slot = state
        .slot_of(sender)
        .ok_or(RoutingError::UnknownNeighbor(sender))?;
    let mut outcomes = Vec::with_capacity(msg.codes.len());
    for &code in &msg.codes {
        outcomes.push(state.table.insert(book, cfg, code, slot)?);
    }
    if msg.hops_remaining == Some(0) {
        return Ok(AdvOutcome {
            outcomes,
            ..AdvOutcome::default()
        });
    }
    let mut codes: Vec<CodeId> = msg
        .codes
        .iter()
        .map(|&c| state.table.covering(book, c, slot).unwrap_or(c))
        .collect();
    codes.sort_unstable();
    codes.dedup();
    let targets = state.neighbors.iter().copied().filter(|&n| n != sender).collect();
    Ok(AdvOutcome {
        outcomes,
        forward: Some(AdvMsg {
            origin: msg.origin,
            codes,
            hops_remaining: msg.hops_remaining.map(|h| h - 1),
        }),
        targets,
    })
}

/// A coded query in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMsg {
    pub query_id: u32,
    /// One code per query descriptor, `None` when the keyword has no code.
    pub codes: Vec<Option<CodeId>>,
    pub hops_remaining: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryStep {
    /// Indices into the local stream list that α-match the query.
    pub local_matches: Vec<usize>,
    pub forward: Vec<NodeId>,
}

/// Processes a query at a node: local α-matching on raw values, then the
/// forwarding neighbors from the table, never including the arrival neighbor.
pub fn handle_query(
    state: &mut NodeState,
    book: &CodeBook,
    msg: &QueryMsg,
    query: &Query,
    n_attrs: usize,
    from: Option<NodeId>,
    local: &[&StreamAnnotation],
) -> QueryStep {
    let local_matches = local
        .iter()
        .enumerate()
        .filter(|(_, ann)| alpha_match(query, ann, n_attrs))
        .map(|(i, _)| i)
        .collect();
    if msg.hops_remaining == Some(0) {
        return QueryStep {
            local_matches,
            forward: Vec::new(),
        };
    }
    let mut candidates = state.all_slots();
    if let Some(slot) = from.and_then(|f| state.slot_of(f)) {
        candidates &= !(1 << slot);
    }
    let mask = state
        .table
        .lookup(book, &msg.codes, query.alpha, n_attrs, candidates);
    let forward = (0..state.neighbors.len())
        .filter(|&s| mask & (1 << s) != 0)
        .map(|s| state.neighbors[s])
        .collect();
    QueryStep {
        local_matches,
        forward,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Descriptor;
    use crate::routing::{CoverageSource, Policy};

    fn line() -> (CodeBook, SummarizationConfig, Vec<NodeState>) {
        let book = CodeBook::nsum([(0, "rain"), (1, "oslo")]).unwrap();
        let cfg = SummarizationConfig::new(Policy::None, 1.0, CoverageSource::Scv).unwrap();
        let nodes = vec![
            NodeState::new(0, vec![1], RoutingTable::new(&book)).unwrap(),
            NodeState::new(1, vec![0, 2], RoutingTable::new(&book)).unwrap(),
            NodeState::new(2, vec![1], RoutingTable::new(&book)).unwrap(),
        ];
        (book, cfg, nodes)
    }

    #[test]
    fn two_hop_propagation() {
        let (book, cfg, mut nodes) = line();
        let codes = vec![book.keyword(0, "rain").unwrap(), book.keyword(1, "oslo").unwrap()];
        let msg = AdvMsg {
            origin: 0,
            codes: codes.clone(),
            hops_remaining: None,
        };
        let at_b = handle_adv(&mut nodes[1], &book, &cfg, &msg, 0).unwrap();
        assert_eq!(at_b.targets, vec![2]);
        let fwd = at_b.forward.unwrap();
        let at_c = handle_adv(&mut nodes[2], &book, &cfg, &fwd, 1).unwrap();
        assert!(at_c.forward.is_some());
        assert!(at_c.targets.is_empty());
        for &c in &codes {
            assert!(nodes[2].table.contains(c, 0));
            assert!(nodes[1].table.contains(c, 0));
        }
        assert_eq!(nodes[2].table.dump(&book, nodes[2].neighbors()), "0 rain$ 1 - false\n1 oslo$ 1 - false\n");
    }

    #[test]
    fn hop_bound_zero_stops_forwarding() {
        let (book, cfg, mut nodes) = line();
        let msg = AdvMsg {
            origin: 0,
            codes: vec![0],
            hops_remaining: Some(0),
        };
        let out = handle_adv(&mut nodes[1], &book, &cfg, &msg, 0).unwrap();
        assert_eq!(out.outcomes, vec![InsertOutcome::Added { removed: 0 }]);
        assert!(out.forward.is_none());
        assert_eq!(nodes[1].table.len(), 1);
    }

    #[test]
    fn repeated_advertisement_is_ignored() {
        let (book, cfg, mut nodes) = line();
        let msg = AdvMsg {
            origin: 0,
            codes: vec![0, 1],
            hops_remaining: None,
        };
        handle_adv(&mut nodes[1], &book, &cfg, &msg, 0).unwrap();
        let again = handle_adv(&mut nodes[1], &book, &cfg, &msg, 0).unwrap();
        assert_eq!(again, AdvOutcome::default());
        assert_eq!(nodes[1].table.len(), 2);
        // nodes never route toward themselves
        let own = handle_adv(&mut nodes[0], &book, &cfg, &msg, 1).unwrap();
        assert_eq!(own, AdvOutcome::default());
        assert!(nodes[0].table.is_empty());
    }

    #[test]
    fn unknown_sender() {
        let (book, cfg, mut nodes) = line();
        let msg = AdvMsg {
            origin: 5,
            codes: vec![0],
            hops_remaining: None,
        };
        assert_eq!(
            handle_adv(&mut nodes[0], &book, &cfg, &msg, 2).unwrap_err(),
            RoutingError::UnknownNeighbor(2)
        );
    }

    #[test]
    fn query_answers_locally_and_keeps_forwarding() {
        let (book, cfg, mut nodes) = line();
        let rain = book.keyword(0, "rain").unwrap();
        let msg = AdvMsg {
            origin: 2,
            codes: vec![rain],
            hops_remaining: None,
        };
        handle_adv(&mut nodes[1], &book, &cfg, &msg, 2).unwrap();
        let stream = StreamAnnotation::new("s", vec![Descriptor::new(0, "rain").unwrap()]).unwrap();
        let query = Query::new(vec![Descriptor::new(0, "rain").unwrap()], 1.0, 0, None).unwrap();
        let qmsg = QueryMsg {
            query_id: 0,
            codes: vec![Some(rain)],
            hops_remaining: None,
        };
        let step = handle_query(&mut nodes[1], &book, &qmsg, &query, 2, Some(0), &[&stream]);
        assert_eq!(step.local_matches, vec![0]);
        assert_eq!(step.forward, vec![2]);
        // arriving from the only matching neighbor: nowhere to go
        let step = handle_query(&mut nodes[1], &book, &qmsg, &query, 2, Some(2), &[]);
        assert!(step.local_matches.is_empty());
        assert!(step.forward.is_empty());
        // nothing known at the far end
        let step = handle_query(&mut nodes[0], &book, &qmsg, &query, 2, None, &[]);
        assert_eq!(step, QueryStep::default());
        let bounded = QueryMsg {
            hops_remaining: Some(0),
            ..qmsg
        };
        let step = handle_query(&mut nodes[1], &book, &bounded, &query, 2, Some(0), &[&stream]);
        assert_eq!(step.local_matches, vec![0]);
        assert!(step.forward.is_empty());
    }
}
