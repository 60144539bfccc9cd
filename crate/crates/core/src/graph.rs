//! Instantaneous and dynamic graphs over a static node set.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge {{{0},{1}}} listed twice")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge endpoint {node} out of range for n = {n}")]
    EndpointOutOfRange { node: NodeId, n: usize },
    #[error("round {round} has n = {found}, schedule has n = {expected}")]
    NodeCountMismatch { round: usize, expected: usize, found: usize },
    #[error("schedule has {available} rounds, {requested} requested")]
    InsufficientSchedule { requested: usize, available: usize },
    #[error("round {round} is disconnected")]
    Disconnected { round: usize },
    #[error("round {round} out of range (horizon {horizon})")]
    RoundOutOfRange { round: usize, horizon: usize },
    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("node count must be at least 1")]
    Empty,
    #[error("malformed schedule document: {0}")]
    Parse(String),
}

/// The communication graph of a single round.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InstantGraph {
    n: usize,
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl InstantGraph {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::EndpointOutOfRange { node, n });
                }
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(InstantGraph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        InstantGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as normalized `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Breadth-first distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.n];
        if source >= self.n {
            return dist;
        }
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Relabels nodes: node `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        InstantGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| {
                    let (a, b) = (perm[u], perm[v]);
                    (a.min(b), a.max(b))
                })
                .collect(),
        }
    }
}

/// True iff the graph forms a single connected component over all `n` nodes.
pub fn is_connected(g: &InstantGraph) -> bool {
    if g.n <= 1 {
        return true;
    }
    g.bfs_distances(0).iter().all(Option::is_some)
}

/// A finite prefix `G(1), ..., G(T)` of a dynamic graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicSchedule {
    n: usize,
    rounds: Vec<InstantGraph>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleDoc {
    n: usize,
    rounds: Vec<Vec<[NodeId; 2]>>,
}

impl DynamicSchedule {
    pub fn new(n: usize, rounds: Vec<InstantGraph>) -> Result<Self, GraphError> {
        for (i, g) in rounds.iter().enumerate() {
            if g.n != n {
                return Err(GraphError::NodeCountMismatch {
                    round: i + 1,
                    expected: n,
                    found: g.n,
                });
            }
        }
        Ok(DynamicSchedule { n, rounds })
    }

    /// The static schedule repeating `g` for `rounds` rounds.
    pub fn repeat(g: &InstantGraph, rounds: usize) -> Self {
        DynamicSchedule {
            n: g.n,
            rounds: vec![g.clone(); rounds],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// `E(round)` for `round >= 1`.
    pub fn round(&self, round: usize) -> Option<&InstantGraph> {
        round.checked_sub(1).and_then(|i| self.rounds.get(i))
    }

    pub fn rounds(&self) -> &[InstantGraph] {
        &self.rounds
    }

    pub fn push(&mut self, g: InstantGraph) -> Result<(), GraphError> {
        if g.n != self.n {
            return Err(GraphError::NodeCountMismatch {
                round: self.rounds.len() + 1,
                expected: self.n,
                found: g.n,
            });
        }
        self.rounds.push(g);
        Ok(())
    }

    pub fn truncated(&self, horizon: usize) -> Result<Self, GraphError> {
        self.ensure_horizon(horizon)?;
        Ok(DynamicSchedule {
            n: self.n,
            rounds: self.rounds[..horizon].to_vec(),
        })
    }

    pub fn ensure_horizon(&self, horizon: usize) -> Result<(), GraphError> {
        if horizon > self.rounds.len() {
            Err(GraphError::InsufficientSchedule {
                requested: horizon,
                available: self.rounds.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        DynamicSchedule {
            n: self.n,
            rounds: self.rounds.iter().map(|g| g.permuted(perm)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ScheduleDoc {
            n: self.n,
            rounds: self
                .rounds
                .iter()
                .map(|g| g.edges().map(|(u, v)| [u, v]).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: ScheduleDoc =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        Self::from_parts(doc.n, doc.rounds)
    }

    pub(crate) fn from_parts(n: usize, rounds: Vec<Vec<[NodeId; 2]>>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let rounds = rounds
            .into_iter()
            .map(|edges| InstantGraph::new(n, edges.into_iter().map(|[u, v]| (u, v))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DynamicSchedule { n, rounds })
    }
}

/// Rounds (1-based, ascending) whose graph is disconnected.
pub fn validate_one_interval(s: &DynamicSchedule) -> Vec<usize> {
    s.rounds
        .iter()
        .enumerate()
        .filter(|(_, g)| !is_connected(g))
        .map(|(i, _)| i + 1)
        .collect()
}
