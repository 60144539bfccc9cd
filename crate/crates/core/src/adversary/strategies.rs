use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{builders, round_rng, Adversary, AdversaryContext, AdversaryError, EdgeLabeling};
use crate::graph::{is_connected, DynamicSchedule, InstantGraph, NodeId};

/// Emits the same connected graph every round.
#[derive(Clone, Debug)]
pub struct StaticAdversary {
    graph: InstantGraph,
    name: String,
}

pub fn static_adversary(g: InstantGraph) -> Result<StaticAdversary, AdversaryError> {
    StaticAdversary::named(g, "static")
}

impl StaticAdversary {
    pub fn named(g: InstantGraph, name: impl Into<String>) -> Result<Self, AdversaryError> {
        if !is_connected(&g) {
            return Err(AdversaryError::Construction("static graph is disconnected".into()));
        }
        Ok(StaticAdversary {
            graph: g,
            name: name.into(),
        })
    }

    pub fn graph(&self) -> &InstantGraph {
        &self.graph
    }
}

impl Adversary for StaticAdversary {
    fn describe(&self) -> String {
        self.name.clone()
    }
    fn n(&self) -> usize {
        self.graph.n()
    }
    fn next_graph(&mut self, _: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        Ok(self.graph.clone())
    }
}

/// Each round: a uniformly random spanning tree (Prüfer decoding) plus every
/// other edge independently with probability 1/2.
#[derive(Clone, Debug)]
pub struct RandomConnected {
    n: usize,
    seed: u64,
}

pub fn random_connected_adversary(n: usize, seed: u64) -> RandomConnected {
    RandomConnected { n: n.max(1), seed }
}

const GRAPH_SALT: u64 = 0x67_7261_7068;

fn prufer_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(NodeId, NodeId)> {
    match n {
        0 | 1 => return vec![],
        2 => return vec![(0, 1)],
        _ => {}
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let leaf = *leaves.iter().next().expect("a tree always has a leaf");
        leaves.remove(&leaf);
        edges.push((leaf.min(c), leaf.max(c)));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    edges.push((rest[0], rest[1]));
    edges
}

impl RandomConnected {
    pub fn graph_for_round(&self, round: usize) -> InstantGraph {
        let mut rng = round_rng(self.seed ^ GRAPH_SALT, round);
        let tree = prufer_tree(self.n, &mut rng);
        let mut edges: std::collections::BTreeSet<(usize, usize)> = tree.into_iter().collect();
        for u in 0..self.n {
            for v in u + 1..self.n {
                let coin: bool = rng.gen();
                if !edges.contains(&(u, v)) && coin {
                    edges.insert((u, v));
                }
            }
        }
        InstantGraph::new(self.n, edges).expect("generated edges are well-formed")
    }

    /// The first `rounds` graphs as a schedule.
    pub fn schedule(&self, rounds: usize) -> DynamicSchedule {
        DynamicSchedule::new(self.n, (1..=rounds).map(|r| self.graph_for_round(r)).collect())
            .expect("uniform node count")
    }
}

impl Adversary for RandomConnected {
    fn describe(&self) -> String {
        "random-connected".into()
    }
    fn n(&self) -> usize {
        self.n
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        Ok(self.graph_for_round(ctx.round))
    }
}

/// A line whose node next to the leader sweeps through every other node.
#[derive(Clone, Debug)]
pub struct FairMeetAll {
    n: usize,
}

pub fn fair_meet_all_adversary(n: usize, _seed: u64) -> Result<FairMeetAll, AdversaryError> {
    if n < 2 {
        return Err(AdversaryError::Construction("fair-meet-all needs n >= 2".into()));
    }
    Ok(FairMeetAll { n })
}

impl FairMeetAll {
    pub fn leader_neighbor(&self, round: usize) -> NodeId {
        (round - 1) % (self.n - 1) + 1
    }
}

impl Adversary for FairMeetAll {
    fn describe(&self) -> String {
        "fair-meet-all".into()
    }
    fn n(&self) -> usize {
        self.n
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        let a = self.leader_neighbor(ctx.round.max(1));
        let order: Vec<usize> = [0, a]
            .into_iter()
            .chain((1..self.n).filter(|&v| v != a))
            .collect();
        Ok(InstantGraph::new(self.n, order.windows(2).map(|w| (w[0], w[1])))?)
    }
}

/// How the mirror adversary reorders nodes within each branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MirrorPattern {
    Static,
    /// Swap the two nodes nearest the root on even rounds.
    Oscillating,
    /// A fresh seeded permutation every round.
    Shuffled(u64),
}

/// Two identical branches hanging off the leader; whatever permutation is
/// applied inside one branch is applied to the other as well, so the nodes
/// `1 + i` and `1 + branch_len + i` always sit at equal depth.
#[derive(Clone, Debug)]
pub struct SymmetricMirror {
    branch_len: usize,
    pattern: MirrorPattern,
}

pub fn symmetric_mirror_adversary(
    branch_len: usize,
    pattern: MirrorPattern,
) -> Result<SymmetricMirror, AdversaryError> {
    if branch_len == 0 {
        return Err(AdversaryError::Construction("branch_len must be at least 1".into()));
    }
    Ok(SymmetricMirror {
        branch_len,
        pattern,
    })
}

impl SymmetricMirror {
    pub fn mirror_pairs(&self) -> Vec<(NodeId, NodeId)> {
        (0..self.branch_len)
            .map(|i| (1 + i, 1 + self.branch_len + i))
            .collect()
    }

    fn permutation(&self, round: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.branch_len).collect();
        match self.pattern {
            MirrorPattern::Static => {}
            MirrorPattern::Oscillating => {
                if round.is_multiple_of(2) && self.branch_len >= 2 {
                    perm.swap(0, 1);
                }
            }
            MirrorPattern::Shuffled(seed) => perm.shuffle(&mut round_rng(seed, round)),
        }
        perm
    }

    pub fn graph_for_round(&self, round: usize) -> InstantGraph {
        let len = self.branch_len;
        let perm = self.permutation(round);
        let mut edges = Vec::with_capacity(2 * len);
        for branch in 0..2 {
            let node = |pos: usize| 1 + branch * len + perm[pos];
            edges.push((0, node(0)));
            for pos in 1..len {
                edges.push((node(pos - 1), node(pos)));
            }
        }
        InstantGraph::new(1 + 2 * len, edges).expect("mirror tree is well-formed")
    }

    pub fn schedule(&self, rounds: usize) -> DynamicSchedule {
        DynamicSchedule::new(
            1 + 2 * self.branch_len,
            (1..=rounds).map(|r| self.graph_for_round(r)).collect(),
        )
        .expect("uniform node count")
    }
}

impl Adversary for SymmetricMirror {
    fn describe(&self) -> String {
        "mirror".into()
    }
    fn n(&self) -> usize {
        1 + 2 * self.branch_len
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        Ok(self.graph_for_round(ctx.round))
    }

    fn labeling(
        &mut self,
        g: &InstantGraph,
        _: &AdversaryContext<'_>,
    ) -> Result<EdgeLabeling, AdversaryError> {
        Ok(EdgeLabeling::canonical(g))
    }
}

/// Replays a recorded schedule, optionally with recorded labelings.
#[derive(Clone, Debug)]
pub struct Replay {
    schedule: DynamicSchedule,
    labelings: Option<Vec<EdgeLabeling>>,
}

#[derive(Serialize, Deserialize)]
struct ReplayDoc {
    n: usize,
    rounds: Vec<Vec<[NodeId; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labelings: Option<Vec<Vec<Vec<u32>>>>,
}

impl Replay {
    pub fn new(schedule: DynamicSchedule) -> Self {
        Replay {
            schedule,
            labelings: None,
        }
    }

    pub fn with_labelings(
        schedule: DynamicSchedule,
        labelings: Vec<EdgeLabeling>,
    ) -> Result<Self, AdversaryError> {
        if labelings.len() != schedule.len() {
            return Err(AdversaryError::Construction(format!(
                "{} labelings for {} rounds",
                labelings.len(),
                schedule.len()
            )));
        }
        for (g, l) in schedule.rounds().iter().zip(&labelings) {
            if !l.matches(g) {
                return Err(AdversaryError::Construction(
                    "labeling does not match its round".into(),
                ));
            }
        }
        Ok(Replay {
            schedule,
            labelings: Some(labelings),
        })
    }

    pub fn schedule(&self) -> &DynamicSchedule {
        &self.schedule
    }

    /// Parses a schedule document with an optional `labelings` field: one
    /// entry per round, each a per-node list of labels in ascending
    /// neighbor order.
    pub fn from_json(text: &str) -> Result<Self, AdversaryError> {
        let doc: ReplayDoc = serde_json::from_str(text)
            .map_err(|e| crate::graph::GraphError::Parse(e.to_string()))?;
        let schedule = DynamicSchedule::from_parts(doc.n, doc.rounds)?;
        match doc.labelings {
            None => Ok(Replay::new(schedule)),
            Some(lists) => {
                if lists.len() != schedule.len() {
                    return Err(AdversaryError::Construction(format!(
                        "{} labelings for {} rounds",
                        lists.len(),
                        schedule.len()
                    )));
                }
                let labelings = schedule
                    .rounds()
                    .iter()
                    .zip(lists)
                    .map(|(g, l)| EdgeLabeling::from_label_lists(g, l))
                    .collect::<Result<Vec<_>, _>>()?;
                Replay::with_labelings(schedule, labelings)
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ReplayDoc {
            n: self.schedule.n(),
            rounds: self
                .schedule
                .rounds()
                .iter()
                .map(|g| g.edges().map(|(u, v)| [u, v]).collect())
                .collect(),
            labelings: self
                .labelings
                .as_ref()
                .map(|ls| ls.iter().map(EdgeLabeling::label_lists).collect()),
        };
        serde_json::to_string(&doc).expect("replay document serializes")
    }
}

impl Adversary for Replay {
    fn describe(&self) -> String {
        "replay".into()
    }
    fn n(&self) -> usize {
        self.schedule.n()
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        self.schedule
            .round(ctx.round)
            .cloned()
            .ok_or(AdversaryError::Exhausted {
                round: ctx.round,
                available: self.schedule.len(),
            })
    }
    fn labeling(
        &mut self,
        g: &InstantGraph,
        ctx: &AdversaryContext<'_>,
    ) -> Result<EdgeLabeling, AdversaryError> {
        match &self.labelings {
            Some(ls) => ls
                .get(ctx.round - 1)
                .cloned()
                .ok_or(AdversaryError::Exhausted {
                    round: ctx.round,
                    available: ls.len(),
                }),
            None => Ok(EdgeLabeling::random(g, ctx.rng_seed, ctx.round)),
        }
    }
}

/// Makes every graph of the inner adversary persist for two consecutive
/// rounds: round `2k - 1` and `2k` both use the inner round `k`.
#[derive(Clone, Debug)]
pub struct Duplicated<A> {
    inner: A,
    cached: Option<(usize, InstantGraph, Option<EdgeLabeling>)>,
}

pub fn duplicated<A: Adversary>(inner: A) -> Duplicated<A> {
    Duplicated {
        inner,
        cached: None,
    }
}

impl<A: Adversary> Duplicated<A> {
    fn inner_ctx<'a>(ctx: &AdversaryContext<'a>) -> AdversaryContext<'a> {
        AdversaryContext {
            round: ctx.round.div_ceil(2),
            ..*ctx
        }
    }
}

impl<A: Adversary> Adversary for Duplicated<A> {
    fn describe(&self) -> String {
        format!("duplicated({})", self.inner.describe())
    }
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        let inner_round = ctx.round.div_ceil(2);
        if let Some((r, g, _)) = &self.cached {
            if *r == inner_round {
                return Ok(g.clone());
            }
        }
        let g = self.inner.next_graph(&Self::inner_ctx(ctx))?;
        self.cached = Some((inner_round, g.clone(), None));
        Ok(g)
    }
    fn labeling(
        &mut self,
        g: &InstantGraph,
        ctx: &AdversaryContext<'_>,
    ) -> Result<EdgeLabeling, AdversaryError> {
        let inner_round = ctx.round.div_ceil(2);
        if let Some((r, _, Some(l))) = &self.cached {
            if *r == inner_round {
                return Ok(l.clone());
            }
        }
        let l = self.inner.labeling(g, &Self::inner_ctx(ctx))?;
        if let Some(entry) = &mut self.cached {
            entry.2 = Some(l.clone());
        }
        Ok(l)
    }
}

/// Lines the nodes up behind the leader sorted by state digest, so nodes
/// in equal states end up adjacent.
#[derive(Clone, Debug)]
pub struct StateSortedLine {
    n: usize,
}

impl StateSortedLine {
    pub fn new(n: usize) -> Result<Self, AdversaryError> {
        if n == 0 {
            return Err(AdversaryError::Construction("n must be at least 1".into()));
        }
        Ok(StateSortedLine { n })
    }
}

impl Adversary for StateSortedLine {
    fn describe(&self) -> String {
        "state-sorted-line".into()
    }
    fn n(&self) -> usize {
        self.n
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        let mut rest: Vec<usize> = (1..self.n).collect();
        if ctx.state_digests.len() == self.n {
            rest.sort_by_key(|&v| (ctx.state_digests[v], v));
        }
        let order: Vec<usize> = std::iter::once(0).chain(rest).collect();
        Ok(InstantGraph::new(self.n, order.windows(2).map(|w| (w[0], w[1])))?)
    }
}

// Convenience for the symmetric tree builder used with a static adversary.
impl SymmetricMirror {
    pub fn initial_tree(&self) -> InstantGraph {
        builders::symmetric_tree(self.branch_len, 2).expect("branch_len >= 1")
    }
}
