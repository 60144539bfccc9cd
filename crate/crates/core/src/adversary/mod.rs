//! Worst-case adversaries: per round they pick the communication graph and,
//! under one-to-each transmission, the local edge labels.
//!
//! The adversary may look at the (digested) node states before choosing,
//! but whatever it emits is validated: a disconnected round or a labeling
//! that is not a bijection onto `1..=d_u` is a fatal error.

mod builders;
mod labeling;
mod strategies;

pub use builders::{complete, line, ring, star, symmetric_tree};
pub use labeling::EdgeLabeling;
pub use strategies::{
    duplicated, fair_meet_all_adversary, random_connected_adversary, static_adversary,
    symmetric_mirror_adversary, Duplicated, FairMeetAll, MirrorPattern, RandomConnected, Replay,
    StateSortedLine, StaticAdversary, SymmetricMirror,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{Mode, StateDigest};
use crate::graph::{is_connected, GraphError, InstantGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("adversary emitted a disconnected graph in round {round}")]
    Disconnected { round: usize },
    #[error("adversary emitted a graph on {found} nodes, expected {expected}")]
    WrongNodeCount { expected: usize, found: usize },
    #[error("invalid edge labeling at node {node}: {reason}")]
    BadLabeling { node: usize, reason: String },
    #[error("replayed schedule exhausted at round {round} ({available} rounds available)")]
    Exhausted { round: usize, available: usize },
    #[error("rounds are numbered from 1, got {0}")]
    RoundZero(usize),
    #[error("cannot build adversary: {0}")]
    Construction(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// What the adversary sees at the start of a round.
#[derive(Clone, Copy, Debug)]
pub struct AdversaryContext<'a> {
    pub round: usize,
    /// Digests of every node's state at the start of the round, by
    /// simulator index.
    pub state_digests: &'a [StateDigest],
    pub rng_seed: u64,
}

pub trait Adversary: Send {
    fn describe(&self) -> String;

    fn n(&self) -> usize;

    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError>;

    /// Labels for the graph just chosen; seeded random by default.
    fn labeling(
        &mut self,
        g: &InstantGraph,
        ctx: &AdversaryContext<'_>,
    ) -> Result<EdgeLabeling, AdversaryError> {
        Ok(EdgeLabeling::random(g, ctx.rng_seed, ctx.round))
    }
}

impl<A: Adversary + ?Sized> Adversary for Box<A> {
    fn describe(&self) -> String {
        (**self).describe()
    }
    fn n(&self) -> usize {
        (**self).n()
    }
    fn next_graph(&mut self, ctx: &AdversaryContext<'_>) -> Result<InstantGraph, AdversaryError> {
        (**self).next_graph(ctx)
    }
    fn labeling(
        &mut self,
        g: &InstantGraph,
        ctx: &AdversaryContext<'_>,
    ) -> Result<EdgeLabeling, AdversaryError> {
        (**self).labeling(g, ctx)
    }
}

/// Asks the adversary for round `ctx.round` and validates its answer.
/// The labeling is present iff `mode` is one-to-each.
pub fn next_round<A: Adversary + ?Sized>(
    adversary: &mut A,
    ctx: &AdversaryContext<'_>,
    mode: Mode,
) -> Result<(InstantGraph, Option<EdgeLabeling>), AdversaryError> {
    if ctx.round == 0 {
        return Err(AdversaryError::RoundZero(ctx.round));
    }
    let g = adversary.next_graph(ctx)?;
    if g.n() != adversary.n() {
        return Err(AdversaryError::WrongNodeCount {
            expected: adversary.n(),
            found: g.n(),
        });
    }
    if !is_connected(&g) {
        return Err(AdversaryError::Disconnected { round: ctx.round });
    }
    let labels = match mode {
        Mode::Broadcast => None,
        Mode::OneToEach => {
            let l = adversary.labeling(&g, ctx)?;
            if !l.matches(&g) {
                return Err(AdversaryError::BadLabeling {
                    node: 0,
                    reason: format!("labeling does not match the round-{} graph", ctx.round),
                });
            }
            Some(l)
        }
    };
    Ok((g, labels))
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// An rng that depends only on `(seed, round)`.
pub(crate) fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed) ^ round as u64))
}
