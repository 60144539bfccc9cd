//! Causal influence over a finite schedule prefix.
//!
//! `(u, r) -> (v, r + 1)` holds iff `u == v` or `{u, v}` is an edge of
//! `E(r + 1)`; the causal order `~>` is its reflexive-transitive closure.
//! Round 0 carries no edges: the first hop uses `E(1)`.

use fixedbitset::FixedBitSet;

use crate::graph::{is_connected, DynamicSchedule, GraphError, InstantGraph, NodeId};

/// One propagation hop: `cur` plus every node adjacent to it in `g`.
fn spread(g: &InstantGraph, cur: &FixedBitSet) -> FixedBitSet {
    let mut next = cur.clone();
    for (a, b) in g.edges() {
        if cur.contains(a) {
            next.insert(b);
        }
        if cur.contains(b) {
            next.insert(a);
        }
    }
    next
}

/// `future_{(u, r)}(r')` for every `r'` in `r..=horizon`.
fn forward_sets(s: &DynamicSchedule, u: NodeId, r: usize, horizon: usize) -> Vec<FixedBitSet> {
    let mut cur = FixedBitSet::with_capacity(s.n());
    cur.insert(u);
    let mut out = Vec::with_capacity(horizon - r + 1);
    out.push(cur.clone());
    for next_round in r + 1..=horizon {
        let g = s.round(next_round).expect("horizon checked by caller");
        cur = spread(g, &cur);
        out.push(cur.clone());
    }
    out
}

/// The causal order restricted to states of rounds `0..=horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalReachability {
    n: usize,
    horizon: usize,
    // reach[r][u][r' - r] = { v : (u, r) ~> (v, r') }
    reach: Vec<Vec<Vec<FixedBitSet>>>,
}

impl CausalReachability {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn check(&self, u: NodeId, r: usize, r_prime: usize) -> Result<(), GraphError> {
        if u >= self.n {
            return Err(GraphError::NodeOutOfRange { node: u, n: self.n });
        }
        for round in [r, r_prime] {
            if round > self.horizon {
                return Err(GraphError::RoundOutOfRange {
                    round,
                    horizon: self.horizon,
                });
            }
        }
        if r_prime < r {
            return Err(GraphError::RoundOutOfRange {
                round: r_prime,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Whether `(u, r) ~> (v, r')`. Out-of-range arguments are simply false.
    pub fn reaches(&self, (u, r): (NodeId, usize), (v, r_prime): (NodeId, usize)) -> bool {
        self.check(u, r, r_prime).is_ok()
            && v < self.n
            && self.reach[r][u][r_prime - r].contains(v)
    }

    pub fn future(&self, u: NodeId, r: usize, r_prime: usize) -> Result<&FixedBitSet, GraphError> {
        self.check(u, r, r_prime)?;
        Ok(&self.reach[r][u][r_prime - r])
    }
}

/// Materializes `~>` over rounds `0..=horizon`.
pub fn causal_closure(s: &DynamicSchedule, horizon: usize) -> Result<CausalReachability, GraphError> {
    s.ensure_horizon(horizon)?;
    let reach = (0..=horizon)
        .map(|r| (0..s.n()).map(|u| forward_sets(s, u, r, horizon)).collect())
        .collect();
    Ok(CausalReachability {
        n: s.n(),
        horizon,
        reach,
    })
}

/// `{ v : (u, r) ~> (v, r') }`, ascending.
pub fn future_set(
    c: &CausalReachability,
    u: NodeId,
    r: usize,
    r_prime: usize,
) -> Result<Vec<NodeId>, GraphError> {
    Ok(c.future(u, r, r_prime)?.ones().collect())
}

/// Checks both influence bounds: every node reaches, and is reached from,
/// at least `min(r + 1, n)` nodes between round 0 and round `r`.
pub fn check_influence_lemma(s: &DynamicSchedule, horizon: usize) -> Result<bool, GraphError> {
    s.ensure_horizon(horizon)?;
    for round in 1..=horizon {
        if !is_connected(s.round(round).expect("in range")) {
            return Err(GraphError::Disconnected { round });
        }
    }
    let n = s.n();
    let bound = |r: usize| (r + 1).min(n);

    for u in 0..n {
        let fwd = forward_sets(s, u, 0, horizon);
        if fwd.iter().enumerate().any(|(r, f)| f.count_ones(..) < bound(r)) {
            return Ok(false);
        }
    }

    // past[u] = { v : (v, 0) ~> (u, r) }, advanced one round at a time.
    let mut past: Vec<FixedBitSet> = (0..n)
        .map(|u| {
            let mut b = FixedBitSet::with_capacity(n);
            b.insert(u);
            b
        })
        .collect();
    for r in 1..=horizon {
        let g = s.round(r).expect("in range");
        let mut next = past.clone();
        for (a, b) in g.edges() {
            next[a].union_with(&past[b]);
            next[b].union_with(&past[a]);
        }
        past = next;
        if past.iter().any(|p| p.count_ones(..) < bound(r)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest one-round growth of any future set within the prefix.
pub fn max_expansion(s: &DynamicSchedule, horizon: usize) -> Result<usize, GraphError> {
    s.ensure_horizon(horizon)?;
    let mut best = 0;
    for r in 0..horizon {
        for u in 0..s.n() {
            let sets = forward_sets(s, u, r, horizon);
            for w in sets.windows(2) {
                best = best.max(w[1].count_ones(..) - w[0].count_ones(..));
            }
        }
    }
    Ok(best)
}

/// `arrival_{(u, r)}(v) = min { r' > r : (u, r) ~> (v, r') }` for every `v`,
/// or `None` if `v` is not reached by `horizon`.
pub fn arrival_times(
    s: &DynamicSchedule,
    u: NodeId,
    r: usize,
    horizon: usize,
) -> Result<Vec<Option<usize>>, GraphError> {
    s.ensure_horizon(horizon)?;
    if u >= s.n() {
        return Err(GraphError::NodeOutOfRange { node: u, n: s.n() });
    }
    let mut out = vec![None; s.n()];
    if r >= horizon {
        return Ok(out);
    }
    let sets = forward_sets(s, u, r, horizon);
    for (offset, set) in sets.iter().enumerate().skip(1) {
        for v in set.ones() {
            out[v].get_or_insert(r + offset);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> InstantGraph {
        InstantGraph::new(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn star(n: usize) -> InstantGraph {
        InstantGraph::new(n, (1..n).map(|i| (0, i))).unwrap()
    }

    /// Rotating ring: round r uses the cycle 0, r, 2r, ... (mod n) style shift.
    fn rotating_ring(n: usize, rounds: usize) -> DynamicSchedule {
        let gs = (1..=rounds)
            .map(|r| {
                let order: Vec<usize> = (0..n).map(|i| (i + r) % n).collect();
                let mut perm = vec![0; n];
                for (pos, &node) in order.iter().enumerate() {
                    perm[node] = pos;
                }
                let mut edges = Vec::new();
                for pos in 0..n {
                    let a = order[pos];
                    let b = order[(pos + if r % 2 == 0 { 1 } else { 2 }) % n];
                    if a != b {
                        edges.push((a.min(b), a.max(b)));
                    }
                }
                edges.sort();
                edges.dedup();
                InstantGraph::new(n, edges).unwrap()
            })
            .collect();
        DynamicSchedule::new(n, gs).unwrap()
    }

    /// Brute force: enumerate all chains of `->` steps explicitly.
    fn brute_reaches(s: &DynamicSchedule, (u, r): (usize, usize), (v, rp): (usize, usize)) -> bool {
        if rp < r {
            return false;
        }
        if rp == r {
            return u == v;
        }
        let g = s.round(r + 1).unwrap();
        (0..s.n())
            .filter(|&w| w == u || g.has_edge(u, w))
            .any(|w| brute_reaches(s, (w, r + 1), (v, rp)))
    }

    #[test]
    fn one_step_rule() {
        let s = DynamicSchedule::repeat(&InstantGraph::new(2, [(0, 1)]).unwrap(), 1);
        let c = causal_closure(&s, 1).unwrap();
        assert!(c.reaches((0, 0), (1, 1)));
        assert!(c.reaches((1, 0), (0, 1)));
        assert!(!c.reaches((1, 0), (0, 0)));
    }

    #[test]
    fn reflexive_everywhere() {
        let s = rotating_ring(5, 6);
        let c = causal_closure(&s, 6).unwrap();
        for u in 0..5 {
            for r in 0..=6 {
                assert!(c.reaches((u, r), (u, r)));
            }
        }
    }

    #[test]
    fn line_two_hops_matches_brute_force() {
        let s = DynamicSchedule::repeat(&line(3), 2);
        let c = causal_closure(&s, 2).unwrap();
        assert!(c.reaches((0, 0), (2, 2)));
        assert!(!c.reaches((0, 0), (2, 1)));
        for u in 0..3 {
            for v in 0..3 {
                for r in 0..=2 {
                    for rp in r..=2 {
                        assert_eq!(c.reaches((u, r), (v, rp)), brute_reaches(&s, (u, r), (v, rp)));
                    }
                }
            }
        }
    }

    #[test]
    fn closure_matches_brute_force_on_rotating_ring() {
        let s = rotating_ring(4, 4);
        let c = causal_closure(&s, 4).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                for r in 0..=4 {
                    for rp in r..=4 {
                        assert_eq!(c.reaches((u, r), (v, rp)), brute_reaches(&s, (u, r), (v, rp)));
                    }
                }
            }
        }
    }

    #[test]
    fn horizon_beyond_schedule_is_an_error() {
        let s = DynamicSchedule::repeat(&line(3), 2);
        assert_eq!(
            causal_closure(&s, 3).unwrap_err(),
            GraphError::InsufficientSchedule { requested: 3, available: 2 }
        );
    }

    #[test]
    fn future_set_examples() {
        let s = DynamicSchedule::repeat(&star(5), 3);
        let c = causal_closure(&s, 3).unwrap();
        assert_eq!(future_set(&c, 2, 1, 1).unwrap(), vec![2]);
        assert_eq!(future_set(&c, 0, 0, 1).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(future_set(&c, 0, 2, 1).is_err());
        assert!(future_set(&c, 0, 0, 4).is_err());
        assert!(future_set(&c, 5, 0, 1).is_err());

        let ring = rotating_ring(4, 2);
        let c = causal_closure(&ring, 2).unwrap();
        assert!(future_set(&c, 0, 0, 2).unwrap().len() >= 3);
    }

    #[test]
    fn influence_lemma_examples() {
        for g in [line(6), star(6)] {
            assert!(check_influence_lemma(&DynamicSchedule::repeat(&g, 6), 6).unwrap());
        }
        assert!(check_influence_lemma(&DynamicSchedule::repeat(&line(4), 3), 0).unwrap());
        let split = InstantGraph::new(3, [(0, 1)]).unwrap();
        let s = DynamicSchedule::new(3, vec![line(3), split]).unwrap();
        assert_eq!(check_influence_lemma(&s, 2), Err(GraphError::Disconnected { round: 2 }));
        // a prefix that stops before the split round is fine
        assert!(check_influence_lemma(&s, 1).unwrap());
    }

    #[test]
    fn max_expansion_examples() {
        // from an endpoint the line grows one node per round; from the interior it grows two.
        let s = DynamicSchedule::repeat(&line(5), 5);
        let c = causal_closure(&s, 5).unwrap();
        for r in 0..4 {
            let a = future_set(&c, 0, 0, r).unwrap().len();
            let b = future_set(&c, 0, 0, r + 1).unwrap().len();
            assert_eq!(b - a, 1);
        }
        assert_eq!(max_expansion(&s, 5).unwrap(), 2);
        assert_eq!(max_expansion(&DynamicSchedule::repeat(&line(2), 3), 3).unwrap(), 1);
        assert_eq!(max_expansion(&DynamicSchedule::repeat(&star(6), 2), 2).unwrap(), 5);
        assert_eq!(max_expansion(&DynamicSchedule::repeat(&InstantGraph::empty(1), 4), 4).unwrap(), 0);
    }

    #[test]
    fn arrival_times_on_a_line() {
        let s = DynamicSchedule::repeat(&line(4), 6);
        assert_eq!(
            arrival_times(&s, 0, 1, 6).unwrap(),
            vec![Some(2), Some(2), Some(3), Some(4)]
        );
        assert_eq!(arrival_times(&s, 0, 5, 6).unwrap(), vec![Some(6), Some(6), None, None]);
    }

    #[test]
    fn closure_is_monotone_in_horizon_and_time() {
        let s = rotating_ring(6, 8);
        let small = causal_closure(&s, 5).unwrap();
        let big = causal_closure(&s, 6).unwrap();
        for u in 0..6 {
            for r in 0..=5 {
                for rp in r..=5 {
                    assert_eq!(small.future(u, r, rp).unwrap(), big.future(u, r, rp).unwrap());
                    if rp < 5 {
                        assert!(small.future(u, r, rp).unwrap().is_subset(small.future(u, r, rp + 1).unwrap()));
                    }
                }
            }
        }
    }
}
