use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{round_rng, AdversaryError};
use crate::graph::{InstantGraph, NodeId};

const LABEL_SALT: u64 = 0x6c61_6265_6c73;

/// Per-round local edge labels: node `u` names its `d_u` incident edges
/// with the labels `1..=d_u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeLabeling {
    // by_neighbor[u][v] = label of edge {u, v} at u
    by_neighbor: Vec<BTreeMap<NodeId, u32>>,
    // by_label[u][label - 1] = neighbor
    by_label: Vec<Vec<NodeId>>,
}

impl EdgeLabeling {
    /// A seeded uniformly random labeling, independent per node.
    pub fn random(g: &InstantGraph, seed: u64, round: usize) -> Self {
        let mut rng = round_rng(seed ^ LABEL_SALT, round);
        let adj = g.adjacency();
        let lists = adj
            .iter()
            .map(|nbrs| {
                let mut labels: Vec<u32> = (1..=nbrs.len() as u32).collect();
                labels.shuffle(&mut rng);
                labels
            })
            .collect();
        Self::from_label_lists(g, lists).expect("random labels are bijective")
    }

    /// Labels `i` for the `i`-th neighbor in ascending index order.
    pub fn canonical(g: &InstantGraph) -> Self {
        let lists = g
            .adjacency()
            .iter()
            .map(|nbrs| (1..=nbrs.len() as u32).collect())
            .collect();
        Self::from_label_lists(g, lists).expect("canonical labels are bijective")
    }

    /// Builds a labeling from per-node label lists, each listing the labels
    /// of that node's edges in ascending neighbor order.
    pub fn from_label_lists(g: &InstantGraph, lists: Vec<Vec<u32>>) -> Result<Self, AdversaryError> {
        let adj = g.adjacency();
        if lists.len() != g.n() {
            return Err(AdversaryError::BadLabeling {
                node: lists.len().min(g.n()),
                reason: format!("expected {} label lists, found {}", g.n(), lists.len()),
            });
        }
        let mut by_neighbor = Vec::with_capacity(g.n());
        let mut by_label = Vec::with_capacity(g.n());
        for (u, (nbrs, labels)) in adj.iter().zip(lists).enumerate() {
            if nbrs.len() != labels.len() {
                return Err(AdversaryError::BadLabeling {
                    node: u,
                    reason: format!("degree {} but {} labels", nbrs.len(), labels.len()),
                });
            }
            let mut inverse = vec![usize::MAX; nbrs.len()];
            let mut map = BTreeMap::new();
            for (&v, &label) in nbrs.iter().zip(&labels) {
                let slot = (label as usize)
                    .checked_sub(1)
                    .filter(|&i| i < nbrs.len())
                    .ok_or_else(|| AdversaryError::BadLabeling {
                        node: u,
                        reason: format!("label {label} outside 1..={}", nbrs.len()),
                    })?;
                if inverse[slot] != usize::MAX {
                    return Err(AdversaryError::BadLabeling {
                        node: u,
                        reason: format!("label {label} repeated"),
                    });
                }
                inverse[slot] = v;
                map.insert(v, label);
            }
            by_neighbor.push(map);
            by_label.push(inverse);
        }
        Ok(EdgeLabeling {
            by_neighbor,
            by_label,
        })
    }

    /// Checks that this labeling covers exactly the edges of `g`.
    pub fn matches(&self, g: &InstantGraph) -> bool {
        let adj = g.adjacency();
        self.by_neighbor.len() == g.n()
            && adj
                .iter()
                .zip(&self.by_neighbor)
                .all(|(nbrs, map)| nbrs.len() == map.len() && nbrs.iter().all(|v| map.contains_key(v)))
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.by_label[u].len()
    }

    pub fn label(&self, u: NodeId, v: NodeId) -> Option<u32> {
        self.by_neighbor.get(u)?.get(&v).copied()
    }

    pub fn neighbor(&self, u: NodeId, label: u32) -> Option<NodeId> {
        let idx = (label as usize).checked_sub(1)?;
        self.by_label.get(u)?.get(idx).copied()
    }

    pub fn label_lists(&self) -> Vec<Vec<u32>> {
        self.by_neighbor
            .iter()
            .map(|m| m.values().copied().collect())
            .collect()
    }

    /// The labeling seen after renaming node `u` to `perm[u]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        let n = self.by_neighbor.len();
        let mut by_neighbor = vec![BTreeMap::new(); n];
        let mut by_label = vec![Vec::new(); n];
        for u in 0..n {
            by_neighbor[perm[u]] = self.by_neighbor[u]
                .iter()
                .map(|(&v, &l)| (perm[v], l))
                .collect();
            by_label[perm[u]] = self.by_label[u].iter().map(|&v| perm[v]).collect();
        }
        EdgeLabeling {
            by_neighbor,
            by_label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_labels_are_permutations() {
        let g = InstantGraph::new(5, (1..5).map(|i| (0, i)).chain([(1, 2)])).unwrap();
        for round in 1..20 {
            let l = EdgeLabeling::random(&g, 9, round);
            assert!(l.matches(&g));
            for u in 0..5 {
                let mut labels: Vec<u32> = l.label_lists()[u].clone();
                labels.sort();
                assert_eq!(labels, (1..=l.degree(u) as u32).collect::<Vec<_>>());
                for label in 1..=l.degree(u) as u32 {
                    let v = l.neighbor(u, label).unwrap();
                    assert_eq!(l.label(u, v), Some(label));
                }
            }
        }
        assert_eq!(EdgeLabeling::random(&g, 9, 3), EdgeLabeling::random(&g, 9, 3));
    }

    #[test]
    fn bad_label_lists_are_rejected() {
        let g = InstantGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(EdgeLabeling::from_label_lists(&g, vec![vec![1], vec![1, 1], vec![1]]).is_err());
        assert!(EdgeLabeling::from_label_lists(&g, vec![vec![1], vec![1, 3], vec![1]]).is_err());
        assert!(EdgeLabeling::from_label_lists(&g, vec![vec![1], vec![1], vec![1]]).is_err());
        assert!(EdgeLabeling::from_label_lists(&g, vec![vec![1], vec![2, 1]]).is_err());
        assert!(EdgeLabeling::from_label_lists(&g, vec![vec![1], vec![2, 1], vec![1]]).is_ok());
    }

    #[test]
    fn permutation_relabels_consistently() {
        let g = InstantGraph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let l = EdgeLabeling::random(&g, 1, 1);
        let perm = [0, 3, 1, 2];
        let pg = g.permuted(&perm);
        let pl = l.permuted(&perm);
        assert!(pl.matches(&pg));
        for (u, v) in g.edges() {
            assert_eq!(l.label(u, v), pl.label(perm[u], perm[v]));
            assert_eq!(l.label(v, u), pl.label(perm[v], perm[u]));
        }
    }
}
