//! Named topologies. Node 0 is always the leader position.

use super::AdversaryError;
use crate::graph::InstantGraph;

fn nonzero(what: &str, v: usize) -> Result<(), AdversaryError> {
    if v == 0 {
        Err(AdversaryError::Construction(format!("{what} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Star with center 0.
pub fn star(n: usize) -> Result<InstantGraph, AdversaryError> {
    nonzero("n", n)?;
    Ok(InstantGraph::new(n, (1..n).map(|i| (0, i)))?)
}

/// Path on `n` nodes. With `leader_at_end` the order is `0, 1, ..., n-1`;
/// otherwise node 0 sits at position `n / 2` and the other nodes fill the
/// remaining positions in index order.
pub fn line(n: usize, leader_at_end: bool) -> Result<InstantGraph, AdversaryError> {
    nonzero("n", n)?;
    let order: Vec<usize> = if leader_at_end {
        (0..n).collect()
    } else {
        let mut rest: Vec<usize> = (1..n).collect();
        rest.insert(n / 2, 0);
        rest
    };
    Ok(InstantGraph::new(n, order.windows(2).map(|w| (w[0], w[1])))?)
}

/// Cycle `0, 1, ..., n-1, 0`; a single edge for `n = 2`.
pub fn ring(n: usize) -> Result<InstantGraph, AdversaryError> {
    nonzero("n", n)?;
    let edges: Vec<(usize, usize)> = match n {
        1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    };
    Ok(InstantGraph::new(n, edges)?)
}

/// Root 0 with `branches` identical paths of `n_per_branch` nodes each.
/// Branch `b` holds nodes `1 + b * n_per_branch ..`, nearest the root first.
pub fn symmetric_tree(n_per_branch: usize, branches: usize) -> Result<InstantGraph, AdversaryError> {
    nonzero("n_per_branch", n_per_branch)?;
    if branches < 2 {
        return Err(AdversaryError::Construction(
            "a symmetric tree needs at least 2 branches".into(),
        ));
    }
    let n = 1 + n_per_branch * branches;
    let mut edges = Vec::with_capacity(n - 1);
    for b in 0..branches {
        let first = 1 + b * n_per_branch;
        edges.push((0, first));
        for i in 1..n_per_branch {
            edges.push((first + i - 1, first + i));
        }
    }
    Ok(InstantGraph::new(n, edges)?)
}

pub fn complete(n: usize) -> Result<InstantGraph, AdversaryError> {
    nonzero("n", n)?;
    Ok(InstantGraph::new(
        n,
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))),
    )?)
}
