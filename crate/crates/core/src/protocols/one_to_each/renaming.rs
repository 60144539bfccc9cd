use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::RunResult;
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenameError {
    #[error("node {node} has no output")]
    MissingOutput { node: usize },
    #[error("nodes {first} and {second} share id {id}")]
    Duplicate { first: usize, second: usize, id: Value },
}

/// Replaces every node's id by its rank among all ids, giving `0..n`.
/// The leader's id is the smallest, so it keeps `0`.
pub fn minimal_renaming_postprocess(run: &RunResult) -> Result<Vec<u64>, RenameError> {
    let mut owner: BTreeMap<&Value, usize> = BTreeMap::new();
    for (node, out) in run.outputs.iter().enumerate() {
        let id = &out.as_ref().ok_or(RenameError::MissingOutput { node })?.value;
        if let Some(&first) = owner.get(id) {
            return Err(RenameError::Duplicate { first, second: node, id: id.clone() });
        }
        owner.insert(id, node);
    }
    let mut renamed = vec![0; run.outputs.len()];
    for (rank, node) in owner.into_values().enumerate() {
        renamed[node] = rank as u64;
    }
    Ok(renamed)
}
