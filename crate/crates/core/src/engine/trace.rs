use std::io::{self, Write};

use serde::{Serialize, Serializer};

use super::{Mode, StateDigest};
use crate::graph::NodeId;
use crate::value::Value;

fn display<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Output {
    #[serde(serialize_with = "display")]
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_n: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MessageRecord {
    pub from: NodeId,
    pub to: NodeId,
    pub bits: u64,
    pub kind: String,
}

/// One round as seen by the simulator. `digests` are taken before the
/// nodes step; `outputs` after.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub edges: Vec<[NodeId; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<MessageRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub digests: Vec<StateDigest>,
    pub outputs: Vec<Option<Output>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub protocol: String,
    pub adversary: String,
    pub n: usize,
    pub seed: u64,
    pub mode: Mode,
    pub halted: bool,
    pub rounds_executed: usize,
    /// Halting output, or the observed output of a node still running.
    pub outputs: Vec<Option<Output>>,
    pub halt_rounds: Vec<Option<usize>>,
    pub max_message_bits: u64,
    pub total_message_bits: u64,
    pub total_messages: u64,
    /// Rounds whose graph broke a declared precondition (degree bound).
    pub precondition_violations: Vec<usize>,
    pub trace: Vec<RoundRecord>,
}

impl RunResult {
    pub fn output_values(&self) -> Vec<Option<&Value>> {
        self.outputs.iter().map(|o| o.as_ref().map(|o| &o.value)).collect()
    }

    /// Every node has an output.
    pub fn all_output(&self) -> bool {
        self.outputs.iter().all(Option::is_some)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run results serialize")
    }
}

/// One JSON object per round.
pub fn write_trace_jsonl<W: Write>(result: &RunResult, mut out: W) -> io::Result<()> {
    for record in &result.trace {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
