//! Synchronous round engine.
//!
//! Round `r` proceeds in three steps: the adversary picks `E(r)` (and the
//! edge labels) after looking at the state digests, every live node steps on
//! the messages delivered in round `r - 1`, and the resulting outboxes are
//! delivered along `E(r)`. Protocol code never sees a node index.

mod digest;
mod run;
mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{Adversary, AdversaryError};
use crate::value::{EncodeError, Message, Value};

pub use digest::{state_digest, StateDigest};
pub use run::{run, run_observed, Delivery, RunConfig, TraceLevel};
pub use trace::{write_trace_jsonl, MessageRecord, Output, RoundRecord, RunResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Broadcast,
    OneToEach,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Broadcast => "broadcast",
            Mode::OneToEach => "one-to-each",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "broadcast" => Ok(Mode::Broadcast),
            "one-to-each" => Ok(Mode::OneToEach),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("outbox uses label {label} but the node has degree {degree}")]
    UnknownLabel { label: u32, degree: usize },
    #[error("per-label outbox in broadcast mode")]
    PerLabelInBroadcast,
    #[error("consistency violation: {0}")]
    Consistency(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunError {
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("protocol error in round {round}: {source}")]
    Protocol {
        round: usize,
        #[source]
        source: ProtocolError,
    },
    #[error("{protocol} does not support {mode} transmission")]
    UnsupportedMode { protocol: String, mode: Mode },
    #[error("invalid run configuration: {0}")]
    Config(String),
}

/// What a node may know about the current round besides its inbox.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepContext {
    pub round: usize,
    pub mode: Mode,
    /// `d_u(r)`; only revealed under one-to-each transmission.
    pub degree: Option<usize>,
}

/// A delivered message. `label` is the receiver's label for the edge the
/// message arrived on (one-to-each mode only).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Received {
    pub label: Option<u32>,
    pub message: Arc<Message>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Outbox {
    #[default]
    Silent,
    Broadcast(Message),
    PerLabel(BTreeMap<u32, Message>),
}

impl Outbox {
    /// A broadcast of `m`, or silence if `m` has no parts.
    pub fn broadcast(m: Message) -> Self {
        if m.is_empty() {
            Outbox::Silent
        } else {
            Outbox::Broadcast(m)
        }
    }

    /// Per-label messages, dropping empty ones.
    pub fn per_label(messages: impl IntoIterator<Item = (u32, Message)>) -> Self {
        let map: BTreeMap<u32, Message> = messages.into_iter().filter(|(_, m)| !m.is_empty()).collect();
        if map.is_empty() {
            Outbox::Silent
        } else {
            Outbox::PerLabel(map)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Continue,
    Halt(Output),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub outbox: Outbox,
    pub action: Action,
}

impl Step {
    pub fn send(outbox: Outbox) -> Self {
        Step {
            outbox,
            action: Action::Continue,
        }
    }

    pub fn silent() -> Self {
        Self::send(Outbox::Silent)
    }

    pub fn halt(outbox: Outbox, output: Output) -> Self {
        Step {
            outbox,
            action: Action::Halt(output),
        }
    }
}

/// An anonymous per-node state machine. All non-leaders start from the same
/// state, and `step` sees only its own state, the inbox and the round
/// context.
pub trait Protocol: Send + Sync {
    type State: Clone + Hash + fmt::Debug + Send;

    fn name(&self) -> &str;

    fn uses_leader(&self) -> bool {
        true
    }

    fn supports(&self, mode: Mode) -> bool;

    /// Round cap used when the run configuration sets none.
    fn round_budget(&self, n: usize) -> usize {
        20 * n + 100
    }

    fn initial_state(&self, is_leader: bool) -> Self::State;

    fn step(
        &self,
        state: &mut Self::State,
        inbox: &[Received],
        ctx: &StepContext,
    ) -> Result<Step, ProtocolError>;

    /// The node's current output before halting, for stabilizing
    /// protocols.
    fn observe(&self, _state: &Self::State) -> Option<Output> {
        None
    }
}

impl<P: Protocol + ?Sized> Protocol for &P {
    type State = P::State;
    fn name(&self) -> &str {
        (**self).name()
    }
    fn uses_leader(&self) -> bool {
        (**self).uses_leader()
    }
    fn supports(&self, mode: Mode) -> bool {
        (**self).supports(mode)
    }
    fn round_budget(&self, n: usize) -> usize {
        (**self).round_budget(n)
    }
    fn initial_state(&self, is_leader: bool) -> Self::State {
        (**self).initial_state(is_leader)
    }
    fn step(
        &self,
        state: &mut Self::State,
        inbox: &[Received],
        ctx: &StepContext,
    ) -> Result<Step, ProtocolError> {
        (**self).step(state, inbox, ctx)
    }
    fn observe(&self, state: &Self::State) -> Option<Output> {
        (**self).observe(state)
    }
}

/// Object-safe view of a [`Protocol`], for choosing protocols at run time.
pub trait DynProtocol: Send + Sync {
    fn info(&self) -> ProtocolInfo;

    fn run_dyn(
        &self,
        adversary: &mut dyn Adversary,
        config: &RunConfig,
    ) -> Result<RunResult, RunError>;

    fn run_dyn_observed(
        &self,
        adversary: &mut dyn Adversary,
        config: &RunConfig,
        observe: &mut dyn FnMut(&Delivery<'_>),
    ) -> Result<RunResult, RunError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolInfo {
    pub name: String,
    pub uses_leader: bool,
    pub broadcast: bool,
    pub one_to_each: bool,
}

impl ProtocolInfo {
    pub fn supports(&self, mode: Mode) -> bool {
        match mode {
            Mode::Broadcast => self.broadcast,
            Mode::OneToEach => self.one_to_each,
        }
    }
}

impl<P: Protocol> DynProtocol for P {
    fn info(&self) -> ProtocolInfo {
        ProtocolInfo {
            name: self.name().to_string(),
            uses_leader: self.uses_leader(),
            broadcast: self.supports(Mode::Broadcast),
            one_to_each: self.supports(Mode::OneToEach),
        }
    }

    fn run_dyn(
        &self,
        adversary: &mut dyn Adversary,
        config: &RunConfig,
    ) -> Result<RunResult, RunError> {
        run(self, adversary, config)
    }

    fn run_dyn_observed(
        &self,
        adversary: &mut dyn Adversary,
        config: &RunConfig,
        observe: &mut dyn FnMut(&Delivery<'_>),
    ) -> Result<RunResult, RunError> {
        run_observed(self, adversary, config, observe)
    }
}

impl Output {
    pub fn value(value: Value) -> Self {
        Output {
            value,
            reported_n: None,
        }
    }

    pub fn with_n(value: Value, n: u64) -> Self {
        Output {
            value,
            reported_n: Some(n),
        }
    }
}
