//! Simulator and protocol library for anonymous dynamic networks with
//! 1-interval connectivity.

pub mod adversary;
pub mod analysis;
pub mod causal;
pub mod engine;
pub mod graph;
pub mod protocols;
pub mod registry;
pub mod value;

pub use adversary::{Adversary, AdversaryContext, AdversaryError, EdgeLabeling};
pub use causal::{
    arrival_times, causal_closure, check_influence_lemma, future_set, max_expansion,
    CausalReachability,
};
pub use engine::{
    run, DynProtocol, Mode, Output, Protocol, ProtocolError, Received, RunConfig, RunError, RunResult, Step,
    StepContext,
};
pub use graph::{is_connected, validate_one_interval, DynamicSchedule, GraphError, InstantGraph, NodeId};
pub use value::{bit_cost, Kind, Message, Value};
