use std::sync::Arc;

use super::{
    state_digest, Action, MessageRecord, Mode, Outbox, Output, Protocol, ProtocolError, Received,
    RoundRecord, RunError, RunResult, StateDigest, StepContext,
};
use crate::adversary::{next_round, Adversary, AdversaryContext};
use crate::graph::NodeId;
use crate::value::Message;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceLevel {
    Off,
    /// Edges, digests and outputs, but no per-message records.
    Summary,
    #[default]
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    /// Defaults to the protocol's [`Protocol::round_budget`].
    pub max_rounds: Option<usize>,
    /// Declared bound on every round's maximum degree; rounds exceeding it
    /// are reported in `precondition_violations`.
    pub degree_bound: Option<usize>,
    pub trace: TraceLevel,
}

impl RunConfig {
    pub fn new(mode: Mode, seed: u64) -> Self {
        RunConfig {
            seed,
            mode,
            max_rounds: None,
            degree_bound: None,
            trace: TraceLevel::Full,
        }
    }

    pub fn max_rounds(mut self, rounds: usize) -> Self {
        self.max_rounds = Some(rounds);
        self
    }

    pub fn degree_bound(mut self, d: usize) -> Self {
        self.degree_bound = Some(d);
        self
    }

    pub fn trace(mut self, level: TraceLevel) -> Self {
        self.trace = level;
        self
    }
}

/// A message handed over in round `round`, for processing in `round + 1`.
#[derive(Clone, Copy, Debug)]
pub struct Delivery<'a> {
    pub round: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub label: Option<u32>,
    pub bits: u64,
    pub message: &'a Message,
}

pub fn run<P: Protocol, A: Adversary + ?Sized>(
    protocol: &P,
    adversary: &mut A,
    config: &RunConfig,
) -> Result<RunResult, RunError> {
    run_observed(protocol, adversary, config, |_| {})
}

/// [`run`] with a callback on every delivered message.
pub fn run_observed<P, A, F>(
    protocol: &P,
    adversary: &mut A,
    config: &RunConfig,
    mut observe: F,
) -> Result<RunResult, RunError>
where
    P: Protocol,
    A: Adversary + ?Sized,
    F: FnMut(&Delivery<'_>),
{
    let n = adversary.n();
    let mode = config.mode;
    if n == 0 {
        return Err(RunError::Config("n must be at least 1".into()));
    }
    if !protocol.supports(mode) {
        return Err(RunError::UnsupportedMode {
            protocol: protocol.name().to_string(),
            mode,
        });
    }
    let max_rounds = config.max_rounds.unwrap_or_else(|| protocol.round_budget(n));
    if max_rounds == 0 {
        return Err(RunError::Config("max_rounds must be at least 1".into()));
    }

    let has_leader = protocol.uses_leader();
    let mut states: Vec<P::State> = (0..n)
        .map(|u| protocol.initial_state(has_leader && u == 0))
        .collect();
    let mut inboxes: Vec<Vec<Received>> = vec![Vec::new(); n];
    let mut halted: Vec<Option<Output>> = vec![None; n];
    let mut halt_rounds: Vec<Option<usize>> = vec![None; n];

    let mut result = RunResult {
        protocol: protocol.name().to_string(),
        adversary: adversary.describe(),
        n,
        seed: config.seed,
        mode,
        halted: false,
        rounds_executed: 0,
        outputs: vec![],
        halt_rounds: vec![],
        max_message_bits: 0,
        total_message_bits: 0,
        total_messages: 0,
        precondition_violations: vec![],
        trace: vec![],
    };

    for round in 1..=max_rounds {
        let digests: Vec<StateDigest> = states.iter().map(state_digest).collect();
        let ctx = AdversaryContext {
            round,
            state_digests: &digests,
            rng_seed: config.seed,
        };
        let (graph, labels) = next_round(adversary, &ctx, mode)?;
        if config.degree_bound.is_some_and(|d| graph.max_degree() > d) {
            result.precondition_violations.push(round);
        }
        let adjacency = graph.adjacency();

        let mut outboxes: Vec<Option<Outbox>> = vec![None; n];
        for u in 0..n {
            if halted[u].is_some() {
                continue;
            }
            let inbox = std::mem::take(&mut inboxes[u]);
            let step_ctx = StepContext {
                round,
                mode,
                degree: labels.as_ref().map(|l| l.degree(u)),
            };
            let step = protocol
                .step(&mut states[u], &inbox, &step_ctx)
                .map_err(|source| RunError::Protocol { round, source })?;
            if let Action::Halt(out) = step.action {
                halted[u] = Some(out);
                halt_rounds[u] = Some(round);
            }
            outboxes[u] = Some(step.outbox);
        }

        let mut records = Vec::new();
        for (u, outbox) in outboxes.into_iter().enumerate() {
            let Some(outbox) = outbox else { continue };
            let sends: Vec<(NodeId, Arc<Message>)> = match outbox {
                Outbox::Silent => continue,
                Outbox::Broadcast(m) => {
                    let m = Arc::new(m);
                    adjacency[u].iter().map(|&v| (v, Arc::clone(&m))).collect()
                }
                Outbox::PerLabel(map) => {
                    let Some(l) = labels.as_ref() else {
                        return Err(RunError::Protocol {
                            round,
                            source: ProtocolError::PerLabelInBroadcast,
                        });
                    };
                    let mut sends = Vec::with_capacity(map.len());
                    for (label, m) in map {
                        let v = l.neighbor(u, label).ok_or(RunError::Protocol {
                            round,
                            source: ProtocolError::UnknownLabel {
                                label,
                                degree: l.degree(u),
                            },
                        })?;
                        sends.push((v, Arc::new(m)));
                    }
                    sends
                }
            };
            let mut cost_cache: Option<(*const Message, u64)> = None;
            for (v, m) in sends {
                if halted[v].is_some() {
                    continue;
                }
                let bits = match cost_cache {
                    Some((p, bits)) if std::ptr::eq(p, Arc::as_ptr(&m)) => bits,
                    _ => {
                        let bits = m.bit_cost().map_err(|e| RunError::Protocol {
                            round,
                            source: e.into(),
                        })?;
                        cost_cache = Some((Arc::as_ptr(&m), bits));
                        bits
                    }
                };
                let label = labels.as_ref().map(|l| l.label(v, u).expect("edge is labeled"));
                observe(&Delivery {
                    round,
                    from: u,
                    to: v,
                    label,
                    bits,
                    message: &m,
                });
                result.max_message_bits = result.max_message_bits.max(bits);
                result.total_message_bits += bits;
                result.total_messages += 1;
                if config.trace == TraceLevel::Full {
                    records.push(MessageRecord {
                        from: u,
                        to: v,
                        bits,
                        kind: m.kind_tag(),
                    });
                }
                inboxes[v].push(Received { label, message: m });
            }
        }
        for inbox in &mut inboxes {
            match mode {
                // Arrival order would leak sender indices.
                Mode::Broadcast => inbox.sort_by(|a, b| a.message.cmp(&b.message)),
                Mode::OneToEach => inbox.sort_by_key(|r| r.label),
            }
        }

        result.rounds_executed = round;
        let all_halted = halted.iter().all(Option::is_some);
        if config.trace != TraceLevel::Off {
            result.trace.push(RoundRecord {
                round,
                edges: graph.edges().map(|(u, v)| [u, v]).collect(),
                messages: records,
                digests,
                outputs: current_outputs(protocol, &states, &halted),
            });
        }
        if all_halted {
            result.halted = true;
            break;
        }
    }

    result.outputs = current_outputs(protocol, &states, &halted);
    result.halt_rounds = halt_rounds;
    Ok(result)
}

fn current_outputs<P: Protocol>(
    protocol: &P,
    states: &[P::State],
    halted: &[Option<Output>],
) -> Vec<Option<Output>> {
    states
        .iter()
        .zip(halted)
        .map(|(s, h)| h.clone().or_else(|| protocol.observe(s)))
        .collect()
}
