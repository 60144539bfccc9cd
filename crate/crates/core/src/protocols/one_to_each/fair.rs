use super::tuple_id::TupleId;
use crate::engine::{Mode, Outbox, Output, Protocol, ProtocolError, Received, Step, StepContext};
use crate::protocols::bodies;
use crate::value::{Kind, Message};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TupleState {
    pub clock: u64,
    pub id: Option<TupleId>,
    pub leader: bool,
    pub counter: u64,
}

/// Non-terminating tuple naming. With `delegate` unset only the leader
/// assigns; with it set every named node does, and anonymous nodes keep the
/// smallest id offered.
#[derive(Clone, Copy, Debug)]
pub struct TupleNaming {
    delegate: bool,
}

pub fn fair_naming() -> TupleNaming {
    TupleNaming { delegate: false }
}

pub fn delegate_naming() -> TupleNaming {
    TupleNaming { delegate: true }
}

impl Protocol for TupleNaming {
    type State = TupleState;

    fn name(&self) -> &str {
        if self.delegate {
            "delegate"
        } else {
            "fair"
        }
    }

    /// Broadcast is accepted as a degraded mode: a single id goes to every
    /// neighbor.
    fn supports(&self, _: Mode) -> bool {
        true
    }

    fn initial_state(&self, is_leader: bool) -> TupleState {
        TupleState {
            clock: 0,
            id: is_leader.then(TupleId::leader),
            leader: is_leader,
            counter: u64::from(is_leader),
        }
    }

    fn step(&self, s: &mut TupleState, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        if s.id.is_none() {
            s.id = bodies(inbox, Kind::Assign).filter_map(TupleId::from_value).min();
        }
        let outbox = match &s.id {
            Some(id) if s.leader || self.delegate => {
                let issue = |i: u64| Message::single(Kind::Assign, id.issued_by(s.clock, s.counter + i).to_value());
                match ctx.degree {
                    Some(d) => {
                        let out = Outbox::per_label((1..=d as u32).map(|l| (l, issue(u64::from(l)))));
                        s.counter += d as u64;
                        out
                    }
                    None => {
                        let out = Outbox::broadcast(issue(1));
                        s.counter += 1;
                        out
                    }
                }
            }
            _ => Outbox::Silent,
        };
        s.clock += 1;
        Ok(Step::send(outbox))
    }

    fn observe(&self, s: &TupleState) -> Option<Output> {
        s.id.as_ref().map(|id| Output::value(id.to_value()))
    }
}
