//! Counting upper bounds in dynamic networks with broadcast, given a bound
//! on the degree or on the maximum expansion.

use super::max_int;
use crate::engine::{Mode, Outbox, Output, Protocol, ProtocolError, Received, Step, StepContext};
use crate::value::{Kind, Message, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Growth {
    /// `count = (1 + d)^L`.
    Degree(u64),
    /// `count = 1 + e * L`.
    Expansion(u64),
}

impl Growth {
    fn bound(self, level: u64) -> Result<u64, ProtocolError> {
        let v = match self {
            Growth::Degree(d) => u32::try_from(level)
                .ok()
                .and_then(|l| (1 + d).checked_pow(l)),
            Growth::Expansion(e) => e.checked_mul(level).and_then(|x| x.checked_add(1)),
        };
        v.filter(|&c| c <= i64::MAX as u64)
            .ok_or_else(|| ProtocolError::Consistency(format!("count overflows at level {level}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DegreeCountState {
    pub leader: bool,
    pub label: Option<u64>,
    pub count: u64,
    pub latest_event: u64,
    pub max_label: u64,
    seen_label: Option<u64>,
    seen_unassigned: Option<u64>,
    /// `(count, halt relay rounds left)` once a halt is known.
    relay: Option<(u64, u64)>,
}

#[derive(Clone, Copy, Debug)]
pub struct DegreeCounting {
    growth: Growth,
}

pub fn degree_counting(d: u64) -> DegreeCounting {
    DegreeCounting {
        growth: Growth::Degree(d),
    }
}

pub fn expansion_counting(e: u64) -> DegreeCounting {
    DegreeCounting {
        growth: Growth::Expansion(e),
    }
}

impl DegreeCounting {
    pub fn growth(&self) -> Growth {
        self.growth
    }

    fn relay_step(s: &mut DegreeCountState, count: u64) -> Step {
        let left = s.relay.get_or_insert((count, count)).1 - 1;
        s.relay = Some((count, left));
        let out = Outbox::broadcast(Message::single(Kind::Halt, Value::uint(count)));
        if left == 0 {
            Step::halt(out, Output::value(Value::uint(count)))
        } else {
            Step::send(out)
        }
    }
}

impl Protocol for DegreeCounting {
    type State = DegreeCountState;

    fn name(&self) -> &str {
        match self.growth {
            Growth::Degree(_) => "degree-counting",
            Growth::Expansion(_) => "expansion-counting",
        }
    }

    fn supports(&self, _: Mode) -> bool {
        true
    }

    /// The leader may wait until round `2 * count + O(n)`, and `count` can
    /// reach the bound for `L = n - 1`.
    fn round_budget(&self, n: usize) -> usize {
        let levels = n.saturating_sub(1) as u32;
        let bound = match self.growth {
            Growth::Degree(d) => (1 + d).saturating_pow(levels),
            Growth::Expansion(e) => e.saturating_mul(levels as u64).saturating_add(1),
        };
        let budget = bound.saturating_mul(2).saturating_add(20 * n as u64 + 100);
        budget.min(100_000_000) as usize
    }

    fn initial_state(&self, is_leader: bool) -> DegreeCountState {
        DegreeCountState {
            leader: is_leader,
            label: is_leader.then_some(0),
            count: u64::from(is_leader),
            latest_event: 0,
            max_label: 0,
            seen_label: None,
            seen_unassigned: None,
            relay: None,
        }
    }

    fn step(
        &self,
        s: &mut DegreeCountState,
        inbox: &[Received],
        ctx: &StepContext,
    ) -> Result<Step, ProtocolError> {
        let r = ctx.round as u64;
        if let Some((count, _)) = s.relay {
            return Ok(Self::relay_step(s, count));
        }
        if let Some(c) = max_int(inbox, Kind::Halt) {
            s.count = c as u64;
            return Ok(Self::relay_step(s, c as u64));
        }

        let heard_label = max_int(inbox, Kind::MyLabel).map(|v| v as u64);
        let heard_unassigned = max_int(inbox, Kind::Unassigned).map(|v| v as u64);
        s.seen_label = s.seen_label.max(heard_label);
        s.seen_unassigned = s.seen_unassigned.max(heard_unassigned);

        let mut out = Message::new();
        if s.leader {
            // Events are dated by the round their messages were sent in.
            let sent = r - 1;
            let by_unassigned = heard_unassigned.filter(|&i| i > s.latest_event);
            let by_label = heard_label.filter(|&j| j > s.max_label);
            if let Some(level) = by_unassigned.max(by_label) {
                s.count = self.growth.bound(level)?;
                s.max_label = level;
                s.latest_event = sent;
            }
            if sent + 1 > s.count + s.latest_event {
                let count = s.count;
                return Ok(Self::relay_step(s, count));
            }
            out.push(Kind::Assign, Value::uint(r));
        } else {
            if s.label.is_none() {
                s.label = max_int(inbox, Kind::Assign).map(|v| v as u64);
            }
            match s.label {
                Some(label) => {
                    out.push(Kind::Assign, Value::uint(r));
                    out.push(Kind::MyLabel, Value::uint(label));
                }
                None => out.push(Kind::Unassigned, Value::uint(r)),
            }
        }
        if let Some(j) = s.seen_label {
            out.push(Kind::MyLabel, Value::uint(j));
        }
        if let Some(i) = s.seen_unassigned {
            out.push(Kind::Unassigned, Value::uint(i));
        }
        Ok(Step::send(Outbox::broadcast(out)))
    }
}
