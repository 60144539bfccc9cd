//! Static networks with broadcast: distance labels from the leader, exact
//! counting on top of them, and the leaderless degree labeling.

use std::collections::BTreeSet;

use num::{BigInt, BigRational, One, Zero};

use super::{bodies, int, ints};
use crate::engine::{Mode, Outbox, Output, Protocol, ProtocolError, Received, Step, StepContext};
use crate::value::{Kind, Message, Value};

/// Shared state of the labeling phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EccState {
    pub leader: bool,
    pub label: Option<u64>,
    /// Largest acknowledged label (leader only).
    pub max_asgned: u64,
    /// Number of `assign` messages received in the labeling round.
    pub up: u64,
    forwarded: BTreeSet<u64>,
    /// Leader eccentricity, learned from `halt`.
    pub epsilon: Option<u64>,
    /// Round in which this node leaves the labeling phase.
    pub halt_at: Option<usize>,
}

impl EccState {
    fn new(leader: bool) -> Self {
        EccState {
            leader,
            label: leader.then_some(0),
            max_asgned: 0,
            up: 0,
            forwarded: BTreeSet::new(),
            epsilon: None,
            halt_at: None,
        }
    }

    fn schedule_halt(&mut self, round: usize, epsilon: u64) {
        self.epsilon = Some(epsilon);
        let label = self.label.unwrap_or(epsilon);
        self.halt_at = Some(round + epsilon.saturating_sub(label) as usize);
    }

    /// One round of the labeling phase. Returns the broadcast and whether
    /// the phase ends in this round.
    fn step(&mut self, inbox: &[Received], round: usize) -> (Message, bool) {
        let mut out = Message::new();
        if self.label.is_none() {
            let assigns: Vec<i64> = ints(inbox, Kind::Assign).collect();
            if let Some(&i) = assigns.iter().min() {
                let i = i as u64;
                self.label = Some(i);
                self.up = assigns.iter().filter(|&&a| a as u64 == i).count() as u64;
                out.push(Kind::Assign, Value::uint(i + 1));
                out.push(Kind::Ack, Value::uint(i));
            }
        }
        let acks: BTreeSet<u64> = ints(inbox, Kind::Ack).map(|a| a as u64).collect();
        if self.leader {
            if let Some(&m) = acks.last() {
                self.max_asgned = self.max_asgned.max(m);
            }
        } else if let Some(label) = self.label {
            for a in acks {
                if label < a && self.forwarded.insert(a) {
                    out.push(Kind::Ack, Value::uint(a));
                }
            }
        }
        if self.halt_at.is_none() {
            if let Some(e) = ints(inbox, Kind::Halt).max() {
                self.schedule_halt(round, e as u64);
                out.push(Kind::Halt, Value::uint(e as u64));
            }
        }
        if self.leader {
            if round == 1 {
                out.push(Kind::Assign, Value::int(1));
            }
            if self.halt_at.is_none() && round as u64 > 2 * (self.max_asgned + 1) {
                self.schedule_halt(round, self.max_asgned);
                out.push(Kind::Halt, Value::uint(self.max_asgned));
            }
        }
        (out, self.halt_at == Some(round))
    }
}

/// Every node learns its distance from the leader; all nodes halt in the
/// same round.
#[derive(Clone, Copy, Debug, Default)]
pub struct LeaderEccentricity;

pub fn leader_eccentricity() -> LeaderEccentricity {
    LeaderEccentricity
}

fn label_value(label: Option<u64>) -> Value {
    label.map_or(Value::Nil, Value::uint)
}

impl Protocol for LeaderEccentricity {
    type State = EccState;

    fn name(&self) -> &str {
        "leader-eccentricity"
    }

    fn supports(&self, _: Mode) -> bool {
        true
    }

    fn initial_state(&self, is_leader: bool) -> EccState {
        EccState::new(is_leader)
    }

    fn step(&self, s: &mut EccState, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        let (out, done) = s.step(inbox, ctx.round);
        let outbox = Outbox::broadcast(out);
        Ok(if done {
            Step::halt(outbox, Output::value(label_value(s.label)))
        } else {
            Step::send(outbox)
        })
    }

    fn observe(&self, s: &EccState) -> Option<Output> {
        s.label.map(|l| Output::value(Value::uint(l)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CountState {
    pub ecc: EccState,
    /// Round in which the labeling phase ended; phase-local rounds count
    /// from here.
    pub phase_start: Option<usize>,
    pub count: Option<BigRational>,
}

/// Exact counting in static networks with a leader.
#[derive(Clone, Copy, Debug, Default)]
pub struct AnonymousCounting;

pub fn anonymous_counting() -> AnonymousCounting {
    AnonymousCounting
}

fn rational(v: &Value) -> Option<BigRational> {
    match v {
        Value::Int(i) => Some(BigRational::from_integer(BigInt::from(*i))),
        Value::Rat(r) => Some(r.clone()),
        _ => None,
    }
}

impl Protocol for AnonymousCounting {
    type State = CountState;

    fn name(&self) -> &str {
        "anonymous-counting"
    }

    fn supports(&self, _: Mode) -> bool {
        true
    }

    fn initial_state(&self, is_leader: bool) -> CountState {
        CountState {
            ecc: EccState::new(is_leader),
            phase_start: None,
            count: None,
        }
    }

    fn step(&self, s: &mut CountState, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        let Some(start) = s.phase_start else {
            let (out, done) = s.ecc.step(inbox, ctx.round);
            if done {
                s.phase_start = Some(ctx.round);
            }
            return Ok(Step::send(Outbox::broadcast(out)));
        };
        let p = (ctx.round - start) as u64;
        let epsilon = s.ecc.epsilon.expect("set before the phase ends");
        let label = s.ecc.label.unwrap_or(epsilon);

        // Halts from the labeling phase can still arrive at p = 1.
        if p > 1 && !s.ecc.leader {
            if let Some(c) = bodies(inbox, Kind::Halt).next() {
                let out = Message::single(Kind::Halt, c.clone());
                return Ok(Step::halt(Outbox::broadcast(out), Output::value(c.clone())));
            }
        }
        let Some(turn) = (epsilon + 1).checked_sub(label) else {
            return Err(ProtocolError::Consistency(format!("label {label} exceeds eccentricity {epsilon}")));
        };
        if p != turn {
            return Ok(Step::silent());
        }
        let mut total = BigRational::one();
        for v in bodies(inbox, Kind::PartialCount) {
            total += rational(v).ok_or_else(|| {
                ProtocolError::Consistency(format!("partial count {v} is not a number"))
            })?;
        }
        if s.ecc.leader {
            if !total.is_integer() {
                return Err(ProtocolError::Consistency(format!("leader count {total} is not an integer")));
            }
            let count = Value::Rat(total.clone());
            s.count = Some(total);
            let out = Message::single(Kind::Halt, count.clone());
            return Ok(Step::halt(Outbox::broadcast(out), Output::value(count)));
        }
        if s.ecc.up == 0 {
            return Err(ProtocolError::Consistency("labeled node without upper-level neighbors".into()));
        }
        let share = total / BigRational::from_integer(BigInt::from(s.ecc.up));
        debug_assert!(!share.is_zero());
        Ok(Step::send(Outbox::broadcast(Message::single(
            Kind::PartialCount,
            Value::Rat(share),
        ))))
    }
}

/// Leaderless: every node outputs its degree in round 2.
#[derive(Clone, Copy, Debug, Default)]
pub struct DegreeKLabeling;

pub fn degree_klabeling() -> DegreeKLabeling {
    DegreeKLabeling
}

impl Protocol for DegreeKLabeling {
    type State = u8;

    fn name(&self) -> &str {
        "degree-klabeling"
    }

    fn uses_leader(&self) -> bool {
        false
    }

    fn supports(&self, mode: Mode) -> bool {
        mode == Mode::Broadcast
    }

    fn initial_state(&self, _: bool) -> u8 {
        0
    }

    fn step(&self, s: &mut u8, inbox: &[Received], _: &StepContext) -> Result<Step, ProtocolError> {
        *s += 1;
        if *s == 1 {
            Ok(Step::send(Outbox::broadcast(Message::single(Kind::Ping, Value::Nil))))
        } else {
            Ok(Step::halt(Outbox::Silent, Output::value(int(inbox.len()))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{line, ring, star, static_adversary};
    use crate::engine::{run, RunConfig};
    use crate::graph::InstantGraph;

    fn outputs<P: Protocol>(p: &P, g: InstantGraph) -> (Vec<String>, usize) {
        let mut adv = static_adversary(g).unwrap();
        let res = run(p, &mut adv, &RunConfig::new(Mode::Broadcast, 1)).unwrap();
        assert!(res.halted, "{} did not halt", p.name());
        let outs = res
            .outputs
            .iter()
            .map(|o| o.as_ref().unwrap().value.to_string())
            .collect();
        (outs, res.rounds_executed)
    }

    #[test]
    fn eccentricity_examples() {
        assert_eq!(outputs(&LeaderEccentricity, star(5).unwrap()).0, ["0", "1", "1", "1", "1"]);
        let (outs, rounds) = outputs(&LeaderEccentricity, line(4, true).unwrap());
        assert_eq!(outs, ["0", "1", "2", "3"]);
        // halt created at 2*3 + 3, plus 3 rounds of synchronization
        assert_eq!(rounds, 12);
        assert_eq!(outputs(&LeaderEccentricity, line(1, true).unwrap()), (vec!["0".into()], 3));
    }

    #[test]
    fn counting_examples() {
        assert_eq!(outputs(&AnonymousCounting, star(4).unwrap()).0, ["4"; 4]);
        assert_eq!(outputs(&AnonymousCounting, line(3, true).unwrap()).0, ["3"; 3]);
        assert_eq!(outputs(&AnonymousCounting, line(1, true).unwrap()).0, ["1"]);
        assert_eq!(outputs(&AnonymousCounting, ring(7).unwrap()).0, ["7"; 7]);
    }

    #[test]
    fn degree_labels() {
        assert_eq!(outputs(&DegreeKLabeling, star(4).unwrap()).0, ["3", "1", "1", "1"]);
        assert_eq!(outputs(&DegreeKLabeling, ring(5).unwrap()).0, ["2"; 5]);
        assert_eq!(outputs(&DegreeKLabeling, line(4, true).unwrap()).0, ["1", "2", "2", "1"]);
    }
}
