use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{Mode, Outbox, Output, Protocol, ProtocolError, Received, Step, StepContext};
use crate::protocols::{bodies, countdown, max_int};
use crate::value::{Kind, Message, Value};

const NEXT_POSSIBLE: u64 = 0;
const SEEK: u64 = 1;

/// A timestamped conversation message. Every node keeps and forwards only
/// the newest one it has seen.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conv {
    pub ts: u64,
    pub kind: Kind,
    /// Fields after the timestamp.
    pub fields: Vec<Value>,
}

impl Conv {
    fn new(ts: u64, kind: Kind, fields: Vec<Value>) -> Self {
        Conv { ts, kind, fields }
    }

    fn to_value(&self) -> Value {
        Value::tuple(std::iter::once(Value::uint(self.ts)).chain(self.fields.iter().cloned()))
    }

    fn parse(kind: Kind, v: &Value) -> Option<Self> {
        let (ts, rest) = v.as_tuple()?.split_first()?;
        Some(Conv::new(u64::try_from(ts.as_int()?).ok()?, kind, rest.to_vec()))
    }

    fn field(&self, i: usize) -> Option<u64> {
        self.fields.get(i)?.as_int().and_then(|v| u64::try_from(v).ok())
    }

    fn addressed_to(&self, id: u64) -> bool {
        let target = match self.kind {
            Kind::Request => 1,
            Kind::Unfreeze | Kind::Freeze | Kind::Reassign => 0,
            _ => return false,
        };
        self.field(target) == Some(id)
    }
}

const CONV_KINDS: [Kind; 5] = [Kind::Unfreeze, Kind::Freeze, Kind::Request, Kind::Reassign, Kind::Report];

fn opt(v: Option<u64>) -> Value {
    v.map_or(Value::Nil, Value::uint)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Phase {
    Unfreeze(u64),
    Freeze { j: u64, after: Option<u64> },
    Seek { after: Option<u64> },
    Reassign(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeaderCtl {
    phase: Phase,
    pending: Option<u64>,
    answer: Option<Value>,
    /// Ids collected from possibly-assigned sets, not yet resolved.
    list: BTreeSet<u64>,
    /// Ids known to be held, in increasing order.
    confirmed: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConvState {
    pub id: Option<u64>,
    /// Number of consecutive ids `0..d` handed out so far.
    pub d: u64,
    pub assigning: bool,
    pub next_k: u64,
    pub reuse: BTreeSet<u64>,
    /// Ids sent last round, by label.
    pub sent: BTreeMap<u32, u64>,
    pub possibly_assigned: BTreeSet<u64>,
    pub rejected: BTreeSet<u64>,
    pub conv: Option<Conv>,
    handled: u64,
    leader: Option<Box<LeaderCtl>>,
    halting: Option<(u64, u64)>,
}

/// Minimal naming by repeated cycles of assignment, freezing and
/// conversations between the leader and one node at a time.
#[derive(Clone, Copy, Debug, Default)]
pub struct IndividualConversations;

pub fn individual_conversations() -> IndividualConversations {
    IndividualConversations
}

impl ConvState {
    fn output(&self, n: u64) -> Output {
        Output::with_n(opt(self.id), n)
    }

    fn halt_step(&mut self, n: u64, left: u64) -> Step {
        let mut left = self.halting.map_or(left, |(_, l)| l);
        let step = countdown(
            &mut left,
            Outbox::broadcast(Message::single(Kind::MaxAnnounce, Value::uint(n))),
            self.output(n),
        );
        self.halting = Some((n, left));
        step
    }

    fn reset_assignment(&mut self) {
        self.next_k = 1;
        self.reuse.clear();
        self.possibly_assigned.clear();
        self.rejected.clear();
    }

    fn fresh_id(&mut self) -> u64 {
        if let Some(x) = self.reuse.pop_first() {
            return x;
        }
        let x = self.next_k * self.d + self.id.unwrap_or(0);
        self.next_k += 1;
        x
    }

    /// Sends a request or collects its answer; `None` means wait.
    fn ask(&mut self, round: u64, kind: Kind, fields: Vec<Value>) -> Option<Value> {
        let ctl = self.leader.as_mut().expect("leader only");
        if ctl.pending.is_none() {
            ctl.pending = Some(round);
            self.conv = Some(Conv::new(round, kind, fields));
            return None;
        }
        let answer = ctl.answer.take()?;
        ctl.pending = None;
        Some(answer)
    }

    fn reply(&mut self, req: &Conv) -> Value {
        let after = req.field(2);
        match req.kind {
            Kind::Unfreeze => {
                self.d = req.field(1).unwrap_or(self.d);
                self.assigning = true;
                self.reset_assignment();
                Value::Nil
            }
            Kind::Freeze => {
                self.assigning = false;
                opt(self.possibly_assigned.first().copied())
            }
            Kind::Request => {
                let pool = match req.field(0) {
                    Some(NEXT_POSSIBLE) => &self.possibly_assigned,
                    Some(SEEK) => &self.rejected,
                    _ => return Value::Nil,
                };
                opt(match after {
                    Some(a) => pool.range(a + 1..).next().copied(),
                    None => pool.first().copied(),
                })
            }
            Kind::Reassign => {
                let new = req.field(1).unwrap_or(0);
                self.id = Some(new);
                self.rejected.clear();
                self.possibly_assigned.clear();
                Value::uint(new)
            }
            _ => Value::Nil,
        }
    }

    /// Runs the leader's schedule as far as it goes without waiting.
    /// Returns the network size once a cycle names nobody.
    fn lead(&mut self, round: u64) -> Option<u64> {
        loop {
            let phase = self.leader.as_ref().expect("leader only").phase.clone();
            let next = match phase {
                Phase::Unfreeze(j) if j >= self.d => {
                    // Everyone holding an id assigns in this round.
                    self.ctl().phase = Phase::Freeze { j: 0, after: None };
                    return None;
                }
                Phase::Unfreeze(j) => {
                    self.ask(round, Kind::Unfreeze, vec![Value::uint(j), Value::uint(self.d)])?;
                    Phase::Unfreeze(j + 1)
                }
                Phase::Freeze { j: 0, .. } => {
                    self.assigning = false;
                    let own = std::mem::take(&mut self.possibly_assigned);
                    self.ctl().list.extend(own);
                    Phase::Freeze { j: 1, after: None }
                }
                Phase::Freeze { j, .. } if j >= self.d => Phase::Seek { after: None },
                Phase::Freeze { j, after } => {
                    let answer = match after {
                        None => self.ask(round, Kind::Freeze, vec![Value::uint(j)])?,
                        Some(a) => self.ask(
                            round,
                            Kind::Request,
                            vec![Value::uint(NEXT_POSSIBLE), Value::uint(j), Value::uint(a)],
                        )?,
                    };
                    match answer.as_int() {
                        Some(x) => {
                            let x = x as u64;
                            self.ctl().list.insert(x);
                            Phase::Freeze { j, after: Some(x) }
                        }
                        None => Phase::Freeze { j: j + 1, after: None },
                    }
                }
                Phase::Seek { after } => match self.ctl().list.first().copied() {
                    None => Phase::Reassign(0),
                    Some(x) => {
                        let answer =
                            self.ask(round, Kind::Request, vec![Value::uint(SEEK), Value::uint(x), opt(after)])?;
                        let ctl = self.ctl();
                        match answer.as_int() {
                            Some(y) => {
                                ctl.list.remove(&(y as u64));
                                Phase::Seek { after: Some(y as u64) }
                            }
                            None => {
                                ctl.list.remove(&x);
                                ctl.confirmed.push(x);
                                Phase::Seek { after: None }
                            }
                        }
                    }
                },
                Phase::Reassign(i) => {
                    let confirmed = &self.ctl().confirmed;
                    if i == confirmed.len() {
                        if confirmed.is_empty() {
                            return Some(self.d);
                        }
                        self.d += confirmed.len() as u64;
                        self.ctl().confirmed.clear();
                        self.reset_assignment();
                        self.assigning = true;
                        Phase::Unfreeze(1)
                    } else {
                        let (x, new) = (confirmed[i], self.d + i as u64);
                        if x != new {
                            self.ask(round, Kind::Reassign, vec![Value::uint(x), Value::uint(new)])?;
                        }
                        Phase::Reassign(i + 1)
                    }
                }
            };
            self.ctl().phase = next;
        }
    }

    fn ctl(&mut self) -> &mut LeaderCtl {
        self.leader.as_mut().expect("leader only")
    }
}

impl Protocol for IndividualConversations {
    type State = ConvState;

    fn name(&self) -> &str {
        "individual-conversations"
    }

    fn supports(&self, mode: Mode) -> bool {
        mode == Mode::OneToEach
    }

    fn round_budget(&self, n: usize) -> usize {
        40 * n.pow(3) + 200
    }

    fn initial_state(&self, is_leader: bool) -> ConvState {
        ConvState {
            id: is_leader.then_some(0),
            d: 1,
            assigning: is_leader,
            next_k: 1,
            reuse: BTreeSet::new(),
            sent: BTreeMap::new(),
            possibly_assigned: BTreeSet::new(),
            rejected: BTreeSet::new(),
            conv: None,
            handled: 0,
            leader: is_leader.then(|| {
                Box::new(LeaderCtl {
                    phase: Phase::Unfreeze(1),
                    pending: None,
                    answer: None,
                    list: BTreeSet::new(),
                    confirmed: Vec::new(),
                })
            }),
            halting: None,
        }
    }

    fn step(&self, s: &mut ConvState, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        let r = ctx.round as u64;
        let degree = ctx.degree.unwrap_or(0) as u32;
        if let Some((n, _)) = s.halting {
            return Ok(s.halt_step(n, 0));
        }
        if s.leader.is_none() {
            if let Some(n) = max_int(inbox, Kind::MaxAnnounce) {
                let n = n as u64;
                return Ok(s.halt_step(n, n.saturating_sub(2)));
            }
        }

        for (label, x) in std::mem::take(&mut s.sent) {
            let beacon = inbox
                .iter()
                .find(|m| m.label == Some(label))
                .and_then(|m| m.message.first(Kind::Ack));
            match beacon {
                Some(v) if !v.is_nil() => s.reuse.insert(x),
                _ => s.possibly_assigned.insert(x),
            };
        }
        if s.id.is_none() {
            let mut offers: BTreeSet<u64> =
                bodies(inbox, Kind::Assign).filter_map(|v| v.as_int()).map(|v| v as u64).collect();
            s.id = offers.pop_first();
            s.rejected.extend(offers);
        }

        let newest = inbox
            .iter()
            .flat_map(|m| CONV_KINDS.iter().flat_map(move |&k| m.message.parts_of(k).filter_map(move |v| Conv::parse(k, v))))
            .max();
        if newest > s.conv {
            s.conv = newest;
        }

        if s.leader.is_some() {
            let pending = s.ctl().pending;
            if let (Some(p), Some(c)) = (pending, &s.conv) {
                if c.kind == Kind::Report && c.ts > p {
                    let answer = c.fields.get(1).cloned().unwrap_or(Value::Nil);
                    s.ctl().answer = Some(answer);
                }
            }
            if let Some(n) = s.lead(r) {
                return Ok(s.halt_step(n, n - 1));
            }
        } else if let (Some(id), Some(c)) = (s.id, s.conv.clone()) {
            if c.ts > s.handled && c.addressed_to(id) {
                let value = s.reply(&c);
                s.conv = Some(Conv::new(r, Kind::Report, vec![Value::uint(id), value]));
                s.handled = r;
            }
        }

        let mut outbox = BTreeMap::new();
        for label in 1..=degree {
            let mut m = Message::single(Kind::Ack, opt(s.id));
            if let Some(c) = &s.conv {
                m.push(c.kind, c.to_value());
            }
            if s.assigning {
                let x = s.fresh_id();
                s.sent.insert(label, x);
                m.push(Kind::Assign, Value::uint(x));
            }
            outbox.insert(label, m);
        }
        Ok(Step::send(Outbox::per_label(outbox)))
    }

    fn observe(&self, s: &ConvState) -> Option<Output> {
        s.id.map(|id| Output::value(Value::uint(id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{complete, line, random_connected_adversary, static_adversary};
    use crate::engine::{run, RunConfig};

    fn final_ids(res: &crate::engine::RunResult) -> Vec<i64> {
        let mut ids: Vec<i64> = res.outputs.iter().map(|o| o.as_ref().unwrap().value.as_int().unwrap()).collect();
        ids.sort();
        ids
    }

    #[test]
    fn single_edge() {
        let mut adv = static_adversary(line(2, true).unwrap()).unwrap();
        let res = run(&IndividualConversations, &mut adv, &RunConfig::new(Mode::OneToEach, 0)).unwrap();
        assert!(res.halted);
        assert_eq!(final_ids(&res), [0, 1]);
        assert!(res.outputs.iter().all(|o| o.as_ref().unwrap().reported_n == Some(2)));
    }

    #[test]
    fn triangle() {
        let mut adv = static_adversary(complete(3).unwrap()).unwrap();
        let res = run(&IndividualConversations, &mut adv, &RunConfig::new(Mode::OneToEach, 0)).unwrap();
        assert!(res.halted);
        assert_eq!(final_ids(&res), [0, 1, 2]);
    }

    #[test]
    fn lone_leader() {
        let mut adv = static_adversary(line(1, true).unwrap()).unwrap();
        let res = run(&IndividualConversations, &mut adv, &RunConfig::new(Mode::OneToEach, 0)).unwrap();
        assert!(res.halted);
        assert_eq!(res.outputs[0].as_ref().unwrap().reported_n, Some(1));
    }

    #[test]
    fn random_schedules_give_consecutive_ids() {
        for seed in 0..5 {
            let n = 7;
            let mut adv = random_connected_adversary(n, seed);
            let res = run(&IndividualConversations, &mut adv, &RunConfig::new(Mode::OneToEach, seed)).unwrap();
            assert!(res.halted, "seed {seed}");
            assert_eq!(final_ids(&res), (0..n as i64).collect::<Vec<_>>());
        }
    }
}
