use std::collections::BTreeSet;

use crate::engine::{Mode, Outbox, Output, Protocol, ProtocolError, Received, Step, StepContext};
use crate::protocols::{bodies, countdown, max_int};
use crate::value::{bit_cost, Kind, Message, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeaderBook {
    pub latest_new: u64,
    pub time_bound: u64,
    pub known_ids: BTreeSet<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NamingState {
    /// `0` for the leader, `(parent, c)` for everybody else.
    pub id: Option<Value>,
    pub count: u64,
    pub acks: BTreeSet<Value>,
    pub latest_unassigned: u64,
    pub book: Option<LeaderBook>,
    /// `(n, rounds left)` while relaying `halt`.
    halting: Option<(u64, u64)>,
}

/// Terminating naming: ids are `(assigner id, counter)` pairs, every node
/// floods the set of ids it has heard of, and the leader stops once no new
/// id and no `unassigned` report can still be on its way.
#[derive(Clone, Copy, Debug, Default)]
pub struct DynamicNaming;

pub fn dynamic_naming() -> DynamicNaming {
    DynamicNaming
}

fn shortest(ids: impl Iterator<Item = Value>) -> Result<Option<Value>, ProtocolError> {
    let mut best: Option<(u64, Value)> = None;
    for id in ids {
        let key = (bit_cost(&id)?, id);
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    Ok(best.map(|(_, id)| id))
}

impl NamingState {
    fn output(&self, n: u64) -> Output {
        Output::with_n(self.id.clone().unwrap_or(Value::Nil), n)
    }

    fn halt_step(&mut self, n: u64, left: u64) -> Step {
        let mut left = self.halting.map_or(left, |(_, l)| l);
        let step = countdown(
            &mut left,
            Outbox::broadcast(Message::single(Kind::Halt, Value::uint(n))),
            self.output(n),
        );
        self.halting = Some((n, left));
        step
    }
}

impl Protocol for DynamicNaming {
    type State = NamingState;

    fn name(&self) -> &str {
        "dynamic-naming"
    }

    fn supports(&self, mode: Mode) -> bool {
        mode == Mode::OneToEach
    }

    fn initial_state(&self, is_leader: bool) -> NamingState {
        NamingState {
            id: is_leader.then_some(Value::Int(0)),
            count: 0,
            acks: BTreeSet::new(),
            latest_unassigned: 0,
            book: is_leader.then(|| LeaderBook {
                latest_new: 0,
                time_bound: 1,
                known_ids: BTreeSet::from([Value::Int(0)]),
            }),
            halting: None,
        }
    }

    fn step(&self, s: &mut NamingState, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        let r = ctx.round as u64;
        let k = ctx.degree.unwrap_or(0) as u64;
        if let Some((n, _)) = s.halting {
            return Ok(s.halt_step(n, 0));
        }
        if s.book.is_none() {
            if let Some(n) = max_int(inbox, Kind::Halt) {
                let n = n as u64;
                return Ok(s.halt_step(n, n.saturating_sub(2)));
            }
        }

        let heard: BTreeSet<Value> = bodies(inbox, Kind::Ack)
            .filter_map(|v| match v {
                Value::Set(ids) => Some(ids.iter().cloned()),
                _ => None,
            })
            .flatten()
            .collect();
        let unassigned = max_int(inbox, Kind::Unassigned).map_or(0, |v| v as u64);
        s.latest_unassigned = s.latest_unassigned.max(unassigned);

        let mut common = Message::new();
        if s.id.is_none() {
            if let Some(id) = shortest(bodies(inbox, Kind::Assign).cloned())? {
                s.acks.insert(id.clone());
                s.id = Some(id);
            }
        }
        match &mut s.book {
            Some(book) => {
                if r == 1 {
                    book.known_ids.extend((1..=k).map(|i| Value::tuple([Value::Int(0), Value::uint(i)])));
                    // The first ids are adopted in round 2, after their
                    // receivers have already reported `unassigned(1)`.
                    book.latest_new = 2;
                    book.time_bound = 2 + book.known_ids.len() as u64;
                }
                if !heard.is_subset(&book.known_ids) {
                    book.known_ids.extend(heard);
                    book.latest_new = r;
                    book.time_bound = r + book.known_ids.len() as u64;
                }
                if r > book.time_bound && s.latest_unassigned < book.latest_new {
                    let n = book.known_ids.len() as u64;
                    return Ok(s.halt_step(n, n - 1));
                }
            }
            None => {
                s.acks.extend(heard);
                match s.id {
                    None => common.push(Kind::Unassigned, Value::uint(r)),
                    Some(_) if s.latest_unassigned > 0 => {
                        common.push(Kind::Unassigned, Value::uint(s.latest_unassigned))
                    }
                    Some(_) => {}
                }
            }
        }
        if !s.acks.is_empty() {
            common.push(Kind::Ack, Value::Set(s.acks.clone().into()));
        }

        let outbox = match &s.id {
            Some(id) => {
                let out = Outbox::per_label((1..=k).map(|i| {
                    let assigned = Value::tuple([id.clone(), Value::uint(s.count + i)]);
                    (i as u32, common.clone().with(Kind::Assign, assigned))
                }));
                s.count += k;
                out
            }
            None => Outbox::per_label((1..=k as u32).map(|i| (i, common.clone()))),
        };
        Ok(Step::send(outbox))
    }

    fn observe(&self, s: &NamingState) -> Option<Output> {
        s.id.clone().map(Output::value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{complete, line, static_adversary};
    use crate::engine::{run, RunConfig};

    #[test]
    fn triangle() {
        let mut adv = static_adversary(complete(3).unwrap()).unwrap();
        let res = run(&DynamicNaming, &mut adv, &RunConfig::new(Mode::OneToEach, 4)).unwrap();
        assert!(res.halted);
        let mut ids: Vec<String> = res.outputs.iter().map(|o| o.as_ref().unwrap().value.to_string()).collect();
        ids.sort();
        assert_eq!(ids, ["(0,1)", "(0,2)", "0"]);
        assert!(res.outputs.iter().all(|o| o.as_ref().unwrap().reported_n == Some(3)));
    }

    #[test]
    fn lone_leader() {
        let mut adv = static_adversary(line(1, true).unwrap()).unwrap();
        let res = run(&DynamicNaming, &mut adv, &RunConfig::new(Mode::OneToEach, 0)).unwrap();
        assert!(res.halted);
        assert_eq!(res.outputs[0].as_ref().unwrap().reported_n, Some(1));
    }

    #[test]
    fn shortest_id_wins_ties_by_order() {
        let a = Value::tuple([Value::Int(0), Value::Int(2)]);
        let b = Value::tuple([Value::Int(0), Value::Int(3)]);
        let deep = Value::tuple([a.clone(), Value::Int(1)]);
        assert_eq!(shortest([deep, b.clone(), a.clone()].into_iter()).unwrap(), Some(a));
    }
}
