//! Naming under broadcast when the schedule is dynamic enough that the
//! arrival times of the leader's consecutive states tell nodes apart.
//!
//! The leader works in cycles. In cycle `c` every fixed node (the leader and
//! all nodes whose ids are final) assigns level `c` in odd rounds until a
//! `freeze` command arrives. Each freshly named node answers `assign_ack(l)`
//! where `l` is the number of assignments it received, and every assigner
//! adds `1/l` to its count. The leader collects the counts, learning the
//! number `j` of level-`c` nodes, then floods `arrival_probe` and waits for
//! `j` distinct arrival vectors. The next `start` command fixes them. A
//! cycle with `j = 0` ends the protocol.
//!
//! Assignment acknowledgements are exact only when every graph persists for
//! two rounds (see [`crate::adversary::duplicated`]).

use std::collections::BTreeSet;

use num::{BigInt, BigRational, One, Zero};

use super::{bodies, int};
use crate::causal::arrival_times;
use crate::engine::{Mode, Outbox, Output, Protocol, ProtocolError, Received, Step, StepContext};
use crate::graph::{DynamicSchedule, GraphError, NodeId};
use crate::value::{Kind, Message, Value};

/// Two non-leader nodes whose arrival vectors coincide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub u: NodeId,
    pub r: usize,
    pub v: NodeId,
    pub w: NodeId,
    pub vector: Vec<Option<usize>>,
}

/// First `(u, r, v, w)` whose length-`k` arrival vectors are equal, for
/// `r` in `0..=len - (k - 1) - (n - 1)`.
pub fn high_dynamicity_violation(s: &DynamicSchedule, k: usize) -> Result<Option<Violation>, GraphError> {
    let n = s.n();
    if n <= 2 {
        return Ok(None);
    }
    let k = k.max(1);
    let horizon = s.len();
    let span = (k - 1) + (n - 1);
    if horizon < span {
        return Err(GraphError::InsufficientSchedule {
            requested: span,
            available: horizon,
        });
    }
    for u in 0..n {
        for r in 0..=horizon - span {
            let arrivals = (r..r + k)
                .map(|t| arrival_times(s, u, t, horizon))
                .collect::<Result<Vec<_>, _>>()?;
            let vector = |v: usize| -> Vec<Option<usize>> { arrivals.iter().map(|a| a[v]).collect() };
            for v in (0..n).filter(|&v| v != u) {
                for w in (v + 1..n).filter(|&w| w != u) {
                    if vector(v) == vector(w) {
                        return Ok(Some(Violation {
                            u,
                            r,
                            v,
                            w,
                            vector: vector(v),
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

pub fn check_high_dynamicity(s: &DynamicSchedule, k: usize) -> Result<bool, GraphError> {
    Ok(high_dynamicity_violation(s, k)?.is_none())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Phase {
    /// Waiting for every fixed node to acknowledge `start`; `settled` is the
    /// round in which the last acknowledgement was in.
    Assigning { settled: Option<usize> },
    Freezing { at: usize },
    Probing { j: u64, t0: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct LeaderCtl {
    phase: Phase,
    fixed: BTreeSet<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HdState {
    level: Option<u64>,
    vector: Vec<u64>,
    fixed: bool,
    assigning: Option<u64>,
    assigned_prev: bool,
    count: BigRational,
    /// Newest command seen: `(t, kind, body)`.
    command: Option<(u64, Kind, Value)>,
    handled: u64,
    cycle: u64,
    start_acks: BTreeSet<Value>,
    reports: BTreeSet<Value>,
    vectors: BTreeSet<Value>,
    probe: Option<(u64, u64, u64)>,
    report_at: Option<usize>,
    relay: Option<(u64, u64)>,
    leader: Option<LeaderCtl>,
}

#[derive(Clone, Copy, Debug)]
pub struct HighDynamicityNaming {
    k_cap: usize,
}

/// `k_cap` is the number of probe arrivals that make up an id.
pub fn high_dynamicity_naming(k_cap: usize) -> HighDynamicityNaming {
    HighDynamicityNaming { k_cap: k_cap.max(1) }
}

fn u(v: &Value) -> Option<u64> {
    v.as_int().and_then(|i| u64::try_from(i).ok())
}

fn id_of(level: u64, vector: &[u64]) -> Value {
    Value::tuple([Value::uint(level), vector_value(vector)])
}

fn vector_value(vector: &[u64]) -> Value {
    Value::tuple(vector.iter().map(|&a| Value::uint(a)))
}

fn rational(v: &Value) -> Option<BigRational> {
    match v {
        Value::Int(i) => Some(BigRational::from_integer(BigInt::from(*i))),
        Value::Rat(r) => Some(r.clone()),
        _ => None,
    }
}

impl HdState {
    fn id(&self) -> Value {
        id_of(self.level.unwrap_or(0), &self.vector)
    }

    fn enter_cycle(&mut self, c: u64) {
        if c > self.cycle {
            self.cycle = c;
            self.start_acks.clear();
            self.reports.clear();
            self.vectors.clear();
        }
    }

    /// Merges a flooded `(cycle, set)` part into `target`.
    fn merge(&mut self, inbox: &[Received], kind: Kind) {
        for body in bodies(inbox, kind) {
            let Some(parts) = body.as_tuple() else { continue };
            let (Some(c), Some(Value::Set(items))) = (parts.first().and_then(u), parts.get(1)) else {
                continue;
            };
            self.enter_cycle(c);
            if c == self.cycle {
                let target = match kind {
                    Kind::StartAck => &mut self.start_acks,
                    Kind::CountReport => &mut self.reports,
                    _ => &mut self.vectors,
                };
                target.extend(items.iter().cloned());
            }
        }
    }

    fn absorb(&mut self, inbox: &[Received], round: usize, k_cap: usize) -> Result<(), ProtocolError> {
        for kind in [Kind::Start, Kind::Freeze] {
            for body in bodies(inbox, kind) {
                let t = body.as_tuple().and_then(|p| p.first()).and_then(u).unwrap_or(0);
                if self.command.as_ref().is_none_or(|(old, _, _)| t > *old) {
                    self.command = Some((t, kind, body.clone()));
                }
            }
        }
        if let Some((_, _, body)) = &self.command {
            if let Some(c) = body.as_tuple().and_then(|p| p.get(1)).and_then(u) {
                self.enter_cycle(c);
            }
        }
        for kind in [Kind::StartAck, Kind::CountReport, Kind::VectorReport] {
            self.merge(inbox, kind);
        }

        let newest_probe = bodies(inbox, Kind::ArrivalProbe)
            .filter_map(|b| {
                let p = b.as_tuple()?;
                Some((u(p.first()?)?, u(p.get(1)?)?, u(p.get(2)?)?))
            })
            .max_by_key(|&(c, _, i)| (c, i));
        if let Some((c, t0, i)) = newest_probe {
            if self.probe.is_none_or(|(pc, _, pi)| (c, i) > (pc, pi)) {
                let prev = self.probe.filter(|&(pc, _, _)| pc == c).map(|(_, _, pi)| pi);
                if !self.fixed && self.level == Some(c) && self.leader.is_none() {
                    let first = prev.map_or(t0, |p| (p + 1).max(t0));
                    let last = i.min(t0 + k_cap as u64 - 1);
                    for _ in first..=last {
                        if self.vector.len() < k_cap {
                            self.vector.push(round as u64 - 1);
                        }
                    }
                }
                self.probe = Some((c, t0, i));
            }
        }

        if self.assigned_prev {
            for l in bodies(inbox, Kind::AssignAck) {
                let l = rational(l).filter(|l| !l.is_zero()).ok_or_else(|| {
                    ProtocolError::Consistency(format!("bad assign_ack {l}"))
                })?;
                self.count += BigRational::one() / l;
            }
        }
        Ok(())
    }

    fn outbox(&self, mut out: Message) -> Outbox {
        if let Some((_, kind, body)) = &self.command {
            out.push(*kind, body.clone());
        }
        if let Some((c, t0, i)) = self.probe {
            out.push(
                Kind::ArrivalProbe,
                Value::tuple([Value::uint(c), Value::uint(t0), Value::uint(i)]),
            );
        }
        for (kind, set) in [
            (Kind::StartAck, &self.start_acks),
            (Kind::CountReport, &self.reports),
            (Kind::VectorReport, &self.vectors),
        ] {
            if !set.is_empty() {
                out.push(kind, Value::tuple([Value::uint(self.cycle), Value::Set(set.clone().into())]));
            }
        }
        Outbox::broadcast(out)
    }

    fn relay_step(&mut self, n: u64, rounds: u64) -> Step {
        let left = self.relay.get_or_insert((n, rounds)).1;
        let output = Output::with_n(self.id(), n);
        if left == 0 {
            return Step::halt(Outbox::Silent, output);
        }
        self.relay = Some((n, left - 1));
        let out = Outbox::broadcast(Message::single(Kind::Halt, Value::uint(n)));
        if left == 1 {
            Step::halt(out, output)
        } else {
            Step::send(out)
        }
    }
}

impl HighDynamicityNaming {
    fn follower(&self, s: &mut HdState, inbox: &[Received], round: usize) -> Result<Step, ProtocolError> {
        let mut out = Message::new();
        if s.level.is_none() {
            let assigns: Vec<u64> = bodies(inbox, Kind::Assign).filter_map(u).collect();
            if let Some(&c) = assigns.iter().min() {
                s.level = Some(c);
                let l = assigns.iter().filter(|&&a| a == c).count();
                out.push(Kind::AssignAck, int(l));
            }
        }
        if let Some((t, kind, body)) = s.command.clone() {
            if t > s.handled {
                s.handled = t;
                let parts = body.as_tuple().unwrap_or(&[]).to_vec();
                let c = parts.get(1).and_then(u).unwrap_or(0);
                match kind {
                    Kind::Start => {
                        if let (Some(level), Some(Value::Set(fix))) = (s.level, parts.get(2)) {
                            if !s.fixed && level + 1 == c && fix.contains(&vector_value(&s.vector)) {
                                s.fixed = true;
                            }
                        }
                        if s.fixed {
                            s.assigning = Some(c);
                            s.count = BigRational::zero();
                            s.start_acks.insert(s.id());
                        }
                    }
                    Kind::Freeze
                        if s.assigning.take().is_some() => {
                            s.report_at = Some(round + 1);
                        }
                    _ => {}
                }
            }
        }
        if s.report_at == Some(round) {
            s.report_at = None;
            s.reports.insert(Value::tuple([s.id(), Value::Rat(s.count.clone())]));
        }
        if !s.fixed && s.vector.len() == self.k_cap
            && s.level == Some(s.cycle) {
                s.vectors.insert(vector_value(&s.vector));
            }
        // Acks for an odd-round assignment come back two rounds later.
        if round % 2 == 1 {
            s.assigned_prev = false;
            if let Some(c) = s.assigning {
                out.push(Kind::Assign, Value::uint(c));
                s.assigned_prev = true;
            }
        }
        Ok(Step::send(s.outbox(out)))
    }

    fn lead(&self, s: &mut HdState, round: usize) -> Result<Step, ProtocolError> {
        let r = round as u64;
        let mut ctl = s.leader.take().expect("leader state");
        let mut out = Message::new();
        let mut assign_now = false;
        match ctl.phase.clone() {
            Phase::Assigning { settled } => {
                let acked: BTreeSet<&Value> = s.start_acks.iter().collect();
                let all_in = ctl.fixed.iter().all(|id| acked.contains(id));
                let settled = settled.or(all_in.then_some(round));
                match settled {
                    Some(e) if round > e && (round - 1) % 2 == 1 => {
                        s.command = Some((r, Kind::Freeze, Value::tuple([Value::uint(r), Value::uint(s.cycle)])));
                        s.handled = r;
                        ctl.phase = Phase::Freezing { at: round };
                    }
                    _ => {
                        ctl.phase = Phase::Assigning { settled };
                        assign_now = round % 2 == 1;
                    }
                }
            }
            Phase::Freezing { at } => {
                let reported: BTreeSet<Value> = s
                    .reports
                    .iter()
                    .filter_map(|rep| rep.as_tuple().and_then(|p| p.first()).cloned())
                    .collect();
                if round > at && ctl.fixed.iter().all(|id| reported.contains(id)) {
                    let mut total = s.count.clone();
                    for rep in &s.reports {
                        if let Some(c) = rep.as_tuple().and_then(|p| p.get(1)).and_then(rational) {
                            total += c;
                        }
                    }
                    if !total.is_integer() {
                        return Err(ProtocolError::Consistency(format!("assignment count {total} is not an integer")));
                    }
                    let j = u64::try_from(total.to_integer()).map_err(|_| {
                        ProtocolError::Consistency("assignment count out of range".into())
                    })?;
                    if j == 0 {
                        s.leader = Some(ctl.clone());
                        let n = 1 + ctl.fixed.len() as u64;
                        return Ok(s.relay_step(n, n - 1));
                    }
                    ctl.phase = Phase::Probing { j, t0: r - 1 };
                }
            }
            Phase::Probing { .. } => {}
        }
        if let Phase::Probing { j, t0 } = ctl.phase {
            let seen: Vec<Value> = s.vectors.iter().cloned().collect();
            if seen.len() as u64 > j {
                return Err(ProtocolError::Consistency(format!(
                    "{} vectors reported for {j} assignments",
                    seen.len()
                )));
            }
            if seen.len() as u64 == j {
                let c = s.cycle;
                for v in &seen {
                    ctl.fixed.insert(Value::tuple([Value::uint(c), v.clone()]));
                }
                s.enter_cycle(c + 1);
                let body = Value::tuple([Value::uint(r), Value::uint(c + 1), Value::set(seen)]);
                s.command = Some((r, Kind::Start, body));
                s.handled = r;
                s.count = BigRational::zero();
                ctl.phase = Phase::Assigning { settled: None };
                assign_now = round % 2 == 1;
            } else {
                s.probe = Some((s.cycle, t0, r - 1));
            }
        }
        if round % 2 == 1 {
            s.assigned_prev = assign_now;
        }
        if assign_now {
            out.push(Kind::Assign, Value::uint(s.cycle));
        }
        s.leader = Some(ctl);
        Ok(Step::send(s.outbox(out)))
    }
}

impl Protocol for HighDynamicityNaming {
    type State = HdState;

    fn name(&self) -> &str {
        "hd-naming"
    }

    fn supports(&self, mode: Mode) -> bool {
        mode == Mode::Broadcast
    }

    fn initial_state(&self, is_leader: bool) -> HdState {
        HdState {
            level: is_leader.then_some(0),
            vector: vec![],
            fixed: is_leader,
            assigning: is_leader.then_some(1),
            assigned_prev: false,
            count: BigRational::zero(),
            command: None,
            handled: 0,
            cycle: 1,
            start_acks: BTreeSet::new(),
            reports: BTreeSet::new(),
            vectors: BTreeSet::new(),
            probe: None,
            report_at: None,
            relay: None,
            leader: is_leader.then(|| LeaderCtl {
                phase: Phase::Assigning { settled: None },
                fixed: BTreeSet::new(),
            }),
        }
    }

    fn step(&self, s: &mut HdState, inbox: &[Received], ctx: &StepContext) -> Result<Step, ProtocolError> {
        if let Some((n, _)) = s.relay {
            return Ok(s.relay_step(n, 0));
        }
        if let Some(n) = bodies(inbox, Kind::Halt).find_map(u) {
            return Ok(s.relay_step(n, n.saturating_sub(2)));
        }
        s.absorb(inbox, ctx.round, self.k_cap)?;
        if s.leader.is_some() {
            self.lead(s, ctx.round)
        } else {
            self.follower(s, inbox, ctx.round)
        }
    }

    fn observe(&self, s: &HdState) -> Option<Output> {
        s.fixed.then(|| Output::value(s.id()))
    }
}
