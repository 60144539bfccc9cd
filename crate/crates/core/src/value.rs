//! Message payload terms and their canonical bit cost.
//!
//! Every payload exchanged by a protocol is a finite term built from
//! nonnegative integers, exact rationals, tuples and sets. The cost model
//! charges an Elias-gamma style self-delimiting code for integers and a
//! small structural overhead for composite terms:
//!
//! * integer `v >= 0`: `L = bitlen(v + 1)` value bits plus a unary length
//!   prefix of `L + 1` bits, i.e. `2L + 1` bits (so `0` costs 3 bits);
//! * `⊥` (absent): 1 bit;
//! * rational `p/q`: cost of the tuple `(p, q)`;
//! * tuple: sum of its parts plus 2 bits per part;
//! * set: sum of its elements plus 2 bits per element plus the integer cost
//!   of the element count.
//!
//! A [`Message`] is a bundle of tagged parts; its cost is that of the tuple
//! of `(tag, body)` pairs, where the tag is charged as the integer
//! [`Kind::code`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("negative value {0} has no encoding")]
    Negative(String),
    #[error("rational with zero denominator")]
    ZeroDenominator,
}

/// A finite payload term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Nil,
    Int(i64),
    Rat(BigRational),
    Tuple(Arc<[Value]>),
    Set(Arc<BTreeSet<Value>>),
}

impl Value {
    pub fn int(v: impl Into<i64>) -> Self {
        Value::Int(v.into())
    }

    pub fn uint(v: u64) -> Self {
        Value::Int(i64::try_from(v).expect("integer payload exceeds i64"))
    }

    pub fn tuple(parts: impl IntoIterator<Item = Value>) -> Self {
        Value::Tuple(parts.into_iter().collect::<Vec<_>>().into())
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Set(Arc::new(items.into_iter().collect()))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Rat(r) if r.is_integer() => i64::try_from(r.to_integer()).ok(),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(parts) => Some(parts),
            _ => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Nil)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => f.write_str("_"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Value::Tuple(parts) => {
                f.write_str("(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            Value::Set(items) => {
                f.write_str("{")?;
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Cost in bits of the nonnegative integer `v`.
pub fn int_cost(v: u64) -> u64 {
    let len = u64::from(128 - (u128::from(v) + 1).leading_zeros());
    2 * len.max(1) + 1
}

fn big_cost(v: &BigInt) -> Result<u64, EncodeError> {
    if v.is_negative() {
        return Err(EncodeError::Negative(v.to_string()));
    }
    let len = (v + 1u32).bits();
    Ok(2 * len.max(1) + 1)
}

/// Canonical encoded size of a payload term.
pub fn bit_cost(value: &Value) -> Result<u64, EncodeError> {
    match value {
        Value::Nil => Ok(1),
        Value::Int(v) => {
            if *v < 0 {
                Err(EncodeError::Negative(v.to_string()))
            } else {
                Ok(int_cost(*v as u64))
            }
        }
        Value::Rat(r) => {
            if r.denom().is_zero() {
                return Err(EncodeError::ZeroDenominator);
            }
            Ok(big_cost(r.numer())? + big_cost(r.denom())? + 4)
        }
        Value::Tuple(parts) => parts
            .iter()
            .try_fold(0u64, |acc, p| Ok(acc + bit_cost(p)? + 2)),
        Value::Set(items) => {
            let body = items
                .iter()
                .try_fold(0u64, |acc, p| Ok::<_, EncodeError>(acc + bit_cost(p)? + 2))?;
            Ok(body + int_cost(items.len() as u64))
        }
    }
}

/// Message kinds, shared by every protocol so traces use one vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Ping,
    Assign,
    Ack,
    Halt,
    PartialCount,
    MyLabel,
    Unassigned,
    AssignAck,
    Start,
    StartAck,
    Freeze,
    Unfreeze,
    CountReport,
    ArrivalProbe,
    VectorReport,
    Request,
    Report,
    Reassign,
    MaxAnnounce,
    Silence,
}

impl Kind {
    pub fn code(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Ping => "ping",
            Kind::Assign => "assign",
            Kind::Ack => "ack",
            Kind::Halt => "halt",
            Kind::PartialCount => "partial_count",
            Kind::MyLabel => "my_label",
            Kind::Unassigned => "unassigned",
            Kind::AssignAck => "assign_ack",
            Kind::Start => "start",
            Kind::StartAck => "start_ack",
            Kind::Freeze => "freeze",
            Kind::Unfreeze => "unfreeze",
            Kind::CountReport => "count_report",
            Kind::ArrivalProbe => "arrival_probe",
            Kind::VectorReport => "vector_report",
            Kind::Request => "request",
            Kind::Report => "report",
            Kind::Reassign => "reassign",
            Kind::MaxAnnounce => "max_announce",
            Kind::Silence => "silence",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Part {
    pub kind: Kind,
    pub body: Value,
}

/// One transmission: a bundle of tagged parts sent in a single round over
/// one edge (or to all neighbors in broadcast mode).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub parts: Vec<Part>,
}

impl Message {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(kind: Kind, body: Value) -> Self {
        Message {
            parts: vec![Part { kind, body }],
        }
    }

    pub fn push(&mut self, kind: Kind, body: Value) {
        self.parts.push(Part { kind, body });
    }

    pub fn with(mut self, kind: Kind, body: Value) -> Self {
        self.push(kind, body);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts_of(&self, kind: Kind) -> impl Iterator<Item = &Value> {
        self.parts
            .iter()
            .filter(move |p| p.kind == kind)
            .map(|p| &p.body)
    }

    pub fn first(&self, kind: Kind) -> Option<&Value> {
        self.parts_of(kind).next()
    }

    pub fn has(&self, kind: Kind) -> bool {
        self.parts.iter().any(|p| p.kind == kind)
    }

    /// `+`-joined kinds in order of first appearance.
    pub fn kind_tag(&self) -> String {
        let mut seen: Vec<Kind> = Vec::new();
        for p in &self.parts {
            if !seen.contains(&p.kind) {
                seen.push(p.kind);
            }
        }
        seen.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("+")
    }

    pub fn bit_cost(&self) -> Result<u64, EncodeError> {
        self.parts.iter().try_fold(0u64, |acc, p| {
            Ok(acc + int_cost(p.kind.code()) + bit_cost(&p.body)? + 2)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn rat(p: i64, q: i64) -> Value {
        Value::Rat(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    #[test]
    fn zero_is_smallest_integer() {
        assert_eq!(bit_cost(&Value::Int(0)).unwrap(), 3);
        assert_eq!(int_cost(0), 3);
        assert_eq!(int_cost(1), 5);
        assert_eq!(int_cost(2), 5);
        assert_eq!(int_cost(3), 7);
        assert_eq!(int_cost(u64::MAX), 2 * 65 + 1);
    }

    #[test]
    fn negative_values_do_not_encode() {
        assert!(matches!(bit_cost(&Value::Int(-1)), Err(EncodeError::Negative(_))));
        assert!(bit_cost(&rat(-1, 2)).is_err());
        assert!(bit_cost(&Value::tuple([Value::Int(1), Value::Int(-4)])).is_err());
    }

    #[test]
    fn tuple_costs_at_least_its_parts() {
        let a = Value::Int(17);
        let b = rat(3, 4);
        let t = Value::tuple([a.clone(), b.clone()]);
        assert_eq!(
            bit_cost(&t).unwrap(),
            bit_cost(&a).unwrap() + bit_cost(&b).unwrap() + 4
        );
    }

    #[test]
    fn set_of_ids_is_k_log_n() {
        // k ids each bounded by n^2 cost between k*(2 log n) and k*(4 log n + c)
        for n in [8u64, 64, 1024] {
            let k = n as usize;
            let ids: Vec<Value> = (0..k).map(|i| Value::uint(n * n - 1 - i as u64)).collect();
            let cost = bit_cost(&Value::set(ids)).unwrap();
            let log_n = (n as f64).log2();
            let per = cost as f64 / k as f64;
            assert!(per >= 4.0 * log_n, "n={n} per={per}");
            assert!(per <= 4.0 * log_n + 8.0 + int_cost(k as u64) as f64 / k as f64, "n={n} per={per}");
        }
    }

    #[test]
    fn message_cost_includes_tags() {
        let m = Message::single(Kind::Assign, Value::Int(0));
        assert_eq!(m.bit_cost().unwrap(), int_cost(Kind::Assign.code()) + 3 + 2);
        let m2 = m.clone().with(Kind::Ack, Value::Int(5));
        assert!(m2.bit_cost().unwrap() > m.bit_cost().unwrap());
        assert_eq!(m2.kind_tag(), "assign+ack");
    }

    #[test]
    fn display_is_compact() {
        let v = Value::tuple([Value::Int(0), Value::set([Value::Int(2), Value::Int(1)]), rat(6, 4), Value::Nil]);
        assert_eq!(v.to_string(), "(0,{1,2},3/2,_)");
    }

    proptest::proptest! {
        #[test]
        fn cost_is_monotone_in_integers(a in 0u64..u64::MAX / 2, b in 0u64..u64::MAX / 2) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(int_cost(lo) <= int_cost(hi));
        }
    }
}
