use std::fmt;

use crate::value::Value;

/// Who issued a [`TupleId`]: the distinguished root, or a named node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Root,
    Node(Box<TupleId>),
}

/// `(r, h, i)`: assignment round, assigner id, assigner-local counter.
/// Ordered by `r`, then `h`, then `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleId {
    pub round: u64,
    pub assigner: Origin,
    pub index: u64,
}

impl TupleId {
    /// The leader's own id, `(0, 1, 1)`.
    pub fn leader() -> Self {
        TupleId {
            round: 0,
            assigner: Origin::Root,
            index: 1,
        }
    }

    pub fn issued_by(&self, round: u64, index: u64) -> Self {
        TupleId {
            round,
            assigner: Origin::Node(Box::new(self.clone())),
            index,
        }
    }

    pub fn to_value(&self) -> Value {
        let h = match &self.assigner {
            Origin::Root => Value::Int(1),
            Origin::Node(id) => id.to_value(),
        };
        Value::tuple([Value::uint(self.round), h, Value::uint(self.index)])
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        let [r, h, i] = v.as_tuple()? else { return None };
        let assigner = match h {
            Value::Int(1) => Origin::Root,
            other => Origin::Node(Box::new(Self::from_value(other)?)),
        };
        Some(TupleId {
            round: u64::try_from(r.as_int()?).ok()?,
            assigner,
            index: u64::try_from(i.as_int()?).ok()?,
        })
    }
}

impl fmt::Display for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_round_then_assigner_then_index() {
        let l = TupleId::leader();
        let a = l.issued_by(1, 2);
        let b = l.issued_by(1, 3);
        let c = a.issued_by(1, 1);
        let d = l.issued_by(2, 1);
        assert!(l < a && a < b && b < c && c < d);
        assert_eq!(l.to_string(), "(0,1,1)");
        assert_eq!(c.to_string(), "(1,(1,(0,1,1),2),1)");
        for id in [l, a, b, c, d] {
            assert_eq!(TupleId::from_value(&id.to_value()), Some(id));
        }
    }
}
