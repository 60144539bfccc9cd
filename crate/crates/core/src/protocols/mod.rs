//! Protocol state machines.

pub mod broadcast_dynamic;
pub mod high_dynamicity;
pub mod one_to_each;
pub mod static_net;

pub use broadcast_dynamic::{degree_counting, expansion_counting, DegreeCounting};
pub use high_dynamicity::{
    check_high_dynamicity, high_dynamicity_naming, high_dynamicity_violation, HighDynamicityNaming, Violation,
};
pub use one_to_each::{
    delegate_naming, dynamic_naming, fair_naming, individual_conversations,
    minimal_renaming_postprocess, DynamicNaming, IndividualConversations, TupleId, TupleNaming,
};
pub use static_net::{anonymous_counting, degree_klabeling, leader_eccentricity, AnonymousCounting, DegreeKLabeling, LeaderEccentricity};

use crate::engine::Received;
use crate::value::{Kind, Value};

/// Bodies of every `kind` part in the inbox, in inbox order.
pub(crate) fn bodies(inbox: &[Received], kind: Kind) -> impl Iterator<Item = &Value> {
    inbox.iter().flat_map(move |r| r.message.parts_of(kind))
}

pub(crate) fn ints(inbox: &[Received], kind: Kind) -> impl Iterator<Item = i64> + '_ {
    bodies(inbox, kind).filter_map(Value::as_int)
}

pub(crate) fn max_int(inbox: &[Received], kind: Kind) -> Option<i64> {
    ints(inbox, kind).max()
}

pub(crate) fn int(v: usize) -> Value {
    Value::uint(v as u64)
}

/// Sends `out` for `*left` more rounds and then halts with `output`; with
/// nothing left it halts at once, silently.
pub(crate) fn countdown(left: &mut u64, out: crate::engine::Outbox, output: crate::engine::Output) -> crate::engine::Step {
    use crate::engine::{Outbox, Step};
    if *left == 0 {
        return Step::halt(Outbox::Silent, output);
    }
    *left -= 1;
    if *left == 0 {
        Step::halt(out, output)
    } else {
        Step::send(out)
    }
}
