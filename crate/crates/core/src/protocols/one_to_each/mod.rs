//! Naming under one-to-each transmission.

mod conversations;
mod dynamic_naming;
mod fair;
mod renaming;
mod tuple_id;

pub use conversations::{individual_conversations, Conv, ConvState, IndividualConversations};
pub use dynamic_naming::{dynamic_naming, DynamicNaming, LeaderBook, NamingState};
pub use fair::{delegate_naming, fair_naming, TupleNaming, TupleState};
pub use renaming::{minimal_renaming_postprocess, RenameError};
pub use tuple_id::{Origin, TupleId};
