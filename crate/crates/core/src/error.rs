use thiserror::Error;

use crate::tree::VertexAddress;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slot {slot} is out of range at {at}: vertex has {arity} children")]
    SlotOutOfRange {
        at: VertexAddress,
        slot: u32,
        arity: u32,
    },

    #[error("the root has no parent")]
    RootHasNoParent,

    #[error("address {0} climbs above the root of a rooted tree")]
    AboveRoot(VertexAddress),

    #[error("enumeration would produce more than {cap} vertices")]
    EnumerationCapExceeded { cap: usize },

    #[error("{0} is not applicable to this tree kind")]
    NotApplicable(&'static str),

    #[error("{descendant} is not a descendant of {ancestor}")]
    NotADescendant {
        ancestor: VertexAddress,
        descendant: VertexAddress,
    },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("the Rolewicz operator is not bounded on this space")]
    UnboundedOperator,

    #[error("instance not covered by a closed form: {0}")]
    NotCovered(&'static str),

    #[error(
        "criterion not met within truncation: {quantity} reached {reached} after {levels} levels, \
         needed more than {needed}"
    )]
    CriterionNotMetWithinTruncation {
        quantity: &'static str,
        reached: f64,
        needed: f64,
        levels: usize,
    },

    #[error("constructed chain failed verification: {0}")]
    ConstructionFailed(String),
}
