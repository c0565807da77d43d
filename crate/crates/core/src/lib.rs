//! Chain recurrence of weighted backward shifts on directed trees.
//!
//! A tree is described by an eventually periodic arity profile plus finitely
//! many exceptions ([`TreeSpec`]), and the shift weights the same way
//! ([`WeightSpec`]). On top of that the crate offers:
//!
//! * [`classify`], which decides chain recurrence of `B_λ` on ℓ^1, ℓ^p or c₀
//!   from truncated series with exact periodic-tail rules, and
//!   [`classify_closed_form`] for symmetric instances;
//! * builders for explicit δ-chains between `0` and `e_v`
//!   ([`build_chain_from_zero`], [`build_chain_to_zero`],
//!   [`build_loop_chain`]) and an independent checker ([`verify_chain`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod criteria;
pub mod error;
pub mod format;
mod levels;
pub mod profile;
pub mod shift;
pub mod tree;

pub use chain::{
    build_chain_from_zero, build_chain_to_zero, build_loop_chain, dual_witness_sigma, verify_chain,
    ChainKind, ChainReport, ChainWitness, DeltaChain, Direction, Selection,
};
pub use criteria::{
    classify, classify_closed_form, dual_exponent, series_left_condition, series_root_condition,
    shift_invariance_oracle, Classification, ClosedForm, DualMode, Recurrence, Rule, SeriesVerdict,
    ShiftInvarianceReport, TruncationPolicy, Verdict,
};
pub use error::{Error, Result};
pub use format::{chain_from_json, chain_to_json, tree_from_json, weights_from_json, JsonScalar};
pub use profile::Profile;
pub use shift::{
    apply_shift, apply_shift_power, norm, path_weight, rolewicz_bounded, weight_at, Scalar,
    SpaceSpec, SparseVector, WeightMode, WeightSpec,
};
pub use tree::{
    canonical_address, generation_of, GenerationSize, TreeKind, TreeSpec, VertexAddress,
    DEFAULT_ENUMERATION_CAP,
};
