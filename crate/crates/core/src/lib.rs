//! Shared domain types for governed intent execution.
//!
//! Programs never perform effects; they produce [`Intent`]s. Governance turns
//! each intent into a [`Decision`], and the ledger seals that decision into a
//! hash-chained [`DecisionRecord`]. Everything here is an immutable value.

pub mod canonical;
pub mod hash;
pub mod intent;
pub mod record;
mod serde_impl;
pub mod value;

pub use canonical::{canonical_deserialize, canonical_serialize, CanonicalError, MAX_VALUE_DEPTH};
pub use hash::{chain_hash, genesis_hash, sha256, Hash32, HashParseError, GENESIS_SEED};
pub use intent::Intent;
pub use record::{Decision, DecisionRecord, RecordKind, RecordTemplate};
pub use value::{value_equals, Value, ValueMap, MAX_VALUE_NODES};
