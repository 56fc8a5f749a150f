//! Governance interpreter over decidable policies.
//!
//! A [`PolicySet`] is a finite list of rules. Each rule pairs a bounded
//! [`Predicate`] tree with the [`Decision`](idc_core::Decision) it votes for.
//! [`decide`] evaluates every rule and combines votes deny-overrides;
//! [`oracle_decide`] is an independent naive implementation used for
//! differential testing.

pub mod capability;
mod decide;
pub mod field;
pub mod gen;
mod oracle;
mod policy;
pub mod predicate;

pub use capability::{govern, govern_verdict, CapabilitySet, CAPABILITIES_KEY, CAPABILITY_MISS};
pub use decide::{combine, decide, evaluate, GovernanceOutcome, Verdict};
pub use field::{resolve_field, FieldRef};
pub use oracle::oracle_decide;
pub use policy::{PolicyError, PolicyRule, PolicySet};
pub use predicate::{evaluate_predicate, CmpOp, Predicate};
