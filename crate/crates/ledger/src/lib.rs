//! Append-only, hash-chained decision ledger.
//!
//! Storage is JSON Lines: each line is the canonical encoding of one
//! [`DecisionRecord`](idc_core::DecisionRecord), hash included. Record `k`
//! carries `seq = k`, the hash of record `k - 1` (the genesis hash for
//! `k = 0`) and its own hash `SHA-256(unsealed_bytes ∥ prev_hash)`.
//!
//! The verifier in [`verify`] depends on nothing but `idc-core`, so an auditor
//! can check a ledger file without the runtime or the policy engine.

mod ledger;
pub mod verify;

pub use ledger::{read_stream, read_stream_file, Durability, Ledger, LedgerError, LedgerSink};
pub use verify::{verify_bytes, verify_file, verify_records, FailureReason, VerificationReport};

/// File extension for ledger files.
pub const LEDGER_EXTENSION: &str = "idledger";
