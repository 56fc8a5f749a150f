//! Independent chain verification.
//!
//! Needs nothing but the ledger bytes and SHA-256: every line is parsed,
//! checked to be in canonical form, and its sequence number, predecessor link
//! and hash are recomputed from the genesis hash forward.

use idc_core::{genesis_hash, DecisionRecord};
use serde::Serialize;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    HashMismatch,
    PrevLinkMismatch,
    SeqGap,
    MalformedLine,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::HashMismatch => "hash-mismatch",
            FailureReason::PrevLinkMismatch => "prev-link-mismatch",
            FailureReason::SeqGap => "seq-gap",
            FailureReason::MalformedLine => "malformed-line",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    /// Position (0-based line index) of the first record that failed.
    pub first_bad_seq: Option<u64>,
    pub reason: Option<FailureReason>,
    pub records_checked: u64,
    pub detail: Option<String>,
}

impl VerificationReport {
    fn ok(records_checked: u64) -> Self {
        VerificationReport { ok: true, first_bad_seq: None, reason: None, records_checked, detail: None }
    }

    fn bad(seq: u64, reason: FailureReason, detail: impl Into<String>) -> Self {
        VerificationReport {
            ok: false,
            first_bad_seq: Some(seq),
            reason: Some(reason),
            records_checked: seq,
            detail: Some(detail.into()),
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.first_bad_seq, self.reason) {
            (Some(seq), Some(reason)) => {
                write!(f, "TAMPERED at seq {seq}: {reason}")?;
                if let Some(d) = &self.detail {
                    write!(f, " ({d})")?;
                }
                Ok(())
            }
            _ => write!(f, "OK: {} records verified", self.records_checked),
        }
    }
}

/// Splits ledger bytes into record lines. A single trailing newline is
/// allowed; a file consisting only of a newline holds no records.
pub(crate) fn split_lines(bytes: &[u8]) -> Vec<&[u8]> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    if body.is_empty() {
        return Vec::new();
    }
    body.split(|&b| b == b'\n').collect()
}

/// Parses a line and insists it is byte-identical to its canonical re-encoding.
pub(crate) fn parse_canonical_line(line: &[u8]) -> Result<DecisionRecord, String> {
    let record = DecisionRecord::from_line(line).map_err(|e| e.to_string())?;
    let again = record.to_line().map_err(|e| e.to_string())?;
    if again != line {
        return Err("line is not in canonical form".into());
    }
    Ok(record)
}

pub fn verify_bytes(bytes: &[u8]) -> VerificationReport {
    let mut expected_prev = genesis_hash();
    let lines = split_lines(bytes);
    for (k, line) in lines.iter().enumerate() {
        let k = k as u64;
        let record = match parse_canonical_line(line) {
            Ok(r) => r,
            Err(e) => return VerificationReport::bad(k, FailureReason::MalformedLine, e),
        };
        if record.seq != k {
            return VerificationReport::bad(k, FailureReason::SeqGap, format!("found seq {}", record.seq));
        }
        if record.prev_hash != expected_prev {
            return VerificationReport::bad(k, FailureReason::PrevLinkMismatch, "prev_hash does not match predecessor");
        }
        match record.computed_hash() {
            Ok(h) if h == record.hash => {}
            _ => return VerificationReport::bad(k, FailureReason::HashMismatch, "recomputed hash differs"),
        }
        expected_prev = record.hash;
    }
    VerificationReport::ok(lines.len() as u64)
}

/// Verifies an already-parsed record sequence.
pub fn verify_records(records: &[DecisionRecord]) -> VerificationReport {
    let mut expected_prev = genesis_hash();
    for (k, record) in records.iter().enumerate() {
        let k = k as u64;
        if record.seq != k {
            return VerificationReport::bad(k, FailureReason::SeqGap, format!("found seq {}", record.seq));
        }
        if record.prev_hash != expected_prev {
            return VerificationReport::bad(k, FailureReason::PrevLinkMismatch, "prev_hash does not match predecessor");
        }
        match record.computed_hash() {
            Ok(h) if h == record.hash => {}
            _ => return VerificationReport::bad(k, FailureReason::HashMismatch, "recomputed hash differs"),
        }
        expected_prev = record.hash;
    }
    VerificationReport::ok(records.len() as u64)
}

pub fn verify_file(path: impl AsRef<Path>) -> std::io::Result<VerificationReport> {
    Ok(verify_bytes(&std::fs::read(path)?))
}
