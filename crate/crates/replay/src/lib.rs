//! Governance simulation: re-deciding a recorded intent stream under another
//! policy.
//!
//! Each decision record carries the intent and the exact governance context it
//! was decided in, capability gate included. Simulation feeds those back into
//! the governance interpreter with the new policy; programs are not re-run and
//! no effect is realized.

use idc_core::{Decision, DecisionRecord, RecordKind};
use idc_ledger::{verify_records, VerificationReport};
use idc_policy::{govern_verdict, PolicySet, CAPABILITY_MISS};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use std::fmt::{self, Write};
use std::ops::AddAssign;
use thiserror::Error;

/// Flipped-record lists stop growing at this length; the rest is only counted.
pub const FLIP_LIST_LIMIT: usize = 10_000;

/// Counts of (old decision, new decision) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlipMatrix {
    counts: [[u64; 3]; 3],
}

impl FlipMatrix {
    pub fn record(&mut self, old: Decision, new: Decision) {
        self.counts[old.index()][new.index()] += 1;
    }

    pub fn get(&self, old: Decision, new: Decision) -> u64 {
        self.counts[old.index()][new.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Off-diagonal count.
    pub fn flips(&self) -> u64 {
        self.total() - Decision::ALL.iter().map(|d| self.get(*d, *d)).sum::<u64>()
    }

    /// Records whose old decision was `old`.
    pub fn row_total(&self, old: Decision) -> u64 {
        self.counts[old.index()].iter().sum()
    }

    /// Records whose new decision is `new`.
    pub fn column_total(&self, new: Decision) -> u64 {
        self.counts.iter().map(|row| row[new.index()]).sum()
    }
}

impl AddAssign for FlipMatrix {
    fn add_assign(&mut self, rhs: FlipMatrix) {
        for (row, other) in self.counts.iter_mut().zip(rhs.counts) {
            for (cell, n) in row.iter_mut().zip(other) {
                *cell += n;
            }
        }
    }
}

/// Serialized as `{"allow": {"allow": n, "deny": n, "escalate": n}, ...}`.
impl Serialize for FlipMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Row<'a>(&'a [u64; 3]);
        impl Serialize for Row<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(3))?;
                for d in Decision::ALL {
                    m.serialize_entry(d.as_str(), &self.0[d.index()])?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(3))?;
        for d in Decision::ALL {
            m.serialize_entry(d.as_str(), &Row(&self.counts[d.index()]))?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("decision sequences differ in length ({old} vs {new})")]
pub struct LengthMismatch {
    pub old: usize,
    pub new: usize,
}

pub fn diff_decisions(old: &[Decision], new: &[Decision]) -> Result<FlipMatrix, LengthMismatch> {
    if old.len() != new.len() {
        return Err(LengthMismatch { old: old.len(), new: new.len() });
    }
    let mut m = FlipMatrix::default();
    for (o, n) in old.iter().zip(new) {
        m.record(*o, *n);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlippedRecord {
    pub seq: u64,
    pub old: Decision,
    pub new: Decision,
    pub new_applied_rules: Vec<String>,
    /// The recorded decision was a capability miss.
    pub capability_miss: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub policy_id: String,
    /// Decision records replayed.
    pub total: u64,
    /// Resolution and realization-failed records, which are not re-decided.
    pub skipped: u64,
    pub matrix: FlipMatrix,
    /// Records originally denied by the capability gate. Replay keeps the
    /// recorded gate, so these stay denied under any policy.
    pub capability_miss_records: u64,
    pub flipped_records: Vec<FlippedRecord>,
    /// Flips beyond [`FLIP_LIST_LIMIT`] that were counted but not listed.
    pub flipped_not_listed: u64,
}

impl SimulationReport {
    pub fn flips(&self) -> u64 {
        self.matrix.flips()
    }

    fn absorb(&mut self, other: SimulationReport) {
        self.total += other.total;
        self.skipped += other.skipped;
        self.matrix += other.matrix;
        self.capability_miss_records += other.capability_miss_records;
        self.flipped_not_listed += other.flipped_not_listed;
        for f in other.flipped_records {
            if self.flipped_records.len() < FLIP_LIST_LIMIT {
                self.flipped_records.push(f);
            } else {
                self.flipped_not_listed += 1;
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Human-readable summary with the flip matrix.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "policy {}: {} records replayed, {} skipped, {} flipped", self.policy_id, self.total, self.skipped, self.flips());
        let _ = writeln!(out, "{:<10}{:>10}{:>10}{:>10}", "old\\new", "allow", "deny", "escalate");
        for old in Decision::ALL {
            let _ = write!(out, "{:<10}", old.as_str());
            for new in Decision::ALL {
                let _ = write!(out, "{:>10}", self.matrix.get(old, new));
            }
            out.push('\n');
        }
        if self.capability_miss_records > 0 {
            let _ = writeln!(out, "{} records were capability misses and replay as such", self.capability_miss_records);
        }
        for f in self.flipped_records.iter().take(20) {
            let _ = writeln!(out, "  seq {:>6}  {} -> {}  [{}]", f.seq, f.old, f.new, f.new_applied_rules.join(", "));
        }
        let unshown = self.flipped_records.len().saturating_sub(20) as u64 + self.flipped_not_listed;
        if unshown > 0 {
            let _ = writeln!(out, "  ... {unshown} more");
        }
        out
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_table())
    }
}

fn is_capability_miss(r: &DecisionRecord) -> bool {
    r.decision == Decision::Deny && r.applied_rules.len() == 1 && r.applied_rules[0] == CAPABILITY_MISS
}

/// Re-decides every decision record of `stream` under `new_policy`.
/// Does not check the chain; see [`simulate_verified`].
pub fn simulate(new_policy: &PolicySet, stream: &[DecisionRecord]) -> SimulationReport {
    let mut report = SimulationReport { policy_id: new_policy.policy_id.clone(), ..SimulationReport::default() };
    for r in stream {
        if r.kind != RecordKind::Decision {
            report.skipped += 1;
            continue;
        }
        let verdict = govern_verdict(new_policy, &r.intent, &r.context);
        report.total += 1;
        report.matrix.record(r.decision, verdict.decision);
        let capability_miss = is_capability_miss(r);
        report.capability_miss_records += u64::from(capability_miss);
        if verdict.decision != r.decision {
            if report.flipped_records.len() < FLIP_LIST_LIMIT {
                report.flipped_records.push(FlippedRecord {
                    seq: r.seq,
                    old: r.decision,
                    new: verdict.decision,
                    new_applied_rules: verdict.applied_rules,
                    capability_miss,
                });
            } else {
                report.flipped_not_listed += 1;
            }
        }
    }
    report
}

/// [`simulate`] over `workers` contiguous partitions of the stream, merged.
/// Produces the same report as the sequential run.
pub fn simulate_parallel(new_policy: &PolicySet, stream: &[DecisionRecord], workers: usize) -> SimulationReport {
    let chunk = stream.len().div_ceil(workers.max(1)).max(1);
    let parts: Vec<SimulationReport> = std::thread::scope(|s| {
        let handles: Vec<_> = stream.chunks(chunk).map(|part| s.spawn(move || simulate(new_policy, part))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
    });
    let mut report = SimulationReport { policy_id: new_policy.policy_id.clone(), ..SimulationReport::default() };
    for part in parts {
        report.absorb(part);
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("ledger failed verification: {0}")]
    Unverified(VerificationReport),
    #[error("record {seq} was decided under policy {recorded:?}, not {given:?}")]
    PolicyMismatch { seq: u64, recorded: String, given: String },
    #[error("replay produced {0} flips")]
    Flipped(u64),
}

/// Simulates after checking the chain, unless `force` is set.
pub fn simulate_verified(
    new_policy: &PolicySet,
    stream: &[DecisionRecord],
    force: bool,
) -> Result<SimulationReport, ReplayError> {
    if !force {
        let report = verify_records(stream);
        if !report.ok {
            return Err(ReplayError::Unverified(report));
        }
    }
    Ok(simulate(new_policy, stream))
}

/// Re-decides a ledger against the policy it was recorded under and demands
/// that every decision is reproduced.
pub fn replay_check(policy: &PolicySet, stream: &[DecisionRecord]) -> Result<SimulationReport, ReplayError> {
    if let Some(r) = stream.iter().find(|r| r.kind == RecordKind::Decision && r.policy_id != policy.policy_id) {
        return Err(ReplayError::PolicyMismatch {
            seq: r.seq,
            recorded: r.policy_id.clone(),
            given: policy.policy_id.clone(),
        });
    }
    let report = simulate_verified(policy, stream, false)?;
    match report.flips() {
        0 => Ok(report),
        n => Err(ReplayError::Flipped(n)),
    }
}
