//! Brute-force expectations computed from the requests and the policy
//! parameters alone, without the runtime, the policy engine or the ledger.

use crate::policy::RefundPolicyParams;
use crate::workload::RefundRequest;
use idc_core::Decision;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Refunded,
    DeniedRegion,
    DeniedLimit,
    Escalated,
}

fn refund_decision(req: &RefundRequest, p: &RefundPolicyParams) -> Decision {
    if req.amount_cents > p.escalate_above_cents {
        Decision::Escalate
    } else if req.amount_cents > p.limit_cents {
        Decision::Deny
    } else {
        Decision::Allow
    }
}

fn region_ok(req: &RefundRequest, p: &RefundPolicyParams) -> bool {
    p.allowed_regions.contains(&req.region)
}

pub fn classify(req: &RefundRequest, p: &RefundPolicyParams) -> Outcome {
    if !region_ok(req, p) {
        return Outcome::DeniedRegion;
    }
    match refund_decision(req, p) {
        Decision::Allow => Outcome::Refunded,
        Decision::Deny => Outcome::DeniedLimit,
        Decision::Escalate => Outcome::Escalated,
    }
}

/// Recorded decision of each ask the program reaches for `req`, and the
/// decision `other` would give each of those same asks.
fn asks(req: &RefundRequest, p: &RefundPolicyParams, other: &RefundPolicyParams) -> Vec<(Decision, Decision)> {
    let crm = |q: &RefundPolicyParams| if region_ok(req, q) { Decision::Allow } else { Decision::Deny };
    let mut out = vec![(crm(p), crm(other))];
    if !region_ok(req, p) {
        return out;
    }
    out.push((Decision::Allow, Decision::Allow));
    out.push((refund_decision(req, p), refund_decision(req, other)));
    if refund_decision(req, p) == Decision::Allow {
        out.push((Decision::Allow, Decision::Allow));
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub refunded: u64,
    pub denied_region: u64,
    pub denied_limit: u64,
    pub escalated: u64,
}

impl OutcomeCounts {
    pub fn add(&mut self, o: Outcome) {
        *match o {
            Outcome::Refunded => &mut self.refunded,
            Outcome::DeniedRegion => &mut self.denied_region,
            Outcome::DeniedLimit => &mut self.denied_limit,
            Outcome::Escalated => &mut self.escalated,
        } += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DecisionCounts {
    pub allowed: u64,
    pub denied: u64,
    pub escalated: u64,
}

impl DecisionCounts {
    pub fn add(&mut self, d: Decision) {
        *match d {
            Decision::Allow => &mut self.allowed,
            Decision::Deny => &mut self.denied,
            Decision::Escalate => &mut self.escalated,
        } += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub outcomes: OutcomeCounts,
    pub asks: u64,
    pub decisions: DecisionCounts,
    /// `matrix[old][new]`, indexed allow, deny, escalate.
    pub matrix: [[u64; 3]; 3],
    /// Requests whose refund flips from Deny to Allow, in request order.
    pub flipped_requests: Vec<String>,
}

/// What running every request under `a` and replaying the ledger under `b`
/// must produce.
pub fn oracle(requests: &[RefundRequest], a: &RefundPolicyParams, b: &RefundPolicyParams) -> OracleReport {
    let mut report = OracleReport::default();
    for req in requests {
        report.outcomes.add(classify(req, a));
        for (old, new) in asks(req, a, b) {
            report.asks += 1;
            report.decisions.add(old);
            report.matrix[old.index()][new.index()] += 1;
        }
        if region_ok(req, a) && refund_decision(req, a) == Decision::Deny && refund_decision(req, b) == Decision::Allow {
            report.flipped_requests.push(req.request_id.clone());
        }
    }
    report
}
