//! Refund-agent case study.
//!
//! A generated workload of refund requests runs through the shipped refund
//! program under policy A. The resulting ledger is then replayed under
//! policy B, which differs only in the refund limit. Every count is checked
//! against a brute-force oracle that classifies requests straight from the
//! policy parameters.

pub mod oracle;
pub mod policy;
pub mod workload;

pub use oracle::{classify, oracle, DecisionCounts, OracleReport, Outcome, OutcomeCounts};
pub use policy::{RefundPolicyParams, ESCALATION_RULE, LIMIT_RULE, REGION_RULE};
pub use workload::{generate_workload, AmountBand, RefundRequest, WorkloadError, WorkloadSpec, DEFAULT_SEED};

use idc_core::{Decision, Value, ValueMap};
use idc_lang::ProgramAst;
use idc_ledger::{verify_records, Durability, Ledger, LedgerError};
use idc_replay::{simulate, SimulationReport};
use idc_runtime::{
    install_builtin_machines, EffectMachine, EffectRegistry, HttpFixtures, LogicalClock, RunOptions, RunStatus,
    Runtime, SetupError, Shape,
};
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

pub const CRM_READ: &str = "@casestudy/crm/read";
/// The refund program, shipped as `programs/refund.idp`.
pub const REFUND_PROGRAM: &str = include_str!("../../../programs/refund.idp");

/// Mock CRM lookup: a deterministic customer record.
pub fn crm_machine() -> EffectMachine {
    EffectMachine::new(CRM_READ, "crm.read", &[("customer_id", Shape::Str), ("region", Shape::Str)], |p| {
        let id = p["customer_id"].as_str().expect("validated");
        Ok(Value::map([
            ("customer_id", Value::str(id)),
            ("email", Value::Str(format!("{id}@customers.example"))),
            ("region", p["region"].clone()),
        ]))
    })
}

/// The builtin machines plus the CRM mock, sandboxed under `sandbox`.
pub fn case_study_registry(sandbox: &std::path::Path) -> Result<EffectRegistry, SetupError> {
    let mut registry = EffectRegistry::new();
    install_builtin_machines(&mut registry, sandbox, HttpFixtures::new())?;
    registry.register(crm_machine())?;
    Ok(registry)
}

pub fn refund_program() -> ProgramAst {
    idc_lang::parse(REFUND_PROGRAM).expect("shipped refund program parses")
}

#[derive(Debug, Clone)]
pub struct CaseStudyConfig {
    pub workload: WorkloadSpec,
    pub policy_a: RefundPolicyParams,
    pub policy_b: RefundPolicyParams,
    pub sandbox: PathBuf,
    /// Ledger file to write; in memory when `None`.
    pub ledger_path: Option<PathBuf>,
}

impl CaseStudyConfig {
    pub fn new(workload: WorkloadSpec, sandbox: PathBuf) -> Self {
        CaseStudyConfig {
            workload,
            policy_a: RefundPolicyParams::policy_a(),
            policy_b: RefundPolicyParams::policy_b(),
            sandbox,
            ledger_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub seed: u64,
    pub requests: u64,
    pub policy_a: String,
    pub policy_b: String,
    pub outcomes: OutcomeCounts,
    /// Asks mediated across all runs.
    pub asks: u64,
    pub records: u64,
    /// Ledger decisions under policy A.
    pub decisions: DecisionCounts,
    pub effects_realized: u64,
    pub simulation: SimulationReport,
    pub deny_to_allow: u64,
    pub flipped_requests: Vec<String>,
    pub escalated_under_b: u64,
    pub oracle: OracleReport,
}

#[derive(Debug, Error)]
pub enum CaseStudyError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("policies must differ only in the limit bound")]
    PoliciesDiffer,
    #[error("request {request}: {message}")]
    Run { request: String, message: String },
    #[error("ledger failed verification after the run")]
    Unverified,
    #[error("oracle disagrees: {}", .0.join("; "))]
    OracleMismatch(Vec<String>),
}

fn outcome_of(status: RunStatus, last_step: Option<&str>) -> Option<Outcome> {
    match (status, last_step) {
        (RunStatus::Completed, _) => Some(Outcome::Refunded),
        (RunStatus::Suspended, _) => Some(Outcome::Escalated),
        (RunStatus::DeniedHalt, Some("customer")) => Some(Outcome::DeniedRegion),
        (RunStatus::DeniedHalt, Some("refund")) => Some(Outcome::DeniedLimit),
        _ => None,
    }
}

fn check<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T, out: &mut Vec<String>) {
    if got != want {
        out.push(format!("{what}: runtime {got:?}, oracle {want:?}"));
    }
}

pub fn run_case_study(config: &CaseStudyConfig) -> Result<CaseReport, CaseStudyError> {
    let (a, b) = (&config.policy_a, &config.policy_b);
    let comparable = RefundPolicyParams { policy_id: a.policy_id.clone(), limit_cents: a.limit_cents, ..b.clone() };
    if comparable != *a {
        return Err(CaseStudyError::PoliciesDiffer);
    }
    let requests = generate_workload(&config.workload)?;
    let registry = case_study_registry(&config.sandbox)?;
    let mut ledger = match &config.ledger_path {
        Some(path) => Ledger::create(path, Durability::Fast)?,
        None => Ledger::in_memory(),
    };
    let program = refund_program();
    let options = RunOptions { clock: Arc::new(LogicalClock::default()), ..RunOptions::default() };

    let mut outcomes = OutcomeCounts::default();
    let mut asks = 0u64;
    {
        let mut runtime = Runtime::new(a.to_policy(), &mut ledger, &registry, options);
        for req in &requests {
            let context: ValueMap = [("request".to_string(), req.to_value())].into();
            let r = runtime.run_program(&program, context);
            asks += r.trace.len() as u64;
            let outcome = outcome_of(r.status, r.trace.last().map(|t| t.step.as_str())).ok_or_else(|| {
                CaseStudyError::Run {
                    request: req.request_id.clone(),
                    message: r.error.map_or_else(|| format!("unexpected status {}", r.status), |e| e.to_string()),
                }
            })?;
            outcomes.add(outcome);
        }
    }
    ledger.flush()?;
    let records = ledger.records();
    if !verify_records(records).ok {
        return Err(CaseStudyError::Unverified);
    }
    let mut decisions = DecisionCounts::default();
    records.iter().for_each(|r| decisions.add(r.decision));

    let simulation = simulate(&b.to_policy(), records);
    let flipped_requests: Vec<String> = simulation
        .flipped_records
        .iter()
        .filter(|f| f.old == Decision::Deny && f.new == Decision::Allow)
        .filter_map(|f| records[f.seq as usize].intent.params().get("request_id")?.as_str().map(str::to_owned))
        .collect();

    let report = CaseReport {
        seed: config.workload.seed,
        requests: requests.len() as u64,
        policy_a: a.policy_id.clone(),
        policy_b: b.policy_id.clone(),
        outcomes,
        asks,
        records: records.len() as u64,
        decisions,
        effects_realized: registry.invocation_count() as u64,
        deny_to_allow: simulation.matrix.get(Decision::Deny, Decision::Allow),
        escalated_under_b: simulation.matrix.column_total(Decision::Escalate),
        flipped_requests,
        simulation,
        oracle: oracle(&requests, a, b),
    };

    let o = &report.oracle;
    let mut mismatches = Vec::new();
    check("outcomes", &report.outcomes, &o.outcomes, &mut mismatches);
    check("asks", report.asks, o.asks, &mut mismatches);
    check("records", report.records, o.asks, &mut mismatches);
    check("decisions", &report.decisions, &o.decisions, &mut mismatches);
    check("effects realized", report.effects_realized, o.decisions.allowed, &mut mismatches);
    for old in Decision::ALL {
        for new in Decision::ALL {
            let what = format!("replay {old} -> {new}");
            check(&what, report.simulation.matrix.get(old, new), o.matrix[old.index()][new.index()], &mut mismatches);
        }
    }
    check("flipped requests", &report.flipped_requests, &o.flipped_requests, &mut mismatches);
    check("deny -> allow", report.deny_to_allow, o.flipped_requests.len() as u64, &mut mismatches);
    check("escalations under b", report.escalated_under_b, o.outcomes.escalated, &mut mismatches);
    if mismatches.is_empty() {
        Ok(report)
    } else {
        Err(CaseStudyError::OracleMismatch(mismatches))
    }
}

impl CaseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render(&self) -> String {
        let o = &self.outcomes;
        format!(
            "case study: {} requests (seed {}), {} asks, {} ledger records\n\
             under {}: {} refunded, {} denied (region), {} denied (limit), {} escalated\n\
             decisions: {} allow, {} deny, {} escalate; {} effects realized\n\
             replay under {}: {} deny -> allow flips, {} escalations, {} flips total\n\
             all counts match the oracle\n",
            self.requests,
            self.seed,
            self.asks,
            self.records,
            self.policy_a,
            o.refunded,
            o.denied_region,
            o.denied_limit,
            o.escalated,
            self.decisions.allowed,
            self.decisions.denied,
            self.decisions.escalated,
            self.effects_realized,
            self.policy_b,
            self.deny_to_allow,
            self.escalated_under_b,
            self.simulation.flips(),
        )
    }
}
