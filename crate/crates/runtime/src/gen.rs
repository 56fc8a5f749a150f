//! Seeded random scenarios for differential and property testing of the
//! mediation path, plus the audit that checks a finished run.

use crate::clock::LogicalClock;
use crate::effects::{EffectRegistry, Invocation, BUILTIN_MACHINES};
use crate::mediation::resume;
use crate::runner::{RunOptions, RunResult, RunStatus, Runtime};
use idc_core::{Decision, DecisionRecord, RecordKind, Value, ValueMap};
use idc_lang::{AskStep, BinOp, ComputeStep, Expr, OnDeny, ProgramAst, Step};
use idc_ledger::Ledger;
use idc_policy::gen::{random_context, random_decision, random_policy};
use idc_policy::PolicySet;
use rand::seq::IndexedRandom;
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Capabilities random programs draw from.
pub const CAPABILITY_POOL: &[&str] = &["email.", "payment.", "kv.", "file.", "http.", "crm.", "email.send", "kv.get"];
/// Registered nowhere, so realizing it always fails.
pub const UNKNOWN_MACHINE: &str = "@nope/x";

#[derive(Debug, Clone)]
pub struct Scenario {
    pub program: ProgramAst,
    pub policy: PolicySet,
    pub context: ValueMap,
    /// Human decisions handed out, in order, to successive escalations.
    pub resolutions: Vec<Decision>,
}

pub fn random_capabilities<R: Rng + ?Sized>(rng: &mut R) -> Vec<String> {
    CAPABILITY_POOL.iter().filter(|_| rng.random_bool(0.45)).map(|c| c.to_string()).collect()
}

fn leaf<R: Rng + ?Sized>(rng: &mut R, bound: &[String]) -> Expr {
    match rng.random_range(0..6) {
        0 if !bound.is_empty() => Expr::var(bound.choose(rng).unwrap().clone()),
        1 => Expr::field(Expr::var("context"), "amount"),
        2 => Expr::string(*["a.txt", "dir/b.txt", "../escape", "x@y.z", "us"].choose(rng).unwrap()),
        _ => Expr::int(rng.random_range(-5..1_500)),
    }
}

fn random_input<R: Rng + ?Sized>(rng: &mut R, machine: &str, bound: &[String]) -> BTreeMap<String, Expr> {
    let names: &[&str] = match machine {
        "@stdlib/email/send" => &["to", "subject", "body"],
        "@stdlib/http/get" => &["url"],
        "@stdlib/file/write" => &["path", "content"],
        "@stdlib/file/read" | "@stdlib/kv/get" => &["path", "key"],
        "@stdlib/kv/put" => &["key", "value"],
        "@stdlib/payment/refund" => &["request_id", "customer_id", "amount_cents"],
        _ => &["amount", "to"],
    };
    let mut fields = BTreeMap::new();
    for n in names {
        if rng.random_bool(0.1) {
            continue;
        }
        let e = match *n {
            "amount_cents" | "amount" | "value" => leaf(rng, bound),
            _ if rng.random_bool(0.8) => Expr::string(*["a.txt", "k1", "k2", "../x", "x@y.z"].choose(rng).unwrap()),
            _ => leaf(rng, bound),
        };
        fields.insert(n.to_string(), e);
    }
    fields
}

/// A program of up to `max_steps` steps mixing computes and asks.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, max_steps: usize) -> ProgramAst {
    let mut bound: Vec<String> = Vec::new();
    let mut steps = Vec::new();
    for i in 0..rng.random_range(0..=max_steps) {
        let name = format!("s{i}");
        if rng.random_bool(0.35) {
            let expr = Expr::binop(
                *[BinOp::Add, BinOp::Sub, BinOp::Mul].choose(rng).unwrap(),
                leaf(rng, &bound),
                Expr::int(rng.random_range(0..50)),
            );
            steps.push(Step::Compute(ComputeStep { name: name.clone(), binding: name.clone(), expr }));
        } else {
            let machine = if rng.random_bool(0.08) {
                UNKNOWN_MACHINE
            } else {
                BUILTIN_MACHINES.choose(rng).unwrap().0
            };
            steps.push(Step::Ask(AskStep {
                name: name.clone(),
                binding: name.clone(),
                machine: machine.to_string(),
                input_fields: random_input(rng, machine, &bound),
                on_deny: if rng.random_bool(0.5) { OnDeny::Continue } else { OnDeny::Halt },
            }));
        }
        bound.push(name);
    }
    ProgramAst { name: "fuzz".into(), capabilities: random_capabilities(rng), steps }
}

pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R) -> Scenario {
    let mut context = random_context(rng);
    context.insert("amount".into(), Value::Int(rng.random_range(-10..2_000)));
    Scenario {
        program: random_program(rng, 6),
        policy: random_policy(rng, 6),
        context,
        resolutions: (0..8).map(|_| random_decision(rng)).filter(|d| *d != Decision::Escalate).collect(),
    }
}

/// Everything a scenario left behind.
#[derive(Debug)]
pub struct ScenarioRun {
    /// The first run followed by one result per resume.
    pub results: Vec<RunResult>,
    pub ledger: Ledger,
    /// Registry invocations made during this scenario only.
    pub invocations: Vec<Invocation>,
}

/// Runs a scenario on a fresh in-memory ledger, resolving escalations with
/// the scenario's human decisions until it stops suspending or runs out.
pub fn run_scenario(scenario: &Scenario, effects: &EffectRegistry) -> ScenarioRun {
    let invocations_before = effects.invocation_count();
    let mut ledger = Ledger::in_memory();
    let options = RunOptions { clock: Arc::new(LogicalClock::default()), ..RunOptions::default() };
    let first = Runtime::new(scenario.policy.clone(), &mut ledger, effects, options.clone())
        .run_program(&scenario.program, scenario.context.clone());
    let mut results = vec![first];
    let mut decisions = scenario.resolutions.iter();
    while let Some(ticket) = results.last().and_then(|r| r.suspension.clone()) {
        let Some(&decision) = decisions.next() else { break };
        let resumed = resume(&ticket, decision, &mut ledger, effects, options.clone()).expect("fresh ticket resumes");
        results.push(resumed);
    }
    let invocations = effects.invocations_since(invocations_before);
    ScenarioRun { results, ledger, invocations }
}

fn authorizes(record: &DecisionRecord) -> bool {
    record.decision == Decision::Allow && matches!(record.kind, RecordKind::Decision | RecordKind::Resolution)
}

/// Cross-checks a finished scenario against the mediation guarantees.
/// Returns one message per violation.
pub fn audit(run: &ScenarioRun) -> Vec<String> {
    let records = run.ledger.records();
    let mut violations = Vec::new();

    // Every invocation is backed by an earlier Allow record for its intent,
    // and no record authorizes twice.
    let mut last_seq: Option<u64> = None;
    for (i, inv) in run.invocations.iter().enumerate() {
        let backing = usize::try_from(inv.authorizing_seq).ok().and_then(|s| records.get(s));
        match backing {
            Some(r) if authorizes(r) && r.intent.digest() == inv.intent_hash => {}
            _ => violations.push(format!("invocation {i} has no Allow record for its intent")),
        }
        if last_seq.is_some_and(|s| s >= inv.authorizing_seq) {
            violations.push(format!("invocation {i} reuses or precedes an earlier authorization"));
        }
        last_seq = Some(inv.authorizing_seq);
    }

    let allows = records.iter().filter(|r| authorizes(r)).count();
    if allows != run.invocations.len() {
        violations.push(format!("{} invocations for {allows} Allow records", run.invocations.len()));
    }

    let resumes = run.results.len() - 1;
    let steps_reached: usize = run.results.iter().map(|r| r.trace.len()).sum::<usize>() - resumes;
    let count = |kind: RecordKind| records.iter().filter(|r| r.kind == kind).count();
    let failures = run.invocations.iter().filter(|i| i.outcome.is_err()).count();
    if count(RecordKind::Decision) != steps_reached {
        violations.push(format!("{} decision records for {steps_reached} asks", count(RecordKind::Decision)));
    }
    if count(RecordKind::Resolution) != resumes {
        violations.push(format!("{} resolution records for {resumes} resumes", count(RecordKind::Resolution)));
    }
    if count(RecordKind::RealizationFailed) != failures {
        violations.push(format!("{} failure markers for {failures} failed realizations", count(RecordKind::RealizationFailed)));
    }
    if records.len() != steps_reached + resumes + failures {
        violations.push(format!("{} records for {} mediated events", records.len(), steps_reached + resumes + failures));
    }

    let trace_seqs: Vec<u64> = run.results.iter().flat_map(|r| r.trace.iter().map(|t| t.record_seq)).collect();
    for seq in trace_seqs {
        if usize::try_from(seq).map_or(true, |s| s >= records.len()) {
            violations.push(format!("trace names missing record {seq}"));
        }
    }
    for r in &run.results {
        if (r.status == RunStatus::Suspended) != r.suspension.is_some() {
            violations.push("suspension and status disagree".into());
        }
    }
    violations
}
