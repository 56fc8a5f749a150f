//! The mediation path: the only code that reaches effect realization.
//!
//! An ask becomes an intent, the intent goes through the capability gate and
//! the policy, the decision is appended to the ledger, and only an appended
//! Allow record can mint the [`Authorization`] that
//! [`EffectRegistry::realize`](crate::effects::EffectRegistry) consumes.

use crate::eval::eval_expr;
use crate::runner::{RunError, RunResult, RunState, Runtime, TraceEntry};
use crate::ticket::{EscalationTicket, ResumeState};
use crate::RunOptions;
use idc_core::{canonical_serialize, sha256, Decision, DecisionRecord, Hash32, Intent, RecordKind, RecordTemplate, Value, ValueMap};
use idc_lang::{AskStep, Expr, OnDeny, ProgramAst, Step};
use idc_ledger::Ledger;
use idc_policy::capability::capabilities_value;
use idc_policy::{govern, CAPABILITIES_KEY};
use std::collections::BTreeSet;
use thiserror::Error;

/// Largest environment snapshot, in canonical bytes, copied into an intent.
pub const DEFAULT_SNAPSHOT_CAP: usize = 64 * 1024;
/// Pseudo rule id of the marker appended when an allowed effect fails.
pub const REALIZATION_FAILED: &str = "realization-failed";
/// Governance-context key carrying the failure on a realization-failed marker.
pub const REALIZATION_ERROR_KEY: &str = "$realization_error";

/// Proof that an Allow record for one specific intent is in the ledger.
/// Deliberately neither `Clone` nor constructible outside this module.
#[derive(Debug)]
pub struct Authorization {
    intent_hash: Hash32,
    record_seq: u64,
}

impl Authorization {
    fn issue(record: &DecisionRecord) -> Option<Authorization> {
        let authorizing_kind = matches!(record.kind, RecordKind::Decision | RecordKind::Resolution);
        (authorizing_kind && record.decision == Decision::Allow)
            .then(|| Authorization { intent_hash: record.intent.digest(), record_seq: record.seq })
    }

    pub fn intent_hash(&self) -> Hash32 {
        self.intent_hash
    }

    pub fn record_seq(&self) -> u64 {
        self.record_seq
    }
}

/// What an ask step produced after mediation.
pub(crate) enum AskOutcome {
    /// Realized, or an error value after a failed realization.
    Value(Value),
    Denied(Value),
    Suspended(Box<EscalationTicket>),
}

/// Resolution records carry this rule id.
pub fn resolution_rule(ticket_id: &str) -> String {
    format!("escalation-resolution:{ticket_id}")
}

pub fn denial_value(record_seq: u64) -> Value {
    Value::map([("denied", Value::Bool(true)), ("record_seq", Value::Int(record_seq as i64))])
}

fn context_fields(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Field(base, key) if matches!(base.as_ref(), Expr::Var(v) if v == "context") => {
            out.insert(key.clone());
        }
        Expr::Lit(_) | Expr::Var(_) => {}
        Expr::Field(base, _) | Expr::Lambda(_, base) => context_fields(base, out),
        Expr::Let(_, a, b) | Expr::BinOp(_, a, b) | Expr::Apply(a, b) => {
            context_fields(a, out);
            context_fields(b, out);
        }
        Expr::If(a, b, c) => {
            context_fields(a, out);
            context_fields(b, out);
            context_fields(c, out);
        }
        Expr::Builtin(_, args) => args.iter().for_each(|a| context_fields(a, out)),
    }
}

/// The environment snapshot recorded in an intent. Environments above `cap`
/// canonical bytes are replaced by their hash plus the fields the ask reads.
pub(crate) fn snapshot(context: ValueMap, ask: &AskStep, cap: usize) -> ValueMap {
    let bytes = canonical_serialize(&Value::Map(context.clone())).unwrap_or_default();
    if !bytes.is_empty() && bytes.len() <= cap {
        return context;
    }
    let mut wanted = BTreeSet::new();
    for e in ask.input_fields.values() {
        context_fields(e, &mut wanted);
        wanted.extend(e.free_vars().into_iter().filter(|v| v != "context"));
    }
    let fields: ValueMap = wanted.into_iter().filter_map(|k| context.get(&k).map(|v| (k, v.clone()))).collect();
    [
        ("$snapshot_hash".to_string(), Value::Str(sha256(&bytes).to_hex())),
        ("$fields".to_string(), Value::Map(fields)),
    ]
    .into()
}

impl Runtime<'_> {
    fn now(&self) -> i64 {
        self.options.clock.now_micros()
    }

    fn append(&mut self, template: RecordTemplate, step: &str) -> Result<DecisionRecord, RunError> {
        let ts = self.now();
        self.ledger
            .append(template, ts)
            .cloned()
            .map_err(|e| RunError::new(Some(step), "ledger", e.to_string()))
    }

    /// Realizes an authorized intent. A failing machine leaves a marker record
    /// behind and hands the program an error value.
    fn realize_allowed(&mut self, record: &DecisionRecord, step: &str) -> Result<Value, RunError> {
        let auth = Authorization::issue(record).expect("caller passes an Allow record");
        match self.effects.realize(&record.intent, auth) {
            Ok(v) => Ok(v),
            Err(e) => {
                let error = Value::map([("kind", Value::str(e.kind())), ("message", Value::Str(e.to_string()))]);
                let mut context = record.context.clone();
                context.insert(REALIZATION_ERROR_KEY.into(), error.clone());
                context.insert("$authorizing_seq".into(), Value::Int(record.seq as i64));
                let marker = RecordTemplate {
                    kind: RecordKind::RealizationFailed,
                    intent: record.intent.clone(),
                    decision: Decision::Allow,
                    applied_rules: vec![REALIZATION_FAILED.into()],
                    policy_id: record.policy_id.clone(),
                    context,
                };
                self.append(marker, step)?;
                Ok(Value::map([("error", error)]))
            }
        }
    }

    /// Evaluates the ask's inputs, governs the intent, records the decision and
    /// acts on it.
    pub(crate) fn mediate_and_realize(
        &mut self,
        program: &ProgramAst,
        step_index: usize,
        ask: &AskStep,
        state: &RunState,
    ) -> Result<(AskOutcome, TraceEntry), RunError> {
        let globals = state.globals();
        let mut params = ValueMap::new();
        for (key, expr) in &ask.input_fields {
            let v = eval_expr(expr, &globals, self.options.step_budget)
                .map_err(|e| RunError::new(Some(&ask.name), e.kind(), format!("input '{key}': {e}")))?;
            params.insert(key.clone(), v);
        }
        let action = self.effects.action_path(&ask.machine).unwrap_or(&ask.machine).to_string();
        let intent_context = snapshot(state.context(), ask, self.options.snapshot_cap);
        let intent = Intent::new(action, ask.machine.clone(), params, intent_context.clone())
            .map_err(|e| RunError::new(Some(&ask.name), "intent", e.to_string()))?;

        let mut governance_context = intent_context;
        if let Some(caps) = self.effective_capabilities() {
            governance_context.insert(CAPABILITIES_KEY.into(), capabilities_value(&caps));
        }
        let outcome = govern(&self.policy, &intent, &governance_context);
        let record = self.append(outcome.template, &ask.name)?;
        let entry = TraceEntry {
            step: ask.name.clone(),
            intent: intent.clone(),
            decision: record.decision,
            record_seq: record.seq,
        };

        let result = match record.decision {
            Decision::Allow => AskOutcome::Value(self.realize_allowed(&record, &ask.name)?),
            Decision::Deny => AskOutcome::Denied(denial_value(record.seq)),
            Decision::Escalate => {
                let ticket = EscalationTicket::new(
                    &record,
                    ResumeState {
                        program_source: idc_lang::unparse(program),
                        step_index,
                        bindings: state.bindings.clone(),
                        initial_context: state.initial_context.clone(),
                        capability_stack: self.capability_stack.iter().map(|s| s.iter().cloned().collect()).collect(),
                        policy: self.policy.clone(),
                    },
                );
                if let Some(dir) = &self.options.ticket_dir {
                    ticket
                        .save(dir)
                        .map_err(|e| RunError::new(Some(&ask.name), "ticket", format!("persisting ticket: {e}")))?;
                }
                AskOutcome::Suspended(Box::new(ticket))
            }
        };
        Ok((result, entry))
    }
}

#[derive(Debug, Error)]
pub enum ResumeError {
    #[error("unknown ticket {0}")]
    UnknownTicket(String),
    #[error("ticket {0} is already resolved")]
    AlreadyResolved(String),
    #[error("an escalation resolves to allow or deny, not {0}")]
    InvalidDecision(Decision),
    #[error("ticket resume state is unusable: {0}")]
    Corrupt(String),
}

impl ResumeError {
    pub fn kind(&self) -> &'static str {
        match self {
            ResumeError::UnknownTicket(_) => "unknown-ticket",
            ResumeError::AlreadyResolved(_) => "already-resolved",
            ResumeError::InvalidDecision(_) => "invalid-decision",
            ResumeError::Corrupt(_) => "corrupt-ticket",
        }
    }
}

/// Whether the ledger already holds a resolution for `ticket_id`.
pub fn is_resolved(ledger: &Ledger, ticket_id: &str) -> bool {
    let tag = resolution_rule(ticket_id);
    ledger
        .records()
        .iter()
        .any(|r| r.kind == RecordKind::Resolution && r.applied_rules.contains(&tag))
}

/// Resolves an escalation with a human decision and continues the suspended
/// run. Only the program that suspended is resumed.
pub fn resume(
    ticket: &EscalationTicket,
    human_decision: Decision,
    ledger: &mut Ledger,
    effects: &crate::effects::EffectRegistry,
    options: RunOptions,
) -> Result<RunResult, ResumeError> {
    let unknown = || ResumeError::UnknownTicket(ticket.ticket_id.clone());
    let seq = usize::try_from(ticket.record_seq).map_err(|_| unknown())?;
    let original = ledger.records().get(seq).cloned().ok_or_else(unknown)?;
    if original.hash != ticket.record_hash
        || original.decision != Decision::Escalate
        || original.kind != RecordKind::Decision
        || original.intent != ticket.intent
        || !original.hash.to_hex().starts_with(&ticket.ticket_id)
    {
        return Err(unknown());
    }
    if is_resolved(ledger, &ticket.ticket_id) {
        return Err(ResumeError::AlreadyResolved(ticket.ticket_id.clone()));
    }
    if human_decision == Decision::Escalate {
        return Err(ResumeError::InvalidDecision(human_decision));
    }
    let state = &ticket.resume_state;
    let program = idc_lang::parse(&state.program_source).map_err(|e| ResumeError::Corrupt(e.to_string()))?;
    let Some(Step::Ask(ask)) = program.steps.get(state.step_index) else {
        return Err(ResumeError::Corrupt("step index does not name an ask step".into()));
    };
    let ask = ask.clone();

    let mut runtime = Runtime::new(state.policy.clone(), ledger, effects, options);
    runtime.capability_stack = state.capability_stack.iter().map(|s| s.iter().cloned().collect()).collect();
    let mut run_state = RunState { initial_context: state.initial_context.clone(), bindings: state.bindings.clone() };

    let resolution = RecordTemplate {
        kind: RecordKind::Resolution,
        intent: original.intent.clone(),
        decision: human_decision,
        applied_rules: vec![resolution_rule(&ticket.ticket_id)],
        policy_id: original.policy_id.clone(),
        context: original.context.clone(),
    };
    let record = match runtime.append(resolution, &ask.name) {
        Ok(r) => r,
        Err(e) => return Ok(RunResult::failed(&run_state, Vec::new(), e)),
    };
    let trace = vec![TraceEntry {
        step: ask.name.clone(),
        intent: record.intent.clone(),
        decision: record.decision,
        record_seq: record.seq,
    }];
    let value = match human_decision {
        Decision::Allow => match runtime.realize_allowed(&record, &ask.name) {
            Ok(v) => v,
            Err(e) => return Ok(RunResult::failed(&run_state, trace, e)),
        },
        _ if ask.on_deny == OnDeny::Continue => denial_value(record.seq),
        _ => return Ok(RunResult::denied(&run_state, trace)),
    };
    run_state.bindings.insert(ask.binding.clone(), value);
    Ok(runtime.execute(&program, state.step_index + 1, run_state, trace))
}
