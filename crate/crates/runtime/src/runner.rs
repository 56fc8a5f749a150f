//! Step-by-step execution of a parsed program.

use crate::clock::{Clock, SystemClock};
use crate::effects::EffectRegistry;
use crate::eval::{eval_expr, DEFAULT_STEP_BUDGET};
use crate::mediation::{AskOutcome, DEFAULT_SNAPSHOT_CAP};
use crate::ticket::EscalationTicket;
use idc_core::{Decision, Intent, Value, ValueMap};
use idc_lang::{OnDeny, ProgramAst, Step};
use idc_ledger::Ledger;
use idc_policy::capability::effective;
use idc_policy::{CapabilitySet, PolicySet};
use serde::Serialize;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Clone)]
pub struct RunOptions {
    pub clock: Arc<dyn Clock>,
    /// Evaluation budget of each compute step and each ask input.
    pub step_budget: u64,
    /// Environments larger than this many canonical bytes are recorded by hash.
    pub snapshot_cap: usize,
    /// Where escalation tickets are persisted. `None` keeps them in memory only.
    pub ticket_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            clock: Arc::new(SystemClock),
            step_budget: DEFAULT_STEP_BUDGET,
            snapshot_cap: DEFAULT_SNAPSHOT_CAP,
            ticket_dir: None,
        }
    }
}

impl fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunOptions")
            .field("step_budget", &self.step_budget)
            .field("snapshot_cap", &self.snapshot_cap)
            .field("ticket_dir", &self.ticket_dir)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    DeniedHalt,
    Suspended,
    RuntimeError,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::DeniedHalt => "denied_halt",
            RunStatus::Suspended => "suspended",
            RunStatus::RuntimeError => "runtime_error",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One mediated ask: its intent, the recorded decision and the record position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: String,
    pub intent: Intent,
    pub decision: Decision,
    pub record_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunError {
    pub step: Option<String>,
    pub kind: String,
    pub message: String,
}

impl RunError {
    pub fn new(step: Option<&str>, kind: impl Into<String>, message: impl Into<String>) -> Self {
        RunError { step: step.map(str::to_owned), kind: kind.into(), message: message.into() }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.step {
            Some(step) => write!(f, "step {step}: {}: {}", self.kind, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    /// The initial context with every step binding laid over it.
    pub final_env: ValueMap,
    pub trace: Vec<TraceEntry>,
    pub suspension: Option<EscalationTicket>,
    pub error: Option<RunError>,
}

impl RunResult {
    fn finish(state: &RunState, trace: Vec<TraceEntry>, status: RunStatus) -> Self {
        RunResult { status, final_env: state.context(), trace, suspension: None, error: None }
    }

    pub(crate) fn failed(state: &RunState, trace: Vec<TraceEntry>, error: RunError) -> Self {
        RunResult { error: Some(error), ..RunResult::finish(state, trace, RunStatus::RuntimeError) }
    }

    pub(crate) fn denied(state: &RunState, trace: Vec<TraceEntry>) -> Self {
        RunResult::finish(state, trace, RunStatus::DeniedHalt)
    }
}

/// Variables visible to a running program.
#[derive(Debug, Clone)]
pub(crate) struct RunState {
    pub initial_context: ValueMap,
    pub bindings: ValueMap,
}

impl RunState {
    /// The environment: initial context overlaid with step bindings.
    pub fn context(&self) -> ValueMap {
        let mut env = self.initial_context.clone();
        env.extend(self.bindings.iter().map(|(k, v)| (k.clone(), v.clone())));
        env
    }

    /// Names in scope for expressions: bindings plus `context`.
    pub fn globals(&self) -> ValueMap {
        let mut globals = self.bindings.clone();
        globals.insert("context".into(), Value::Map(self.context()));
        globals
    }
}

/// Executes programs against one policy, ledger and effect registry.
///
/// Each program run pushes a capability frame; the effective capabilities are
/// the intersection of every frame on the stack.
pub struct Runtime<'r> {
    pub(crate) policy: PolicySet,
    pub(crate) ledger: &'r mut Ledger,
    pub(crate) effects: &'r EffectRegistry,
    pub(crate) options: RunOptions,
    pub(crate) capability_stack: Vec<CapabilitySet>,
}

impl<'r> Runtime<'r> {
    pub fn new(policy: PolicySet, ledger: &'r mut Ledger, effects: &'r EffectRegistry, options: RunOptions) -> Self {
        Runtime { policy, ledger, effects, options, capability_stack: Vec::new() }
    }

    pub fn policy(&self) -> &PolicySet {
        &self.policy
    }

    pub fn ledger(&self) -> &Ledger {
        self.ledger
    }

    pub fn capability_stack(&self) -> &[CapabilitySet] {
        &self.capability_stack
    }

    /// `None` only outside any program.
    pub fn effective_capabilities(&self) -> Option<CapabilitySet> {
        effective(&self.capability_stack)
    }

    pub fn run_program(&mut self, program: &ProgramAst, initial_context: ValueMap) -> RunResult {
        self.call_machine_as_subprogram(program, initial_context)
    }

    /// Runs `child` under the current capabilities narrowed by its own
    /// declaration. A child can never widen what its caller holds.
    pub fn call_machine_as_subprogram(&mut self, child: &ProgramAst, initial_context: ValueMap) -> RunResult {
        self.within_program(child, |rt| {
            let state = RunState { initial_context, bindings: ValueMap::new() };
            rt.execute(child, 0, state, Vec::new())
        })
    }

    /// Runs `f` with `program`'s capability frame pushed.
    pub fn within_program<T>(&mut self, program: &ProgramAst, f: impl FnOnce(&mut Self) -> T) -> T {
        self.capability_stack.push(program.capabilities.iter().cloned().collect());
        let out = f(self);
        self.capability_stack.pop();
        out
    }

    pub(crate) fn execute(
        &mut self,
        program: &ProgramAst,
        start: usize,
        mut state: RunState,
        mut trace: Vec<TraceEntry>,
    ) -> RunResult {
        for (index, step) in program.steps.iter().enumerate().skip(start) {
            match step {
                Step::Compute(c) => match eval_expr(&c.expr, &state.globals(), self.options.step_budget) {
                    Ok(v) if v.is_finite() => {
                        state.bindings.insert(c.binding.clone(), v);
                    }
                    Ok(_) => {
                        let e = RunError::new(Some(&c.name), "bounds", "result exceeds the value bounds");
                        return RunResult::failed(&state, trace, e);
                    }
                    Err(e) => {
                        let e = RunError::new(Some(&c.name), e.kind(), e.to_string());
                        return RunResult::failed(&state, trace, e);
                    }
                },
                Step::Ask(ask) => {
                    let (outcome, entry) = match self.mediate_and_realize(program, index, ask, &state) {
                        Ok(r) => r,
                        Err(e) => return RunResult::failed(&state, trace, e),
                    };
                    trace.push(entry);
                    match outcome {
                        AskOutcome::Value(v) => {
                            state.bindings.insert(ask.binding.clone(), v);
                        }
                        AskOutcome::Denied(v) if ask.on_deny == OnDeny::Continue => {
                            state.bindings.insert(ask.binding.clone(), v);
                        }
                        AskOutcome::Denied(_) => return RunResult::denied(&state, trace),
                        AskOutcome::Suspended(ticket) => {
                            return RunResult {
                                suspension: Some(*ticket),
                                ..RunResult::finish(&state, trace, RunStatus::Suspended)
                            }
                        }
                    }
                }
            }
        }
        RunResult::finish(&state, trace, RunStatus::Completed)
    }
}

/// Runs `program` with default options.
pub fn run_program(
    program: &ProgramAst,
    policy: &PolicySet,
    initial_context: ValueMap,
    ledger: &mut Ledger,
    effects: &EffectRegistry,
) -> RunResult {
    Runtime::new(policy.clone(), ledger, effects, RunOptions::default()).run_program(program, initial_context)
}
