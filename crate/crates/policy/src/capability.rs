//! Capability gating in front of policy evaluation.
//!
//! A capability is an action-path prefix such as `email.` or `refund.issue`.
//! The runtime records the effective capability set of the running program in
//! the governance context under [`CAPABILITIES_KEY`]; [`govern`] checks it
//! before consulting the policy, so replaying a recorded context reproduces a
//! capability miss exactly.

use crate::decide::{evaluate, GovernanceOutcome, Verdict};
use crate::policy::PolicySet;
use idc_core::{Decision, Intent, Value, ValueMap};
use std::collections::BTreeSet;

/// Governance-context key holding the effective capability list.
pub const CAPABILITIES_KEY: &str = "$capabilities";
/// Pseudo rule id recorded when an action is outside the effective capabilities.
pub const CAPABILITY_MISS: &str = "capability-miss";

pub type CapabilitySet = BTreeSet<String>;

pub fn covers(caps: &CapabilitySet, action: &str) -> bool {
    caps.iter().any(|c| action.starts_with(c.as_str()))
}

/// Set intersection of a capability stack, outermost first. An empty stack
/// imposes no restriction and yields `None`.
pub fn effective(stack: &[CapabilitySet]) -> Option<CapabilitySet> {
    let (first, rest) = stack.split_first()?;
    Some(
        rest.iter()
            .fold(first.clone(), |acc, s| acc.intersection(s).cloned().collect()),
    )
}

pub fn capabilities_value(caps: &CapabilitySet) -> Value {
    Value::List(caps.iter().cloned().map(Value::Str).collect())
}

/// Reads the recorded capability list back out of a governance context.
/// `None` when the context carries no capability gate.
pub fn recorded_capabilities(context: &ValueMap) -> Option<CapabilitySet> {
    let list = context.get(CAPABILITIES_KEY)?.as_list()?;
    Some(list.iter().filter_map(|v| v.as_str().map(str::to_owned)).collect())
}

/// Capability gate followed by policy evaluation.
pub fn govern_verdict(policy: &PolicySet, intent: &Intent, context: &ValueMap) -> Verdict {
    if let Some(caps) = recorded_capabilities(context) {
        if !covers(&caps, intent.action()) {
            return Verdict { decision: Decision::Deny, applied_rules: vec![CAPABILITY_MISS.to_owned()] };
        }
    }
    evaluate(policy, intent, context)
}

pub fn govern(policy: &PolicySet, intent: &Intent, context: &ValueMap) -> GovernanceOutcome {
    let verdict = govern_verdict(policy, intent, context);
    GovernanceOutcome::from_verdict(verdict, &policy.policy_id, intent, context)
}
