//! The governance interpreter.
//!
//! Every rule is evaluated; the matching rules vote, and votes combine with a
//! fixed precedence: Deny, then Escalate, then Allow, then the policy
//! default. Evaluation is total and deterministic.

use crate::policy::PolicySet;
use crate::predicate::evaluate_predicate;
use idc_core::{Decision, Intent, RecordKind, RecordTemplate, ValueMap};

/// Decision plus the ids of every rule whose predicate matched, in policy order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    pub applied_rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GovernanceOutcome {
    pub decision: Decision,
    pub applied_rules: Vec<String>,
    /// The record content governance hands to the ledger.
    pub template: RecordTemplate,
}

impl GovernanceOutcome {
    pub fn from_verdict(verdict: Verdict, policy_id: &str, intent: &Intent, context: &ValueMap) -> Self {
        GovernanceOutcome {
            template: RecordTemplate {
                kind: RecordKind::Decision,
                intent: intent.clone(),
                decision: verdict.decision,
                applied_rules: verdict.applied_rules.clone(),
                policy_id: policy_id.to_owned(),
                context: context.clone(),
            },
            decision: verdict.decision,
            applied_rules: verdict.applied_rules,
        }
    }

    pub fn verdict(&self) -> Verdict {
        Verdict { decision: self.decision, applied_rules: self.applied_rules.clone() }
    }
}

/// Combines the votes of matching rules under deny-overrides.
pub fn combine(votes: impl IntoIterator<Item = Decision>, default: Decision) -> Decision {
    let (mut allow, mut escalate) = (false, false);
    for vote in votes {
        match vote {
            Decision::Deny => return Decision::Deny,
            Decision::Escalate => escalate = true,
            Decision::Allow => allow = true,
        }
    }
    if escalate {
        Decision::Escalate
    } else if allow {
        Decision::Allow
    } else {
        default
    }
}

/// Evaluates the policy without building a record template.
pub fn evaluate(policy: &PolicySet, intent: &Intent, context: &ValueMap) -> Verdict {
    let mut applied_rules = Vec::new();
    let mut votes = Vec::new();
    for rule in &policy.rules {
        if evaluate_predicate(&rule.predicate, intent, context) {
            applied_rules.push(rule.id.clone());
            votes.push(rule.effect);
        }
    }
    Verdict { decision: combine(votes, policy.default_decision), applied_rules }
}

/// `G(P, i, c)`: the decision and the record template for one intent.
pub fn decide(policy: &PolicySet, intent: &Intent, context: &ValueMap) -> GovernanceOutcome {
    let verdict = evaluate(policy, intent, context);
    GovernanceOutcome::from_verdict(verdict, &policy.policy_id, intent, context)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyRule;
    use crate::predicate::{CmpOp, Predicate};
    use idc_core::Value;

    fn refund(amount: i64) -> Intent {
        Intent::new(
            "refund.issue",
            "@stdlib/payment/refund",
            [("amount".to_string(), Value::Int(amount))].into(),
            ValueMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn refund_limit_denies() {
        let p = PolicySet::new(
            "limits",
            vec![PolicyRule::new("r1", Predicate::numeric_cmp("params.amount", CmpOp::Gt, 500), Decision::Deny)],
            Decision::Allow,
        )
        .unwrap();
        let out = decide(&p, &refund(600), &ValueMap::new());
        assert_eq!(out.decision, Decision::Deny);
        assert_eq!(out.applied_rules, vec!["r1"]);
        assert_eq!(out.template.policy_id, "limits");
        let ok = decide(&p, &refund(400), &ValueMap::new());
        assert_eq!((ok.decision, ok.applied_rules.len()), (Decision::Allow, 0));
    }

    #[test]
    fn empty_policy_uses_default() {
        let p = PolicySet::new("empty", vec![], Decision::Deny).unwrap();
        let out = decide(&p, &refund(1), &ValueMap::new());
        assert_eq!(out.decision, Decision::Deny);
        assert!(out.applied_rules.is_empty());
    }

    #[test]
    fn deny_overrides_allow() {
        let p = PolicySet::new(
            "both",
            vec![
                PolicyRule::new("allow-all", Predicate::AlwaysTrue, Decision::Allow),
                PolicyRule::new("deny-all", Predicate::AlwaysTrue, Decision::Deny),
            ],
            Decision::Allow,
        )
        .unwrap();
        let out = decide(&p, &refund(1), &ValueMap::new());
        assert_eq!(out.decision, Decision::Deny);
        assert_eq!(out.applied_rules, vec!["allow-all", "deny-all"]);
    }

    #[test]
    fn precedence_table() {
        use Decision::*;
        assert_eq!(combine([], Allow), Allow);
        assert_eq!(combine([Allow, Escalate], Deny), Escalate);
        assert_eq!(combine([Escalate, Deny, Allow], Allow), Deny);
        assert_eq!(combine([Allow], Deny), Allow);
    }
}
