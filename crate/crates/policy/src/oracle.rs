//! A deliberately naive second implementation of the governance interpreter.
//!
//! It shares nothing with [`crate::decide`] beyond the domain types: the
//! intent is flattened into an explicit table of every addressable path,
//! predicates look fields up by linear scan, and votes are tallied before the
//! precedence is applied. Differential tests run both and demand identical
//! outputs.

use crate::decide::GovernanceOutcome;
use crate::policy::PolicySet;
use crate::predicate::{CmpOp, Predicate};
use idc_core::{Decision, Intent, RecordKind, RecordTemplate, Value, ValueMap};
use std::cmp::Ordering;

struct FlatIntent {
    entries: Vec<(Vec<String>, Value)>,
}

impl FlatIntent {
    fn build(intent: &Intent, context: &ValueMap) -> Self {
        let mut entries = vec![
            (vec!["action".to_string()], Value::Str(intent.action().to_string())),
            (vec!["target".to_string()], Value::Str(intent.target().to_string())),
        ];
        flatten(vec!["params".to_string()], &Value::Map(intent.params().clone()), &mut entries);
        flatten(vec!["context".to_string()], &Value::Map(context.clone()), &mut entries);
        FlatIntent { entries }
    }

    fn lookup(&self, path: &str) -> Option<&Value> {
        let wanted: Vec<&str> = path.split('.').collect();
        for (p, v) in &self.entries {
            if p.len() == wanted.len() && p.iter().zip(&wanted).all(|(a, b)| a == b) {
                return Some(v);
            }
        }
        None
    }
}

fn flatten(prefix: Vec<String>, v: &Value, out: &mut Vec<(Vec<String>, Value)>) {
    out.push((prefix.clone(), v.clone()));
    if let Value::Map(m) = v {
        for (k, child) in m {
            let mut p = prefix.clone();
            p.push(k.clone());
            flatten(p, child, out);
        }
    }
}

fn holds(p: &Predicate, flat: &FlatIntent) -> bool {
    match p {
        Predicate::AlwaysTrue => true,
        Predicate::Not { predicate } => !holds(predicate, flat),
        Predicate::AllOf { predicates } => {
            let mut result = true;
            for q in predicates {
                if !holds(q, flat) {
                    result = false;
                }
            }
            result
        }
        Predicate::AnyOf { predicates } => {
            let mut result = false;
            for q in predicates {
                if holds(q, flat) {
                    result = true;
                }
            }
            result
        }
        Predicate::StringPrefix { field, prefix } => match flat.lookup(field) {
            Some(Value::Str(s)) => s.len() >= prefix.len() && &s.as_bytes()[..prefix.len()] == prefix.as_bytes(),
            _ => false,
        },
        Predicate::SetMember { field, allowed } => match flat.lookup(field) {
            Some(Value::Str(s)) => allowed.contains(s),
            _ => false,
        },
        Predicate::NumericCmp { field, op, bound } => match flat.lookup(field) {
            Some(Value::Int(n)) => {
                let ord = n.cmp(bound);
                match op {
                    CmpOp::Lt => ord == Ordering::Less,
                    CmpOp::Le => ord != Ordering::Greater,
                    CmpOp::Eq => ord == Ordering::Equal,
                    CmpOp::Ge => ord != Ordering::Less,
                    CmpOp::Gt => ord == Ordering::Greater,
                    CmpOp::Ne => ord != Ordering::Equal,
                }
            }
            _ => false,
        },
    }
}

pub fn oracle_decide(policy: &PolicySet, intent: &Intent, context: &ValueMap) -> GovernanceOutcome {
    let flat = FlatIntent::build(intent, context);
    let mut matched = Vec::new();
    let (mut allows, mut denies, mut escalates) = (0usize, 0usize, 0usize);
    for rule in &policy.rules {
        if holds(&rule.predicate, &flat) {
            matched.push(rule.id.clone());
            match rule.effect {
                Decision::Allow => allows += 1,
                Decision::Deny => denies += 1,
                Decision::Escalate => escalates += 1,
            }
        }
    }
    let decision = if denies > 0 {
        Decision::Deny
    } else if escalates > 0 {
        Decision::Escalate
    } else if allows > 0 {
        Decision::Allow
    } else {
        policy.default_decision
    };
    GovernanceOutcome {
        decision,
        applied_rules: matched.clone(),
        template: RecordTemplate {
            kind: RecordKind::Decision,
            intent: intent.clone(),
            decision,
            applied_rules: matched,
            policy_id: policy.policy_id.clone(),
            context: context.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyRule;

    fn intent(amount: i64) -> Intent {
        Intent::new(
            "refund.issue",
            "@stdlib/payment/refund",
            [("amount".to_string(), Value::Int(amount))].into(),
            ValueMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn matches_decide_examples() {
        let limit = PolicySet::new(
            "limits",
            vec![PolicyRule::new("r1", Predicate::numeric_cmp("params.amount", CmpOp::Gt, 500), Decision::Deny)],
            Decision::Allow,
        )
        .unwrap();
        let ctx = ValueMap::new();
        assert_eq!(oracle_decide(&limit, &intent(600), &ctx), crate::decide(&limit, &intent(600), &ctx));

        let empty = PolicySet::new("empty", vec![], Decision::Deny).unwrap();
        assert_eq!(oracle_decide(&empty, &intent(1), &ctx), crate::decide(&empty, &intent(1), &ctx));
    }

    #[test]
    fn single_escalate_rule() {
        let p = PolicySet::new(
            "esc",
            vec![PolicyRule::new("human", Predicate::AlwaysTrue, Decision::Escalate)],
            Decision::Allow,
        )
        .unwrap();
        let out = oracle_decide(&p, &intent(1), &ValueMap::new());
        assert_eq!(out.decision, Decision::Escalate);
        assert_eq!(out.applied_rules, vec!["human"]);
    }

    #[test]
    fn dotted_keys_are_not_paths() {
        // A key containing a dot must not be reachable as two segments.
        let i = Intent::new(
            "x",
            "t",
            [("a.b".to_string(), Value::Int(1))].into(),
            ValueMap::new(),
        )
        .unwrap();
        let p = PolicySet::new(
            "p",
            vec![PolicyRule::new("r", Predicate::numeric_cmp("params.a.b", CmpOp::Eq, 1), Decision::Deny)],
            Decision::Allow,
        )
        .unwrap();
        let ctx = ValueMap::new();
        assert_eq!(oracle_decide(&p, &i, &ctx).decision, Decision::Allow);
        assert_eq!(crate::decide(&p, &i, &ctx).decision, Decision::Allow);
    }
}
