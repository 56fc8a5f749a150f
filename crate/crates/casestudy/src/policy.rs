//! The refund policies, built from a handful of parameters.

use idc_core::Decision;
use idc_policy::{CmpOp, PolicyRule, PolicySet, Predicate};
use serde::{Deserialize, Serialize};

/// Id of the rule the two case-study policies disagree on.
pub const LIMIT_RULE: &str = "refund-limit";
pub const REGION_RULE: &str = "deny-unauthorized-region";
pub const ESCALATION_RULE: &str = "escalate-large-refund";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefundPolicyParams {
    pub policy_id: String,
    /// Refunds above this many cents are denied, up to the escalation band.
    pub limit_cents: i64,
    /// Refunds above this many cents go to a human.
    pub escalate_above_cents: i64,
    pub allowed_regions: Vec<String>,
}

impl RefundPolicyParams {
    pub fn policy_a() -> Self {
        RefundPolicyParams {
            policy_id: "refunds-limit-500".into(),
            limit_cents: 50_000,
            escalate_above_cents: 500_000,
            allowed_regions: vec!["us".into(), "ca".into(), "eu".into()],
        }
    }

    pub fn policy_b() -> Self {
        RefundPolicyParams { policy_id: "refunds-limit-1000".into(), limit_cents: 100_000, ..Self::policy_a() }
    }

    pub fn to_policy(&self) -> PolicySet {
        let refund = || Predicate::string_prefix("action", "payment.refund");
        let rules = vec![
            PolicyRule::new("allow-crm-read", Predicate::string_prefix("action", "crm.read"), Decision::Allow),
            PolicyRule::new(
                REGION_RULE,
                Predicate::AllOf {
                    predicates: vec![
                        Predicate::string_prefix("action", "crm."),
                        Predicate::negate(Predicate::set_member("params.region", self.allowed_regions.clone())),
                    ],
                },
                Decision::Deny,
            ),
            PolicyRule::new("allow-policy-read", Predicate::string_prefix("action", "kv.get"), Decision::Allow),
            PolicyRule::new("allow-refund", refund(), Decision::Allow),
            PolicyRule::new(
                LIMIT_RULE,
                Predicate::AllOf {
                    predicates: vec![
                        refund(),
                        Predicate::numeric_cmp("params.amount_cents", CmpOp::Gt, self.limit_cents),
                        Predicate::numeric_cmp("params.amount_cents", CmpOp::Le, self.escalate_above_cents),
                    ],
                },
                Decision::Deny,
            ),
            PolicyRule::new(
                ESCALATION_RULE,
                Predicate::AllOf {
                    predicates: vec![
                        refund(),
                        Predicate::numeric_cmp("params.amount_cents", CmpOp::Gt, self.escalate_above_cents),
                    ],
                },
                Decision::Escalate,
            ),
            PolicyRule::new("allow-customer-email", Predicate::string_prefix("action", "email.send"), Decision::Allow),
        ];
        PolicySet::new(self.policy_id.clone(), rules, Decision::Deny).expect("refund policy is well formed")
    }
}
