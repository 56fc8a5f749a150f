use crate::field::is_valid_field_path;
use crate::predicate::{Predicate, MAX_PREDICATE_DEPTH, MAX_PREDICATE_NODES};
use idc_core::Decision;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading policy file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule id must be non-empty")]
    EmptyRuleId,
    #[error("duplicate rule id {0:?}")]
    DuplicateRuleId(String),
    #[error("rule {rule:?}: predicate depth {depth} exceeds {MAX_PREDICATE_DEPTH}")]
    TooDeep { rule: String, depth: usize },
    #[error("rule {rule:?}: {count} predicate nodes exceed {MAX_PREDICATE_NODES}")]
    TooLarge { rule: String, count: usize },
    #[error("rule {rule:?}: invalid field path {field:?}")]
    InvalidField { rule: String, field: String },
    #[error("policy_id must be non-empty")]
    EmptyPolicyId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyRule {
    pub id: String,
    /// The decision this rule votes for when its predicate matches.
    pub effect: Decision,
    pub predicate: Predicate,
}

impl PolicyRule {
    pub fn new(id: impl Into<String>, predicate: Predicate, effect: Decision) -> Self {
        PolicyRule { id: id.into(), effect, predicate }
    }
}

/// A finite rule list plus the decision used when no rule matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySet {
    pub policy_id: String,
    #[serde(rename = "default")]
    pub default_decision: Decision,
    pub rules: Vec<PolicyRule>,
}

impl PolicySet {
    pub fn new(
        policy_id: impl Into<String>,
        rules: Vec<PolicyRule>,
        default_decision: Decision,
    ) -> Result<Self, PolicyError> {
        let set = PolicySet { policy_id: policy_id.into(), default_decision, rules };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.policy_id.is_empty() {
            return Err(PolicyError::EmptyPolicyId);
        }
        let mut seen = HashSet::new();
        for rule in &self.rules {
            if rule.id.is_empty() {
                return Err(PolicyError::EmptyRuleId);
            }
            if !seen.insert(rule.id.as_str()) {
                return Err(PolicyError::DuplicateRuleId(rule.id.clone()));
            }
            let depth = rule.predicate.depth();
            if depth > MAX_PREDICATE_DEPTH {
                return Err(PolicyError::TooDeep { rule: rule.id.clone(), depth });
            }
            let count = rule.predicate.node_count();
            if count > MAX_PREDICATE_NODES {
                return Err(PolicyError::TooLarge { rule: rule.id.clone(), count });
            }
            if let Some(bad) = rule.predicate.fields().into_iter().find(|f| !is_valid_field_path(f)) {
                return Err(PolicyError::InvalidField { rule: rule.id.clone(), field: bad.to_owned() });
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, PolicyError> {
        let set: PolicySet = serde_json::from_str(s)?;
        set.validate()?;
        Ok(set)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| PolicyError::Io { path: path.display().to_string(), source })?;
        PolicySet::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy sets always serialize")
    }

    pub fn rule(&self, id: &str) -> Option<&PolicyRule> {
        self.rules.iter().find(|r| r.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::CmpOp;

    const REFUNDS: &str = r#"{
        "policy_id": "refunds-v1",
        "default": "deny",
        "rules": [
            {"id": "limit", "effect": "deny",
             "predicate": {"kind": "numeric_cmp", "field": "params.amount", "op": ">", "bound": 500}},
            {"id": "refunds", "effect": "allow",
             "predicate": {"kind": "string_prefix", "field": "action", "prefix": "refund."}}
        ]
    }"#;

    #[test]
    fn parses_policy_file_shape() {
        let p = PolicySet::from_json_str(REFUNDS).unwrap();
        assert_eq!(p.policy_id, "refunds-v1");
        assert_eq!(p.default_decision, Decision::Deny);
        assert_eq!(
            p.rules[0].predicate,
            Predicate::numeric_cmp("params.amount", CmpOp::Gt, 500)
        );
        let again = PolicySet::from_json_str(&p.to_json_pretty()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn rejects_duplicate_and_empty_ids() {
        let r = PolicyRule::new("a", Predicate::AlwaysTrue, Decision::Allow);
        let dup = PolicySet::new("p", vec![r.clone(), r.clone()], Decision::Deny);
        assert!(matches!(dup, Err(PolicyError::DuplicateRuleId(_))));
        let empty = PolicySet::new("p", vec![PolicyRule::new("", Predicate::AlwaysTrue, Decision::Allow)], Decision::Deny);
        assert!(matches!(empty, Err(PolicyError::EmptyRuleId)));
    }

    #[test]
    fn rejects_depth_and_size_overflow() {
        let mut deep = Predicate::AlwaysTrue;
        for _ in 0..MAX_PREDICATE_DEPTH {
            deep = Predicate::negate(deep);
        }
        let res = PolicySet::new("p", vec![PolicyRule::new("d", deep, Decision::Deny)], Decision::Deny);
        assert!(matches!(res, Err(PolicyError::TooDeep { depth: 33, .. })));

        let wide = Predicate::AnyOf { predicates: vec![Predicate::AlwaysTrue; MAX_PREDICATE_NODES] };
        let res = PolicySet::new("p", vec![PolicyRule::new("w", wide, Decision::Deny)], Decision::Deny);
        assert!(matches!(res, Err(PolicyError::TooLarge { .. })));
    }

    #[test]
    fn rejects_bad_field_paths_and_unknown_keys() {
        let bad = PolicySet::new(
            "p",
            vec![PolicyRule::new("f", Predicate::string_prefix("body", "x"), Decision::Deny)],
            Decision::Deny,
        );
        assert!(matches!(bad, Err(PolicyError::InvalidField { .. })));
        let unknown = REFUNDS.replace("\"default\"", "\"fallback\"");
        assert!(PolicySet::from_json_str(&unknown).is_err());
        let bad_kind = REFUNDS.replace("numeric_cmp", "regex_match");
        assert!(PolicySet::from_json_str(&bad_kind).is_err());
    }
}
