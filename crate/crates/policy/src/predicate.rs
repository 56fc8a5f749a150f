//! Decidable predicates over intent data.

use crate::field::{resolve_ref, FieldRef};
use idc_core::{Intent, ValueMap};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Maximum nesting depth of a predicate tree.
pub const MAX_PREDICATE_DEPTH: usize = 32;
/// Maximum number of predicate nodes in one rule.
pub const MAX_PREDICATE_NODES: usize = 1_024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "!=", alias = "≠")]
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt, CmpOp::Ne];

    pub fn apply(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A predicate tree. Atomic predicates on an absent field, or on a field of
/// the wrong type, evaluate to `false`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    StringPrefix { field: String, prefix: String },
    SetMember { field: String, allowed: Vec<String> },
    NumericCmp { field: String, op: CmpOp, bound: i64 },
    AllOf { predicates: Vec<Predicate> },
    AnyOf { predicates: Vec<Predicate> },
    Not { predicate: Box<Predicate> },
    AlwaysTrue,
}

impl Predicate {
    pub fn string_prefix(field: impl Into<String>, prefix: impl Into<String>) -> Self {
        Predicate::StringPrefix { field: field.into(), prefix: prefix.into() }
    }

    pub fn set_member<S: Into<String>>(field: impl Into<String>, allowed: impl IntoIterator<Item = S>) -> Self {
        Predicate::SetMember {
            field: field.into(),
            allowed: allowed.into_iter().map(Into::into).collect(),
        }
    }

    pub fn numeric_cmp(field: impl Into<String>, op: CmpOp, bound: i64) -> Self {
        Predicate::NumericCmp { field: field.into(), op, bound }
    }

    pub fn negate(p: Predicate) -> Self {
        Predicate::Not { predicate: Box::new(p) }
    }

    /// Depth of the tree; an atomic predicate has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Predicate::AllOf { predicates } | Predicate::AnyOf { predicates } => {
                1 + predicates.iter().map(Predicate::depth).max().unwrap_or(0)
            }
            Predicate::Not { predicate } => 1 + predicate.depth(),
            _ => 1,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Predicate::AllOf { predicates } | Predicate::AnyOf { predicates } => {
                1 + predicates.iter().map(Predicate::node_count).sum::<usize>()
            }
            Predicate::Not { predicate } => 1 + predicate.node_count(),
            _ => 1,
        }
    }

    /// Field paths referenced by atomic predicates, in tree order.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Predicate::StringPrefix { field, .. }
            | Predicate::SetMember { field, .. }
            | Predicate::NumericCmp { field, .. } => out.push(field),
            Predicate::AllOf { predicates } | Predicate::AnyOf { predicates } => {
                predicates.iter().for_each(|p| p.collect_fields(out))
            }
            Predicate::Not { predicate } => predicate.collect_fields(out),
            Predicate::AlwaysTrue => {}
        }
    }
}

/// Evaluates `p` against an intent and governance context. Total and pure.
pub fn evaluate_predicate(p: &Predicate, intent: &Intent, context: &ValueMap) -> bool {
    match p {
        Predicate::StringPrefix { field, prefix } => {
            matches!(resolve_ref(intent, context, field).as_str(), Some(s) if s.starts_with(prefix.as_str()))
        }
        Predicate::SetMember { field, allowed } => match resolve_ref(intent, context, field).as_str() {
            Some(s) => allowed.iter().any(|a| a == s),
            None => false,
        },
        Predicate::NumericCmp { field, op, bound } => match resolve_ref(intent, context, field) {
            FieldRef::Value(v) => v.as_int().is_some_and(|n| op.apply(n, *bound)),
            _ => false,
        },
        Predicate::AllOf { predicates } => predicates.iter().all(|q| evaluate_predicate(q, intent, context)),
        Predicate::AnyOf { predicates } => predicates.iter().any(|q| evaluate_predicate(q, intent, context)),
        Predicate::Not { predicate } => !evaluate_predicate(predicate, intent, context),
        Predicate::AlwaysTrue => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use idc_core::Value;

    fn intent(action: &str, params: &[(&str, Value)]) -> Intent {
        Intent::new(
            action,
            "@stdlib/test",
            params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            ValueMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn prefix_on_action() {
        let p = Predicate::string_prefix("action", "email.");
        assert!(evaluate_predicate(&p, &intent("email.send", &[]), &ValueMap::new()));
        assert!(!evaluate_predicate(&p, &intent("refund.issue", &[]), &ValueMap::new()));
    }

    #[test]
    fn numeric_on_present_and_absent_field() {
        let p = Predicate::numeric_cmp("params.amount", CmpOp::Gt, 500);
        let ctx = ValueMap::new();
        assert!(evaluate_predicate(&p, &intent("refund.issue", &[("amount", Value::Int(600))]), &ctx));
        assert!(!evaluate_predicate(&p, &intent("refund.issue", &[("amount", Value::Int(500))]), &ctx));
        assert!(!evaluate_predicate(&p, &intent("refund.issue", &[]), &ctx));
    }

    #[test]
    fn type_mismatch_is_false() {
        let ctx = ValueMap::new();
        let i = intent("x", &[("amount", Value::str("600"))]);
        assert!(!evaluate_predicate(&Predicate::numeric_cmp("params.amount", CmpOp::Gt, 1), &i, &ctx));
        let j = intent("x", &[("region", Value::Int(3))]);
        assert!(!evaluate_predicate(&Predicate::set_member("params.region", ["3"]), &j, &ctx));
        assert!(!evaluate_predicate(&Predicate::string_prefix("params.region", ""), &j, &ctx));
    }

    #[test]
    fn negation_of_absent_is_true() {
        let p = Predicate::negate(Predicate::set_member("params.region", ["us"]));
        assert!(evaluate_predicate(&p, &intent("x", &[]), &ValueMap::new()));
    }

    #[test]
    fn context_fields_resolve_against_governance_context() {
        let ctx: ValueMap = [("user".to_string(), Value::map([("role", Value::str("admin"))]))].into();
        let p = Predicate::set_member("context.user.role", ["admin"]);
        assert!(evaluate_predicate(&p, &intent("x", &[]), &ctx));
    }

    #[test]
    fn json_shape() {
        let p: Predicate = serde_json::from_str(
            r#"{"kind":"all_of","predicates":[
                {"kind":"string_prefix","field":"action","prefix":"refund."},
                {"kind":"numeric_cmp","field":"params.amount","op":">","bound":500},
                {"kind":"not","predicate":{"kind":"always_true"}}]}"#,
        )
        .unwrap();
        assert_eq!(p.depth(), 3);
        assert_eq!(p.node_count(), 5);
        let unknown = serde_json::from_str::<Predicate>(r#"{"kind":"regex","field":"action","pattern":"x"}"#);
        assert!(unknown.is_err());
        let extra =
            serde_json::from_str::<Predicate>(r#"{"kind":"string_prefix","field":"action","prefix":"","x":1}"#);
        assert!(extra.is_err());
    }

    #[test]
    fn unicode_op_aliases() {
        let op: CmpOp = serde_json::from_str("\"≤\"").unwrap();
        assert_eq!(op, CmpOp::Le);
    }
}
