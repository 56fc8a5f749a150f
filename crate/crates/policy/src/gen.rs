//! Seeded random generators for policies, intents and contexts.
//!
//! The vocabularies are small on purpose so that random predicates actually
//! match random intents often enough to exercise every combination branch.

use crate::policy::{PolicyRule, PolicySet};
use crate::predicate::{CmpOp, Predicate};
use idc_core::{Decision, Intent, Value, ValueMap};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const ACTIONS: &[&str] = &[
    "email.send",
    "email.read",
    "refund.issue",
    "refund.void",
    "payment.refund",
    "file.write",
    "file.read",
    "kv.get",
    "kv.put",
    "http.get",
    "crm.read",
    "admin",
];

const TARGETS: &[&str] = &[
    "@stdlib/email/send",
    "@stdlib/payment/refund",
    "@stdlib/file/write",
    "@stdlib/kv/get",
    "@nope/x",
];

const PREFIXES: &[&str] = &[
    "", "e", "email", "email.", "email.send", "email.send.", "refund.", "refund.issue", "file.", "kv.",
    "http.", "pay", "@stdlib/", "@stdlib/email", "us", "eu-",
];

const STRINGS: &[&str] = &["us", "eu", "eu-west", "ca", "zz", "admin", "agent", "x@y.z", "", "é", "email.send"];

const FIELDS: &[&str] = &[
    "action",
    "target",
    "params",
    "params.amount",
    "params.to",
    "params.region",
    "params.nested",
    "params.nested.level",
    "params.nested.tag",
    "params.missing",
    "context",
    "context.role",
    "context.limit",
    "context.user",
    "context.user.tier",
    "context.user.region",
];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).copied().unwrap_or("")
}

pub fn random_int<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    match rng.random_range(0..10) {
        0 => *[i64::MIN, i64::MAX, 0, -1].choose(rng).unwrap(),
        1..=3 => rng.random_range(-10..10),
        _ => rng.random_range(0..1_500),
    }
}

fn random_leaf<R: Rng + ?Sized>(rng: &mut R) -> Value {
    match rng.random_range(0..10) {
        0 => Value::Unit,
        1 => Value::Bool(rng.random()),
        2..=5 => Value::Int(random_int(rng)),
        _ => Value::str(pick(rng, STRINGS)),
    }
}

pub fn random_value<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> Value {
    if depth == 0 || rng.random_bool(0.7) {
        return random_leaf(rng);
    }
    if rng.random_bool(0.5) {
        let n = rng.random_range(0..4);
        Value::List((0..n).map(|_| random_value(rng, depth - 1)).collect())
    } else {
        Value::Map(random_map(rng, depth - 1, &["level", "tag", "tier", "region", "x"]))
    }
}

fn random_map<R: Rng + ?Sized>(rng: &mut R, depth: usize, keys: &[&str]) -> ValueMap {
    let mut m = ValueMap::new();
    for key in keys {
        if rng.random_bool(0.5) {
            m.insert((*key).to_string(), random_value(rng, depth));
        }
    }
    m
}

pub fn random_intent<R: Rng + ?Sized>(rng: &mut R) -> Intent {
    let params = random_map(rng, 2, &["amount", "to", "region", "nested", "a.b"]);
    let context = random_map(rng, 1, &["role", "limit"]);
    Intent::new(pick(rng, ACTIONS), pick(rng, TARGETS), params, context).expect("generated intent is valid")
}

pub fn random_context<R: Rng + ?Sized>(rng: &mut R) -> ValueMap {
    random_map(rng, 2, &["role", "limit", "user", "level"])
}

pub fn random_predicate<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> Predicate {
    let atomic = depth == 0 || rng.random_bool(0.55);
    if atomic {
        return match rng.random_range(0..10) {
            0 => Predicate::AlwaysTrue,
            1..=3 => Predicate::string_prefix(pick(rng, FIELDS), pick(rng, PREFIXES)),
            4..=6 => {
                let n = rng.random_range(0..5);
                Predicate::set_member(pick(rng, FIELDS), (0..n).map(|_| pick(rng, STRINGS).to_string()).collect::<Vec<_>>())
            }
            _ => Predicate::numeric_cmp(
                pick(rng, FIELDS),
                *CmpOp::ALL.choose(rng).unwrap(),
                random_int(rng),
            ),
        };
    }
    match rng.random_range(0..3) {
        0 => Predicate::AllOf {
            predicates: (0..rng.random_range(0..4)).map(|_| random_predicate(rng, depth - 1)).collect(),
        },
        1 => Predicate::AnyOf {
            predicates: (0..rng.random_range(0..4)).map(|_| random_predicate(rng, depth - 1)).collect(),
        },
        _ => Predicate::negate(random_predicate(rng, depth - 1)),
    }
}

pub fn random_decision<R: Rng + ?Sized>(rng: &mut R) -> Decision {
    *Decision::ALL.choose(rng).unwrap()
}

pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, max_rules: usize) -> PolicySet {
    let n = rng.random_range(0..=max_rules);
    let rules = (0..n)
        .map(|i| PolicyRule::new(format!("rule-{i}"), random_predicate(rng, 4), random_decision(rng)))
        .collect();
    PolicySet::new(format!("fuzz-{}", rng.random::<u32>()), rules, random_decision(rng))
        .expect("generated policy is valid")
}
