//! Field-path resolution against the flat view of an intent.
//!
//! A path is dot-separated and rooted at one of `action`, `target`,
//! `params` or `context`. `params.*` walks the intent's parameters;
//! `context.*` walks the governance context passed to evaluation.

use idc_core::{Intent, Value, ValueMap};

pub const FIELD_ROOTS: [&str; 4] = ["action", "target", "params", "context"];

/// A borrowed view of a resolved field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldRef<'a> {
    Absent,
    Str(&'a str),
    Map(&'a ValueMap),
    Value(&'a Value),
}

impl<'a> FieldRef<'a> {
    pub fn as_str(self) -> Option<&'a str> {
        match self {
            FieldRef::Str(s) => Some(s),
            FieldRef::Value(Value::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn to_value(self) -> Option<Value> {
        match self {
            FieldRef::Absent => None,
            FieldRef::Str(s) => Some(Value::str(s)),
            FieldRef::Map(m) => Some(Value::Map(m.clone())),
            FieldRef::Value(v) => Some(v.clone()),
        }
    }
}

/// Whether `path` is well-formed: a known root, no empty segments, and
/// nothing after `action` or `target`.
pub fn is_valid_field_path(path: &str) -> bool {
    let mut parts = path.split('.');
    let root = parts.next().unwrap_or("");
    if !FIELD_ROOTS.contains(&root) {
        return false;
    }
    let rest: Vec<&str> = parts.collect();
    if rest.iter().any(|s| s.is_empty()) {
        return false;
    }
    !(matches!(root, "action" | "target") && !rest.is_empty())
}

pub(crate) fn resolve_ref<'a>(intent: &'a Intent, context: &'a ValueMap, path: &str) -> FieldRef<'a> {
    let mut parts = path.split('.');
    let root = match parts.next() {
        Some("action") => return leaf(parts, FieldRef::Str(intent.action())),
        Some("target") => return leaf(parts, FieldRef::Str(intent.target())),
        Some("params") => intent.params(),
        Some("context") => context,
        _ => return FieldRef::Absent,
    };
    let Some(first) = parts.next() else {
        return FieldRef::Map(root);
    };
    let Some(mut cur) = root.get(first) else {
        return FieldRef::Absent;
    };
    for key in parts {
        match cur.get(key) {
            Some(next) => cur = next,
            None => return FieldRef::Absent,
        }
    }
    FieldRef::Value(cur)
}

fn leaf<'a, 'p>(mut rest: impl Iterator<Item = &'p str>, found: FieldRef<'a>) -> FieldRef<'a> {
    if rest.next().is_some() {
        FieldRef::Absent
    } else {
        found
    }
}

/// Resolves `field_path` to an owned value, or `None` when absent.
pub fn resolve_field(intent: &Intent, context: &ValueMap, field_path: &str) -> Option<Value> {
    resolve_ref(intent, context, field_path).to_value()
}
