//! Finite structured values.
//!
//! `Value` is the only data shape that crosses the boundary between programs,
//! governance and the ledger. Maps are `BTreeMap<String, _>`, so iteration
//! order is the lexicographic order of the keys' UTF-8 bytes, which is exactly
//! the order the canonical encoding requires.

use std::collections::BTreeMap;
use std::fmt;

/// Upper bound on the number of nodes in any value built from external input.
pub const MAX_VALUE_NODES: usize = 1_000_000;

pub type ValueMap = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Value {
    #[default]
    Unit,
    Bool(bool),
    Int(i64),
    Str(String),
    List(Vec<Value>),
    Map(ValueMap),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    /// Builds a map value from `(key, value)` pairs. Later keys win.
    pub fn map<K, I>(entries: I) -> Self
    where
        K: Into<String>,
        I: IntoIterator<Item = (K, Value)>,
    {
        Value::Map(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::List(_) => "list",
            Value::Map(_) => "map",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&ValueMap> {
        match self {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    /// Looks up `key` when `self` is a map.
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.as_map().and_then(|m| m.get(key))
    }

    /// Total node count, stopping early once `limit` is exceeded.
    ///
    /// Returns `None` if the value has more than `limit` nodes. Iterative so
    /// that deeply nested values cannot exhaust the stack.
    pub fn node_count_within(&self, limit: usize) -> Option<usize> {
        let mut count = 0usize;
        let mut stack = vec![self];
        while let Some(v) = stack.pop() {
            count += 1;
            if count > limit {
                return None;
            }
            match v {
                Value::List(items) => stack.extend(items.iter()),
                Value::Map(m) => stack.extend(m.values()),
                _ => {}
            }
        }
        Some(count)
    }

    pub fn node_count(&self) -> usize {
        self.node_count_within(usize::MAX).unwrap_or(usize::MAX)
    }

    pub fn is_finite(&self) -> bool {
        self.node_count_within(MAX_VALUE_NODES).is_some()
    }
}

/// Structural equality. Total on every finite value.
pub fn value_equals(a: &Value, b: &Value) -> bool {
    a == b
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<Vec<Value>> for Value {
    fn from(items: Vec<Value>) -> Self {
        Value::List(items)
    }
}

impl From<ValueMap> for Value {
    fn from(m: ValueMap) -> Self {
        Value::Map(m)
    }
}

impl fmt::Display for Value {
    /// Renders the canonical encoding; falls back to a marker for oversized values.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match crate::canonical::to_canonical_string(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => f.write_str("<oversized value>"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_examples() {
        assert!(value_equals(&Value::Int(5), &Value::Int(5)));
        let a = Value::map([("a", Value::List(vec![Value::Int(1)]))]);
        let b = Value::map([("a", Value::List(vec![Value::Int(1), Value::Int(2)]))]);
        assert!(!value_equals(&a, &b));
        assert!(!value_equals(&Value::Int(1), &Value::str("1")));
    }

    #[test]
    fn node_count_stops_at_limit() {
        let v = Value::List(vec![Value::Unit; 10]);
        assert_eq!(v.node_count(), 11);
        assert_eq!(v.node_count_within(11), Some(11));
        assert_eq!(v.node_count_within(10), None);
    }

    #[test]
    fn deep_nesting_counts_without_recursion() {
        let mut v = Value::Unit;
        for _ in 0..200_000 {
            v = Value::List(vec![v]);
        }
        assert_eq!(v.node_count(), 200_001);
        // Dropping a deeply nested value recurses; unwind it by hand.
        let mut cur = v;
        while let Value::List(mut items) = cur {
            cur = items.pop().unwrap_or(Value::Unit);
        }
    }
}
