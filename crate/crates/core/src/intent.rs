use crate::canonical::{canonical_serialize, CanonicalError};
use crate::hash::{sha256, Hash32};
use crate::value::{Value, ValueMap};

/// A proposed effectful operation, as plain data.
///
/// Intents carry no authority: they can be inspected, compared, serialized
/// and decided upon without being executed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Intent {
    action: String,
    target: String,
    params: ValueMap,
    context: ValueMap,
}

impl Intent {
    /// Fails if `action` or `target` is empty or the payload breaks the
    /// finiteness bounds.
    pub fn new(
        action: impl Into<String>,
        target: impl Into<String>,
        params: ValueMap,
        context: ValueMap,
    ) -> Result<Self, CanonicalError> {
        let intent = Intent {
            action: action.into(),
            target: target.into(),
            params,
            context,
        };
        intent.validate()?;
        Ok(intent)
    }

    fn validate(&self) -> Result<(), CanonicalError> {
        if self.action.is_empty() {
            return Err(CanonicalError::Shape("intent action is empty".into()));
        }
        if self.target.is_empty() {
            return Err(CanonicalError::Shape("intent target is empty".into()));
        }
        crate::canonical::check_bounds(&self.to_value())
    }

    pub fn action(&self) -> &str {
        &self.action
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn params(&self) -> &ValueMap {
        &self.params
    }

    pub fn context(&self) -> &ValueMap {
        &self.context
    }

    pub fn to_value(&self) -> Value {
        Value::map([
            ("action", Value::str(self.action.clone())),
            ("context", Value::Map(self.context.clone())),
            ("params", Value::Map(self.params.clone())),
            ("target", Value::str(self.target.clone())),
        ])
    }

    pub fn from_value(v: &Value) -> Result<Self, CanonicalError> {
        let m = expect_map(v, "intent")?;
        expect_keys(m, &["action", "context", "params", "target"], "intent")?;
        Intent::new(
            expect_str(&m["action"], "intent.action")?,
            expect_str(&m["target"], "intent.target")?,
            expect_map(&m["params"], "intent.params")?.clone(),
            expect_map(&m["context"], "intent.context")?.clone(),
        )
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_serialize(&self.to_value()).expect("intent bounds checked at construction")
    }

    /// SHA-256 of the canonical encoding; identifies the intent in logs.
    pub fn digest(&self) -> Hash32 {
        sha256(&self.canonical_bytes())
    }
}

pub(crate) fn expect_map<'a>(v: &'a Value, what: &str) -> Result<&'a ValueMap, CanonicalError> {
    v.as_map()
        .ok_or_else(|| CanonicalError::Shape(format!("{what}: expected map, found {}", v.type_name())))
}

pub(crate) fn expect_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, CanonicalError> {
    v.as_str()
        .ok_or_else(|| CanonicalError::Shape(format!("{what}: expected string, found {}", v.type_name())))
}

pub(crate) fn expect_keys(m: &ValueMap, keys: &[&str], what: &str) -> Result<(), CanonicalError> {
    if m.len() == keys.len() && keys.iter().all(|k| m.contains_key(*k)) {
        return Ok(());
    }
    let found: Vec<&str> = m.keys().map(String::as_str).collect();
    Err(CanonicalError::Shape(format!(
        "{what}: expected fields {keys:?}, found {found:?}"
    )))
}
