//! Decisions and the ledger record they are sealed into.

use crate::canonical::{canonical_deserialize, canonical_serialize, CanonicalError};
use crate::hash::{chain_hash, Hash32};
use crate::intent::{expect_keys, expect_map, expect_str, Intent};
use crate::value::{Value, ValueMap};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Allow,
    Deny,
    Escalate,
}

impl Decision {
    pub const ALL: [Decision; 3] = [Decision::Allow, Decision::Deny, Decision::Escalate];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Allow => "allow",
            Decision::Deny => "deny",
            Decision::Escalate => "escalate",
        }
    }

    /// Position in [`Decision::ALL`].
    pub fn index(self) -> usize {
        match self {
            Decision::Allow => 0,
            Decision::Deny => 1,
            Decision::Escalate => 2,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = CanonicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allow" => Ok(Decision::Allow),
            "deny" => Ok(Decision::Deny),
            "escalate" => Ok(Decision::Escalate),
            other => Err(CanonicalError::Shape(format!("unknown decision {other:?}"))),
        }
    }
}

/// What a ledger record documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecordKind {
    /// A governance decision for one mediated ask.
    #[serde(rename = "decision")]
    Decision,
    /// A human resolution of an escalated intent.
    #[serde(rename = "resolution")]
    Resolution,
    /// Marker appended when an allowed effect failed during realization.
    #[serde(rename = "realization-failed")]
    RealizationFailed,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Decision => "decision",
            RecordKind::Resolution => "resolution",
            RecordKind::RealizationFailed => "realization-failed",
        }
    }
}

impl FromStr for RecordKind {
    type Err = CanonicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decision" => Ok(RecordKind::Decision),
            "resolution" => Ok(RecordKind::Resolution),
            "realization-failed" => Ok(RecordKind::RealizationFailed),
            other => Err(CanonicalError::Shape(format!("unknown record kind {other:?}"))),
        }
    }
}

/// Everything in a record that governance determines; the ledger adds the
/// position, timestamp and chain links when it seals one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordTemplate {
    pub kind: RecordKind,
    pub intent: Intent,
    pub decision: Decision,
    pub applied_rules: Vec<String>,
    pub policy_id: String,
    pub context: ValueMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub seq: u64,
    pub timestamp: i64,
    pub kind: RecordKind,
    pub intent: Intent,
    pub decision: Decision,
    pub applied_rules: Vec<String>,
    pub policy_id: String,
    pub context: ValueMap,
    pub prev_hash: Hash32,
    pub hash: Hash32,
}

const UNSEALED_KEYS: [&str; 9] = [
    "applied_rules",
    "context",
    "decision",
    "intent",
    "kind",
    "policy_id",
    "prev_hash",
    "seq",
    "timestamp",
];

impl DecisionRecord {
    /// Builds the record at position `seq` and computes its chain hash.
    pub fn seal(
        template: RecordTemplate,
        seq: u64,
        timestamp: i64,
        prev_hash: Hash32,
    ) -> Result<Self, CanonicalError> {
        let mut record = DecisionRecord {
            seq,
            timestamp,
            kind: template.kind,
            intent: template.intent,
            decision: template.decision,
            applied_rules: template.applied_rules,
            policy_id: template.policy_id,
            context: template.context,
            prev_hash,
            hash: prev_hash,
        };
        record.hash = chain_hash(&record.unsealed_bytes()?, &prev_hash);
        Ok(record)
    }

    fn unsealed_map(&self) -> ValueMap {
        let mut m = ValueMap::new();
        m.insert(
            "applied_rules".into(),
            Value::List(self.applied_rules.iter().cloned().map(Value::Str).collect()),
        );
        m.insert("context".into(), Value::Map(self.context.clone()));
        m.insert("decision".into(), Value::str(self.decision.as_str()));
        m.insert("intent".into(), self.intent.to_value());
        m.insert("kind".into(), Value::str(self.kind.as_str()));
        m.insert("policy_id".into(), Value::str(self.policy_id.clone()));
        m.insert("prev_hash".into(), Value::str(self.prev_hash.to_hex()));
        m.insert("seq".into(), Value::Int(self.seq as i64));
        m.insert("timestamp".into(), Value::Int(self.timestamp));
        m
    }

    /// Canonical bytes of every field except `hash`: the material that is chained.
    pub fn unsealed_bytes(&self) -> Result<Vec<u8>, CanonicalError> {
        canonical_serialize(&Value::Map(self.unsealed_map()))
    }

    pub fn computed_hash(&self) -> Result<Hash32, CanonicalError> {
        Ok(chain_hash(&self.unsealed_bytes()?, &self.prev_hash))
    }

    pub fn to_value(&self) -> Value {
        let mut m = self.unsealed_map();
        m.insert("hash".into(), Value::str(self.hash.to_hex()));
        Value::Map(m)
    }

    /// One ledger line, without the trailing newline.
    pub fn to_line(&self) -> Result<Vec<u8>, CanonicalError> {
        canonical_serialize(&self.to_value())
    }

    pub fn from_value(v: &Value) -> Result<Self, CanonicalError> {
        let m = expect_map(v, "record")?;
        let mut keys: Vec<&str> = UNSEALED_KEYS.to_vec();
        keys.push("hash");
        expect_keys(m, &keys, "record")?;

        let seq = m["seq"]
            .as_int()
            .filter(|n| *n >= 0)
            .ok_or_else(|| CanonicalError::Shape("record.seq: expected non-negative int".into()))?;
        let timestamp = m["timestamp"]
            .as_int()
            .ok_or_else(|| CanonicalError::Shape("record.timestamp: expected int".into()))?;
        let applied_rules = m["applied_rules"]
            .as_list()
            .ok_or_else(|| CanonicalError::Shape("record.applied_rules: expected list".into()))?
            .iter()
            .map(|r| expect_str(r, "record.applied_rules[]").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let hash_field = |k: &str| -> Result<Hash32, CanonicalError> {
            Hash32::from_hex(expect_str(&m[k], k)?)
                .map_err(|e| CanonicalError::Shape(format!("record.{k}: {e}")))
        };

        Ok(DecisionRecord {
            seq: seq as u64,
            timestamp,
            kind: expect_str(&m["kind"], "record.kind")?.parse()?,
            intent: Intent::from_value(&m["intent"])?,
            decision: expect_str(&m["decision"], "record.decision")?.parse()?,
            applied_rules,
            policy_id: expect_str(&m["policy_id"], "record.policy_id")?.to_owned(),
            context: expect_map(&m["context"], "record.context")?.clone(),
            prev_hash: hash_field("prev_hash")?,
            hash: hash_field("hash")?,
        })
    }

    /// Parses one ledger line. Does not check that the line is canonical or
    /// that the hash is correct; that is the verifier's job.
    pub fn from_line(line: &[u8]) -> Result<Self, CanonicalError> {
        DecisionRecord::from_value(&canonical_deserialize(line)?)
    }
}
