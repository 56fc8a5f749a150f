//! Escalation tickets: the suspended state of a run waiting on a human.

use idc_core::{DecisionRecord, Hash32, Intent, Value, ValueMap};
use idc_policy::PolicySet;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// File extension of persisted tickets.
pub const TICKET_EXTENSION: &str = "idticket";
/// Length of a ticket id in hex digits.
pub const TICKET_ID_LEN: usize = 16;

/// Everything needed to continue a suspended program at its escalated ask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResumeState {
    /// The suspended program, unparsed.
    pub program_source: String,
    /// Index of the escalated ask step.
    pub step_index: usize,
    pub bindings: ValueMap,
    pub initial_context: ValueMap,
    /// Capability frames active at suspension, outermost first.
    pub capability_stack: Vec<Vec<String>>,
    pub policy: PolicySet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscalationTicket {
    /// First 16 hex digits of the escalation record's hash.
    pub ticket_id: String,
    pub record_seq: u64,
    pub record_hash: Hash32,
    pub intent: Intent,
    pub resume_state: ResumeState,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TicketFile {
    ticket_id: String,
    record_seq: u64,
    record_hash: String,
    intent: Value,
    resume_state: ResumeState,
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

impl EscalationTicket {
    pub fn new(record: &DecisionRecord, resume_state: ResumeState) -> Self {
        EscalationTicket {
            ticket_id: record.hash.to_hex()[..TICKET_ID_LEN].to_string(),
            record_seq: record.seq,
            record_hash: record.hash,
            intent: record.intent.clone(),
            resume_state,
        }
    }

    pub fn to_json(&self) -> String {
        let file = TicketFile {
            ticket_id: self.ticket_id.clone(),
            record_seq: self.record_seq,
            record_hash: self.record_hash.to_hex(),
            intent: self.intent.to_value(),
            resume_state: self.resume_state.clone(),
        };
        serde_json::to_string_pretty(&file).expect("tickets serialize")
    }

    pub fn from_json(text: &str) -> io::Result<Self> {
        let file: TicketFile = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        let record_hash = Hash32::from_hex(&file.record_hash).map_err(|e| invalid(e.to_string()))?;
        let intent = Intent::from_value(&file.intent).map_err(|e| invalid(e.to_string()))?;
        if file.ticket_id.len() != TICKET_ID_LEN || !record_hash.to_hex().starts_with(&file.ticket_id) {
            return Err(invalid("ticket id does not match the record hash"));
        }
        Ok(EscalationTicket {
            ticket_id: file.ticket_id,
            record_seq: file.record_seq,
            record_hash,
            intent,
            resume_state: file.resume_state,
        })
    }

    pub fn file_name(&self) -> String {
        format!("{}.{TICKET_EXTENSION}", self.ticket_id)
    }

    /// Writes `<dir>/<ticket_id>.idticket`, refusing to overwrite.
    pub fn save(&self, dir: &Path) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(self.file_name());
        let mut f = fs::OpenOptions::new().write(true).create_new(true).open(&path)?;
        f.write_all(self.to_json().as_bytes())?;
        f.sync_all()?;
        Ok(path)
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        EscalationTicket::from_json(&fs::read_to_string(path)?)
    }

    /// Loads the ticket with `ticket_id` from `dir`.
    pub fn find(dir: &Path, ticket_id: &str) -> io::Result<Self> {
        if ticket_id.len() != TICKET_ID_LEN || !ticket_id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(io::Error::new(io::ErrorKind::NotFound, format!("unknown ticket {ticket_id}")));
        }
        EscalationTicket::load(&dir.join(format!("{ticket_id}.{TICKET_EXTENSION}")))
    }
}
