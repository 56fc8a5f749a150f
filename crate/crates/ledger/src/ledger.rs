use crate::verify::{parse_canonical_line, split_lines, verify_bytes, VerificationReport};
use idc_core::{genesis_hash, CanonicalError, DecisionRecord, Hash32, RecordTemplate};
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger I/O: {0}")]
    Io(#[from] io::Error),
    #[error("record encoding: {0}")]
    Encoding(#[from] CanonicalError),
    #[error("malformed ledger line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("ledger failed verification: {0}")]
    Tampered(VerificationReport),
    #[error("ledger is unusable after an earlier write failure")]
    Poisoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// Flush and sync to stable storage after every append.
    #[default]
    Durable,
    /// Buffer writes; flush when the ledger is closed or dropped.
    Fast,
}

impl Durability {
    pub fn as_str(self) -> &'static str {
        match self {
            Durability::Durable => "durable",
            Durability::Fast => "fast",
        }
    }
}

impl std::str::FromStr for Durability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "durable" => Ok(Durability::Durable),
            "fast" => Ok(Durability::Fast),
            other => Err(format!("unknown durability mode {other:?} (expected durable|fast)")),
        }
    }
}

/// Destination for sealed ledger lines. Each call receives one complete line
/// including its trailing newline.
pub trait LedgerSink: Send {
    fn write_line(&mut self, line: &[u8]) -> io::Result<()>;
    fn flush(&mut self) -> io::Result<()>;
}

struct FileSink {
    writer: BufWriter<File>,
    durability: Durability,
}

impl LedgerSink for FileSink {
    fn write_line(&mut self, line: &[u8]) -> io::Result<()> {
        self.writer.write_all(line)?;
        if self.durability == Durability::Durable {
            self.writer.flush()?;
            self.writer.get_ref().sync_data()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()?;
        self.writer.get_ref().sync_data()
    }
}

enum Backing {
    Memory(Vec<u8>),
    File { path: PathBuf, sink: FileSink },
    Sink(Box<dyn LedgerSink>),
}

/// The append-only decision ledger.
///
/// Records are kept in memory as well as in the backing store, so a running
/// ledger can answer lookups without re-reading its file. There is no way to
/// modify or remove a record once appended.
pub struct Ledger {
    records: Vec<DecisionRecord>,
    head: Hash32,
    backing: Backing,
    poisoned: bool,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("len", &self.records.len())
            .field("head", &self.head)
            .field("path", &self.path())
            .finish()
    }
}

impl Ledger {
    pub fn in_memory() -> Self {
        Ledger { records: Vec::new(), head: genesis_hash(), backing: Backing::Memory(Vec::new()), poisoned: false }
    }

    /// A ledger writing through a caller-supplied sink, starting empty.
    pub fn with_sink(sink: Box<dyn LedgerSink>) -> Self {
        Ledger { records: Vec::new(), head: genesis_hash(), backing: Backing::Sink(sink), poisoned: false }
    }

    /// Creates a new ledger file, failing if one already exists.
    pub fn create(path: impl AsRef<Path>, durability: Durability) -> Result<Self, LedgerError> {
        let path = path.as_ref();
        let file = OpenOptions::new().write(true).create_new(true).open(path)?;
        Ok(Ledger {
            records: Vec::new(),
            head: genesis_hash(),
            backing: Backing::File {
                path: path.to_path_buf(),
                sink: FileSink { writer: BufWriter::new(file), durability },
            },
            poisoned: false,
        })
    }

    /// Opens an existing ledger file for further appends after verifying it.
    pub fn open(path: impl AsRef<Path>, durability: Durability) -> Result<Self, LedgerError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        let report = verify_bytes(&bytes);
        if !report.ok {
            return Err(LedgerError::Tampered(report));
        }
        let records = parse_all(&bytes)?;
        let head = records.last().map_or_else(genesis_hash, |r| r.hash);
        let mut file = OpenOptions::new().append(true).open(path)?;
        if !bytes.is_empty() && !bytes.ends_with(b"\n") {
            file.write_all(b"\n")?;
        }
        Ok(Ledger {
            records,
            head,
            backing: Backing::File {
                path: path.to_path_buf(),
                sink: FileSink { writer: BufWriter::new(file), durability },
            },
            poisoned: false,
        })
    }

    pub fn open_or_create(path: impl AsRef<Path>, durability: Durability) -> Result<Self, LedgerError> {
        let path = path.as_ref();
        if path.exists() {
            Ledger::open(path, durability)
        } else {
            Ledger::create(path, durability)
        }
    }

    /// Seals `template` as the next record and persists it.
    ///
    /// On a write failure nothing is added and the ledger refuses all later
    /// appends: a partially written line cannot be taken back.
    pub fn append(&mut self, template: RecordTemplate, timestamp: i64) -> Result<&DecisionRecord, LedgerError> {
        if self.poisoned {
            return Err(LedgerError::Poisoned);
        }
        let record = DecisionRecord::seal(template, self.records.len() as u64, timestamp, self.head)?;
        let mut line = record.to_line()?;
        line.push(b'\n');
        let written = match &mut self.backing {
            Backing::Memory(bytes) => {
                bytes.extend_from_slice(&line);
                Ok(())
            }
            Backing::File { sink, .. } => sink.write_line(&line),
            Backing::Sink(sink) => sink.write_line(&line),
        };
        if let Err(e) = written {
            self.poisoned = true;
            return Err(LedgerError::Io(e));
        }
        self.head = record.hash;
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn records(&self) -> &[DecisionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Hash of the last record, or the genesis hash when empty.
    pub fn head_hash(&self) -> Hash32 {
        self.head
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.backing {
            Backing::File { path, .. } => Some(path),
            _ => None,
        }
    }

    /// The serialized ledger for memory-backed ledgers.
    pub fn memory_bytes(&self) -> Option<&[u8]> {
        match &self.backing {
            Backing::Memory(bytes) => Some(bytes),
            _ => None,
        }
    }

    pub fn flush(&mut self) -> Result<(), LedgerError> {
        match &mut self.backing {
            Backing::Memory(_) => Ok(()),
            Backing::File { sink, .. } => Ok(sink.flush()?),
            Backing::Sink(sink) => Ok(sink.flush()?),
        }
    }

    pub fn close(mut self) -> Result<(), LedgerError> {
        self.flush()
    }
}

impl Drop for Ledger {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

fn parse_all(bytes: &[u8]) -> Result<Vec<DecisionRecord>, LedgerError> {
    split_lines(bytes)
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            parse_canonical_line(line).map_err(|message| LedgerError::MalformedLine { line: i + 1, message })
        })
        .collect()
}

/// Reads records in sequence order. With `verify`, the chain must check out
/// first; without it, lines only have to parse.
pub fn read_stream(bytes: &[u8], verify: bool) -> Result<Vec<DecisionRecord>, LedgerError> {
    if verify {
        let report = verify_bytes(bytes);
        if !report.ok {
            return Err(LedgerError::Tampered(report));
        }
    }
    parse_all(bytes)
}

pub fn read_stream_file(path: impl AsRef<Path>, verify: bool) -> Result<Vec<DecisionRecord>, LedgerError> {
    read_stream(&std::fs::read(path)?, verify)
}
