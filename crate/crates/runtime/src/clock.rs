use std::sync::atomic::{AtomicI64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

/// Source of record timestamps, in microseconds since the Unix epoch.
pub trait Clock: Send + Sync {
    fn now_micros(&self) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_micros(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| i64::try_from(d.as_micros()).unwrap_or(i64::MAX))
    }
}

/// A logical clock: starts at a fixed instant and ticks by one on every read.
/// Makes ledgers byte-reproducible.
#[derive(Debug)]
pub struct LogicalClock(AtomicI64);

impl LogicalClock {
    pub fn starting_at(micros: i64) -> Self {
        LogicalClock(AtomicI64::new(micros))
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        LogicalClock::starting_at(1_700_000_000_000_000)
    }
}

impl Clock for LogicalClock {
    fn now_micros(&self) -> i64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}
