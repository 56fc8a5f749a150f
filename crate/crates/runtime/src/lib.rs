//! Program execution with mediated effects.
//!
//! A program's compute steps are evaluated in a pure interpreter with no access
//! to I/O. Each ask step becomes an [`Intent`](idc_core::Intent) that is gated
//! by the program's capabilities, decided by the policy and appended to the
//! ledger before anything happens. Only an Allow record yields the
//! [`Authorization`] an effect machine needs, so no path reaches an effect
//! without a ledger record in front of it.
//!
//! Authorizations cannot be forged outside this crate:
//!
//! ```compile_fail
//! let auth = idc_runtime::Authorization { intent_hash: idc_core::genesis_hash(), record_seq: 0 };
//! ```
//!
//! and realization is not reachable from outside either:
//!
//! ```compile_fail
//! fn bypass(r: &idc_runtime::EffectRegistry, i: &idc_core::Intent, a: idc_runtime::Authorization) {
//!     let _ = r.realize(i, a);
//! }
//! ```

pub mod clock;
pub mod effects;
pub mod eval;
pub mod gen;
pub mod mediation;
pub mod runner;
pub mod ticket;

pub use clock::{Clock, LogicalClock, SystemClock};
pub use effects::*;
pub use eval::{eval_expr, EvalError, DEFAULT_STEP_BUDGET, MAX_EVAL_DEPTH};
pub use mediation::{is_resolved, resume, Authorization, ResumeError, DEFAULT_SNAPSHOT_CAP, REALIZATION_FAILED};
pub use runner::{run_program, RunError, RunOptions, RunResult, RunStatus, Runtime, TraceEntry};
pub use ticket::{EscalationTicket, ResumeState, TICKET_EXTENSION};
