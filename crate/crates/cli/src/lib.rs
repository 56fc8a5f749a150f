//! The `idc` command line: run programs, verify ledgers, simulate policies,
//! resolve escalations, benchmark governance and run the refund case study.
//!
//! Exit codes are stable:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success; the program completed |
//! | 1 | error: bad arguments, unreadable input, runtime error, unknown ticket |
//! | 2 | the ledger failed hash-chain verification |
//! | 3 | the program halted on a denial |
//! | 4 | the program is suspended on an escalation |
//! | 5 | replay-check found decisions that do not reproduce |

pub mod bench;

use clap::{Args, Parser, Subcommand};
use idc_casestudy::{crm_machine, run_case_study, CaseStudyConfig, WorkloadSpec, DEFAULT_SEED};
use idc_core::{Decision, ValueMap};
use idc_ledger::{read_stream_file, verify_file, Durability, Ledger, LedgerError};
use idc_policy::PolicySet;
use idc_replay::{replay_check, simulate_verified, ReplayError};
use idc_runtime::{
    install_builtin_machines, load_http_fixtures, resume, EffectRegistry, EscalationTicket, HttpFixtures, RunOptions,
    RunResult, RunStatus, Runtime,
};
use serde_json::json;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TAMPERED: i32 = 2;
pub const EXIT_DENIED: i32 = 3;
pub const EXIT_SUSPENDED: i32 = 4;
pub const EXIT_DIVERGED: i32 = 5;

/// Overrides `--sandbox` when set.
pub const SANDBOX_ENV: &str = "IDC_SANDBOX";
const DEFAULT_SANDBOX: &str = "sandbox";

#[derive(Debug, Parser)]
#[command(name = "idc", version, about = "Intent-governed program runtime")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a program under a policy, recording every ask in the ledger.
    Run(RunArgs),
    /// Check a ledger's hash chain.
    Verify {
        ledger: PathBuf,
    },
    /// Re-decide a ledger's intents under another policy.
    Simulate {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Simulate even if the ledger fails verification.
        #[arg(long)]
        force: bool,
    },
    /// Resolve an escalation ticket and resume the suspended run.
    Approve(ApproveArgs),
    /// Measure governance latency.
    Bench(BenchArgs),
    /// Re-decide a ledger under its own policy and require zero flips.
    ReplayCheck {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        policy: PathBuf,
    },
    /// Run the refund-agent case study and check it against its oracle.
    CaseStudy {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sandbox: Option<PathBuf>,
        /// Keep the policy-A ledger in this (new) file.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct EffectArgs {
    /// Ledger file; created if missing.
    #[arg(long)]
    ledger: PathBuf,
    /// Root of the effect sandbox.
    #[arg(long)]
    sandbox: Option<PathBuf>,
    /// JSON map of URL to canned HTTP response.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Escalation ticket directory [default: `tickets` beside the ledger].
    #[arg(long)]
    tickets: Option<PathBuf>,
    #[arg(long, default_value = "durable")]
    durability: Durability,
    /// Only register machines whose action starts with one of these prefixes.
    #[arg(long = "allow-namespace")]
    allow_namespace: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    program: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    /// Initial context: a JSON object, inline or as a file path.
    #[arg(long)]
    context: Option<String>,
    #[command(flatten)]
    effects: EffectArgs,
}

#[derive(Debug, Args)]
#[group(id = "verdict", required = true, multiple = false, args = ["allow", "deny"])]
struct ApproveArgs {
    ticket: String,
    #[arg(long)]
    allow: bool,
    #[arg(long)]
    deny: bool,
    #[command(flatten)]
    effects: EffectArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    rules: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    warmup: usize,
    #[arg(long, default_value = "durable")]
    durability: Durability,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the benchmark's ledger files [default: a fresh temporary directory].
    #[arg(long)]
    scratch: Option<PathBuf>,
}

/// A failed command: its exit code and the message for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn fail(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_ERROR, message: message.into() }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    fail(format!("{}: {e}", path.display()))
}

fn ledger_fail(path: &Path, e: LedgerError) -> Failure {
    match e {
        LedgerError::Tampered(report) => Failure { code: EXIT_TAMPERED, message: format!("{}: {report}", path.display()) },
        e => io_fail(path, e),
    }
}

struct Io<'a> {
    json: bool,
    out: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, text: &str, value: serde_json::Value) -> io::Result<()> {
        if self.json {
            writeln!(self.out, "{}", serde_json::to_string_pretty(&value).expect("json values serialize"))
        } else {
            write!(self.out, "{text}")
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
    };
    let mut io = Io { json: cli.json, out };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "idc: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, io: &mut Io) -> Result<i32, Failure> {
    match command {
        Command::Run(args) => cmd_run(args, io),
        Command::Verify { ledger } => cmd_verify(&ledger, io),
        Command::Simulate { ledger, policy, out, force } => cmd_simulate(&ledger, &policy, out.as_deref(), force, io),
        Command::Approve(args) => cmd_approve(args, io),
        Command::Bench(args) => cmd_bench(args, io),
        Command::ReplayCheck { ledger, policy } => cmd_replay_check(&ledger, &policy, io),
        Command::CaseStudy { seed, count, out, sandbox, ledger } => {
            cmd_case_study(seed, count, out.as_deref(), sandbox, ledger, io)
        }
    }
    .and_then(|code| io.out.flush().map(|()| code).map_err(|e| fail(format!("writing output: {e}"))))
}

fn sandbox_root(flag: Option<PathBuf>) -> PathBuf {
    match std::env::var_os(SANDBOX_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.unwrap_or_else(|| PathBuf::from(DEFAULT_SANDBOX)),
    }
}

fn ticket_dir(args: &EffectArgs) -> PathBuf {
    args.tickets.clone().unwrap_or_else(|| {
        args.ledger.parent().map_or_else(|| PathBuf::from("tickets"), |p| p.join("tickets"))
    })
}

fn load_policy(path: &Path) -> Result<PolicySet, Failure> {
    PolicySet::from_file(path).map_err(|e| fail(e.to_string()))
}

fn load_context(arg: Option<&str>) -> Result<ValueMap, Failure> {
    let Some(arg) = arg else { return Ok(ValueMap::new()) };
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| fail(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| fail(format!("context: {e}")))
}

fn build_registry(args: &EffectArgs) -> Result<EffectRegistry, Failure> {
    let mut registry = if args.allow_namespace.is_empty() {
        EffectRegistry::new()
    } else {
        EffectRegistry::with_action_namespaces(args.allow_namespace.clone())
    };
    let fixtures = match &args.fixtures {
        Some(path) => load_http_fixtures(path).map_err(fail)?,
        None => HttpFixtures::new(),
    };
    let sandbox = sandbox_root(args.sandbox.clone());
    install_builtin_machines(&mut registry, &sandbox, fixtures).map_err(|e| io_fail(&sandbox, e))?;
    let crm = crm_machine();
    if registry.action_allowed(&crm.action_path) {
        registry.register(crm).map_err(|e| fail(e.to_string()))?;
    }
    Ok(registry)
}

fn effect_options(args: &EffectArgs) -> RunOptions {
    RunOptions { ticket_dir: Some(ticket_dir(args)), ..RunOptions::default() }
}

fn report_run(result: &RunResult, io: &mut Io) -> Result<i32, Failure> {
    let mut text = String::new();
    for t in &result.trace {
        text.push_str(&format!("step {}: {} -> {} (record {})\n", t.step, t.intent.action(), t.decision, t.record_seq));
    }
    text.push_str(&format!("status: {}\n", result.status));
    let ticket = result.suspension.as_ref().map(|t| t.ticket_id.clone());
    if let Some(id) = &ticket {
        text.push_str(&format!("ticket: {id}\n"));
    }
    if let Some(e) = &result.error {
        text.push_str(&format!("error: {e}\n"));
    }
    let trace: Vec<_> = result
        .trace
        .iter()
        .map(|t| json!({"step": t.step, "action": t.intent.action(), "decision": t.decision.as_str(), "record_seq": t.record_seq}))
        .collect();
    let value = json!({
        "status": result.status.as_str(),
        "trace": trace,
        "ticket_id": ticket,
        "error": result.error.as_ref().map(|e| json!({"step": e.step, "kind": e.kind, "message": e.message})),
        "final_env": result.final_env,
    });
    io.emit(&text, value).map_err(|e| fail(format!("writing output: {e}")))?;
    Ok(match result.status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::DeniedHalt => EXIT_DENIED,
        RunStatus::Suspended => EXIT_SUSPENDED,
        RunStatus::RuntimeError => EXIT_ERROR,
    })
}

fn cmd_run(args: RunArgs, io: &mut Io) -> Result<i32, Failure> {
    let source = std::fs::read_to_string(&args.program).map_err(|e| io_fail(&args.program, e))?;
    let program = idc_lang::parse(&source).map_err(|e| io_fail(&args.program, e))?;
    let policy = load_policy(&args.policy)?;
    let context = load_context(args.context.as_deref())?;
    let registry = build_registry(&args.effects)?;
    let path = &args.effects.ledger;
    let mut ledger = Ledger::open_or_create(path, args.effects.durability).map_err(|e| ledger_fail(path, e))?;
    let result = Runtime::new(policy, &mut ledger, &registry, effect_options(&args.effects)).run_program(&program, context);
    ledger.close().map_err(|e| ledger_fail(path, e))?;
    report_run(&result, io)
}

fn cmd_verify(path: &Path, io: &mut Io) -> Result<i32, Failure> {
    let report = verify_file(path).map_err(|e| io_fail(path, e))?;
    let value = serde_json::to_value(&report).expect("reports serialize");
    io.emit(&format!("{report}\n"), value).map_err(|e| fail(e.to_string()))?;
    Ok(if report.ok { EXIT_OK } else { EXIT_TAMPERED })
}

fn cmd_simulate(ledger: &Path, policy: &Path, out: Option<&Path>, force: bool, io: &mut Io) -> Result<i32, Failure> {
    let policy = load_policy(policy)?;
    if !force {
        let report = verify_file(ledger).map_err(|e| io_fail(ledger, e))?;
        if !report.ok {
            return Err(Failure {
                code: EXIT_TAMPERED,
                message: format!("{}: {report}; pass --force to simulate anyway", ledger.display()),
            });
        }
    }
    let records = read_stream_file(ledger, false).map_err(|e| ledger_fail(ledger, e))?;
    let report = simulate_verified(&policy, &records, true).map_err(|e| fail(e.to_string()))?;
    if let Some(out) = out {
        std::fs::write(out, report.to_json()).map_err(|e| io_fail(out, e))?;
    }
    let value = serde_json::to_value(&report).expect("reports serialize");
    io.emit(&report.render_table(), value).map_err(|e| fail(e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_approve(args: ApproveArgs, io: &mut Io) -> Result<i32, Failure> {
    let decision = if args.allow { Decision::Allow } else { Decision::Deny };
    let effects = &args.effects;
    let path = &effects.ledger;
    let mut ledger = Ledger::open(path, effects.durability).map_err(|e| ledger_fail(path, e))?;
    let dir = ticket_dir(effects);
    let ticket = EscalationTicket::find(&dir, &args.ticket).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => fail(format!("unknown ticket {}", args.ticket)),
        _ => fail(format!("ticket {}: {e}", args.ticket)),
    })?;
    let registry = build_registry(effects)?;
    let result = resume(&ticket, decision, &mut ledger, &registry, effect_options(effects))
        .map_err(|e| fail(format!("{}: {e}", e.kind())))?;
    ledger.close().map_err(|e| ledger_fail(path, e))?;
    report_run(&result, io)
}

fn cmd_bench(args: BenchArgs, io: &mut Io) -> Result<i32, Failure> {
    if args.rules.is_empty() {
        return Err(fail("--rules needs at least one rule count"));
    }
    if args.iterations == 0 {
        return Err(fail("--iterations must be positive"));
    }
    let config = bench::BenchConfig {
        rule_counts: args.rules,
        iterations: args.iterations,
        warmup: args.warmup,
        durability: args.durability,
    };
    let (scratch, owned) = match args.scratch {
        Some(dir) => (dir, false),
        None => (std::env::temp_dir().join(format!("idc-bench-{}", std::process::id())), true),
    };
    std::fs::create_dir_all(&scratch).map_err(|e| io_fail(&scratch, e))?;
    for name in ["bench-append.idledger", "bench-total.idledger"] {
        let _ = std::fs::remove_file(scratch.join(name));
    }
    let result = bench::run_bench(&config, &scratch);
    if owned {
        let _ = std::fs::remove_dir_all(&scratch);
    }
    let report = result.map_err(|e| io_fail(&scratch, e))?;
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json()).map_err(|e| io_fail(out, e))?;
    }
    let value = serde_json::to_value(&report).expect("reports serialize");
    io.emit(&report.render_table(), value).map_err(|e| fail(e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_replay_check(ledger: &Path, policy: &Path, io: &mut Io) -> Result<i32, Failure> {
    let policy = load_policy(policy)?;
    let records = read_stream_file(ledger, true).map_err(|e| ledger_fail(ledger, e))?;
    match replay_check(&policy, &records) {
        Ok(report) => {
            let text = format!("OK: {} decisions reproduced, {} records skipped\n", report.total, report.skipped);
            let value = serde_json::to_value(&report).expect("reports serialize");
            io.emit(&text, value).map_err(|e| fail(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Err(ReplayError::Unverified(report)) => {
            Err(Failure { code: EXIT_TAMPERED, message: format!("{}: {report}", ledger.display()) })
        }
        Err(e @ ReplayError::Flipped(_)) => Err(Failure { code: EXIT_DIVERGED, message: e.to_string() }),
        Err(e) => Err(fail(e.to_string())),
    }
}

fn cmd_case_study(
    seed: u64,
    count: usize,
    out: Option<&Path>,
    sandbox: Option<PathBuf>,
    ledger: Option<PathBuf>,
    io: &mut Io,
) -> Result<i32, Failure> {
    let workload = WorkloadSpec { seed, count, ..WorkloadSpec::default() };
    let mut config = CaseStudyConfig::new(workload, sandbox_root(sandbox));
    config.ledger_path = ledger;
    let report = run_case_study(&config).map_err(|e| fail(e.to_string()))?;
    if let Some(out) = out {
        std::fs::write(out, report.to_json()).map_err(|e| io_fail(out, e))?;
    }
    let value = serde_json::to_value(&report).expect("reports serialize");
    io.emit(&report.render(), value).map_err(|e| fail(e.to_string()))?;
    Ok(EXIT_OK)
}
