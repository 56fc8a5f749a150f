//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Seeds, sizes and tolerances are pinned
//! below.

use idc_casestudy::{
    generate_workload, run_case_study, CaseStudyConfig, RefundPolicyParams, WorkloadSpec, DEFAULT_SEED,
};
use idc_cli::bench::{policy_row, run_bench, BenchConfig, APPEND_ROW, HASH_ROW};
use idc_core::{Decision, RecordKind, Value, ValueMap};
use idc_lang::{parse, ProgramAst};
use idc_ledger::{verify_bytes, Durability, Ledger};
use idc_policy::gen::{random_context, random_intent, random_policy};
use idc_policy::{decide, govern, oracle_decide, CapabilitySet, PolicySet};
use idc_replay::replay_check;
use idc_runtime::gen::{audit, random_capabilities, random_program, random_scenario, run_scenario, ScenarioRun};
use idc_runtime::{register_builtin_machines, run_program, EffectRegistry, RunOptions, RunResult, RunStatus, Runtime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

const SCENARIO_SEED: u64 = 0xACC1;
const SCENARIO_RUNS: usize = 10_000;
const SCENARIO_TIME_LIMIT: Duration = Duration::from_secs(5 * 60);

const ORACLE_SEED: u64 = 0xACC4;
const ORACLE_TRIPLES: usize = 70_000;
const ORACLE_MAX_RULES: usize = 12;
const DECIDE_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(10 * 60);

const TAMPER_SEED: u64 = 0xACC5;
const TAMPER_RECORDS: usize = 1_000;
const TAMPER_MUTATIONS: usize = 1_000;

const NESTING_SEED: u64 = 0xACC7;
const NESTING_CASES: usize = 1_000;
/// Outer frames above the child; the child adds one more level.
const NESTING_MAX_FRAMES: usize = 4;

const CASE_COUNT: usize = 200;

const BENCH_REPETITIONS: usize = 3;
const BENCH_ITERATIONS: usize = 10_000;
const BENCH_WARMUP: usize = 1_000;
const BENCH_RULES: [usize; 3] = [5, 10, 20];

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn authorizes(kind: RecordKind, decision: Decision) -> bool {
    decision == Decision::Allow && matches!(kind, RecordKind::Decision | RecordKind::Resolution)
}

/// Every randomized scenario of criteria 1, 2, 3 and 6.
struct ScenarioCorpus {
    runs: Vec<(PolicySet, ScenarioRun)>,
    elapsed: Duration,
}

fn scenario_corpus(effects: &EffectRegistry) -> ScenarioCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(SCENARIO_SEED);
    let start = Instant::now();
    let runs = (0..SCENARIO_RUNS)
        .map(|_| {
            let scenario = random_scenario(&mut rng);
            let run = run_scenario(&scenario, effects);
            (scenario.policy, run)
        })
        .collect();
    ScenarioCorpus { runs, elapsed: start.elapsed() }
}

fn soundness(corpus: &ScenarioCorpus) -> Verdict {
    let mut violations = Vec::new();
    let mut invoked = 0;
    for (i, (_, run)) in corpus.runs.iter().enumerate() {
        let records = run.ledger.records();
        // Multiset check: each intent digest is invoked at most as often as
        // the ledger holds authorizing records for it, and each invocation's
        // authorizing record precedes every later one.
        let mut allowed: HashMap<_, usize> = HashMap::new();
        for r in records.iter().filter(|r| authorizes(r.kind, r.decision)) {
            *allowed.entry(r.intent.digest()).or_default() += 1;
        }
        for inv in &run.invocations {
            invoked += 1;
            match allowed.get_mut(&inv.intent_hash) {
                Some(n) if *n > 0 => *n -= 1,
                _ => violations.push(format!("run {i}: invocation of {} without an Allow record", inv.machine)),
            }
            let rec = records.get(inv.authorizing_seq as usize);
            if !rec.is_some_and(|r| authorizes(r.kind, r.decision) && r.intent.digest() == inv.intent_hash) {
                violations.push(format!("run {i}: authorizing record {} does not allow the intent", inv.authorizing_seq));
            }
        }
        violations.extend(audit(run).into_iter().map(|v| format!("run {i}: {v}")));
    }
    if corpus.elapsed > SCENARIO_TIME_LIMIT {
        violations.push(format!("took {:?}, limit {:?}", corpus.elapsed, SCENARIO_TIME_LIMIT));
    }
    match violations.first() {
        None => Ok(format!("{} runs, {invoked} invocations, 0 violations, {:.1}s", corpus.runs.len(), corpus.elapsed.as_secs_f64())),
        Some(v) => Err(format!("{} violations; first: {v}", violations.len())),
    }
}

fn completeness(corpus: &ScenarioCorpus) -> Verdict {
    let mut bad = Vec::new();
    let mut asks_total = 0;
    for (i, (_, run)) in corpus.runs.iter().enumerate() {
        let records = run.ledger.records();
        let asks: usize = run.results.iter().map(|r: &RunResult| r.trace.len()).sum();
        let failed = run.invocations.iter().filter(|inv| inv.outcome.is_err()).count();
        let mediated = records.iter().filter(|r| r.kind != RecordKind::RealizationFailed).count();
        let markers = records.len() - mediated;
        asks_total += asks;
        if mediated != asks || markers != failed {
            bad.push(format!("run {i}: {mediated} records for {asks} asks, {markers} markers for {failed} failures"));
        }
    }
    match bad.first() {
        None => Ok(format!("records == asks mediated in all {} runs ({asks_total} asks)", corpus.runs.len())),
        Some(b) => Err(format!("{} runs off; first: {b}", bad.len())),
    }
}

/// Source with comments and string-literal contents removed.
fn code_only(src: &str) -> String {
    let mut out = String::new();
    for line in src.lines() {
        let (mut in_str, mut escaped, mut prev) = (false, false, ' ');
        for c in line.chars() {
            if in_str {
                match (escaped, c) {
                    (false, '\\') => escaped = true,
                    (false, '"') => {
                        in_str = false;
                        out.push('"');
                    }
                    _ => escaped = false,
                }
                continue;
            }
            if c == '/' && prev == '/' {
                out.pop();
                break;
            }
            in_str = c == '"';
            out.push(c);
            prev = c;
        }
        out.push('\n');
    }
    out
}

fn rust_sources(dir: &Path, out: &mut Vec<(String, String)>) {
    for entry in fs::read_dir(dir).expect("readable source tree") {
        let path = entry.expect("dir entry").path();
        if path.is_dir() {
            rust_sources(&path, out);
        } else if path.extension().is_some_and(|e| e == "rs") {
            let rel = path.strip_prefix(workspace()).unwrap_or(&path).to_string_lossy().replace('\\', "/");
            out.push((rel, fs::read_to_string(&path).expect("readable source")));
        }
    }
}

fn non_bypass(corpus: &ScenarioCorpus) -> Verdict {
    let mut sources = Vec::new();
    rust_sources(&workspace().join("crates"), &mut sources);
    let mut problems = Vec::new();
    let callers: Vec<&str> =
        sources.iter().filter(|(_, s)| code_only(s).contains(".realize(")).map(|(p, _)| p.as_str()).collect();
    if callers != ["crates/runtime/src/mediation.rs"] {
        problems.push(format!("realize called from {callers:?}"));
    }
    let minted: Vec<&str> =
        sources.iter().filter(|(_, s)| code_only(s).contains("Authorization {")).map(|(p, _)| p.as_str()).collect();
    if minted != ["crates/runtime/src/mediation.rs"] {
        problems.push(format!("Authorization constructed in {minted:?}"));
    }
    let registry = sources.iter().find(|(p, _)| p.ends_with("runtime/src/effects/registry.rs")).map(|(_, s)| code_only(s));
    if !registry.is_some_and(|r| r.contains("pub(crate) fn realize(") && !r.contains("pub fn realize(")) {
        problems.push("realize is not crate-private".into());
    }

    let (mut invocations, mut allows) = (0, 0);
    for (i, (_, run)) in corpus.runs.iter().enumerate() {
        let a = run.ledger.records().iter().filter(|r| authorizes(r.kind, r.decision)).count();
        if a != run.invocations.len() {
            problems.push(format!("run {i}: {} invocations for {a} Allow records", run.invocations.len()));
        }
        invocations += run.invocations.len();
        allows += a;
    }
    match problems.first() {
        None => Ok(format!("single realize call site; {invocations} invocations == {allows} Allow records")),
        Some(p) => Err(format!("{} problems; first: {p}", problems.len())),
    }
}

fn rule_set(rules: &[String]) -> BTreeSet<&str> {
    rules.iter().map(String::as_str).collect()
}

fn oracle_agreement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let start = Instant::now();
    let (mut disagreements, mut over_budget, mut slowest) = (Vec::new(), 0, Duration::ZERO);
    let mut seen = [0usize; 3];
    for i in 0..ORACLE_TRIPLES {
        let policy = random_policy(&mut rng, ORACLE_MAX_RULES);
        let intent = random_intent(&mut rng);
        let context = random_context(&mut rng);
        let t = Instant::now();
        let got = decide(&policy, &intent, &context);
        let took = t.elapsed();
        slowest = slowest.max(took);
        if took > DECIDE_BUDGET {
            over_budget += 1;
        }
        let want = oracle_decide(&policy, &intent, &context);
        seen[got.decision.index()] += 1;
        if got.decision != want.decision || rule_set(&got.applied_rules) != rule_set(&want.applied_rules) {
            disagreements.push(i);
        }
    }
    let elapsed = start.elapsed();
    if disagreements.is_empty() && over_budget == 0 && elapsed <= ORACLE_TIME_LIMIT {
        Ok(format!(
            "{ORACLE_TRIPLES} triples, 0 disagreements, slowest decide {slowest:?}, decisions a/d/e {}/{}/{}, {:.1}s",
            seen[0],
            seen[1],
            seen[2],
            elapsed.as_secs_f64()
        ))
    } else {
        Err(format!(
            "{} disagreements (first at {:?}), {over_budget} over the {DECIDE_BUDGET:?} budget, {:.1}s",
            disagreements.len(),
            disagreements.first(),
            elapsed.as_secs_f64()
        ))
    }
}

fn tamper_ledger(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let policy = random_policy(rng, 8);
    let mut ledger = Ledger::in_memory();
    for t in 0..TAMPER_RECORDS {
        let intent = random_intent(rng);
        let context = random_context(rng);
        ledger.append(govern(&policy, &intent, &context).template, t as i64).expect("in-memory append");
    }
    ledger.memory_bytes().expect("in-memory ledger").to_vec()
}

fn ledger_integrity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(TAMPER_SEED);
    let bytes = tamper_ledger(&mut rng);
    if !verify_bytes(&bytes).ok {
        return Err("pristine ledger does not verify".into());
    }
    let line_of: Vec<u64> = {
        let mut seq = 0;
        bytes
            .iter()
            .map(|b| {
                let s = seq;
                seq += u64::from(*b == b'\n');
                s
            })
            .collect()
    };
    let mut missed = Vec::new();
    for _ in 0..TAMPER_MUTATIONS {
        let pos = rng.random_range(0..bytes.len());
        let mut mutated = bytes.clone();
        mutated[pos] ^= rng.random_range(1..=255u8);
        let report = verify_bytes(&mutated);
        match report.first_bad_seq {
            Some(seq) if !report.ok && seq <= line_of[pos] => {}
            other => missed.push(format!("byte {pos} (record {}): reported {other:?}", line_of[pos])),
        }
    }
    match missed.first() {
        None => Ok(format!("{TAMPER_MUTATIONS}/{TAMPER_MUTATIONS} mutations of a {TAMPER_RECORDS}-record ledger detected")),
        Some(m) => Err(format!("{} missed; first: {m}", missed.len())),
    }
}

fn replay_determinism(corpus: &ScenarioCorpus) -> Verdict {
    let mut failures = Vec::new();
    let mut replayed = 0;
    for (i, (policy, run)) in corpus.runs.iter().enumerate() {
        match replay_check(policy, run.ledger.records()) {
            Ok(report) => replayed += report.total,
            Err(e) => failures.push(format!("run {i}: {e}")),
        }
    }
    match failures.first() {
        None => Ok(format!("{} ledgers, {replayed} decisions re-decided, 0 flips", corpus.runs.len())),
        Some(f) => Err(format!("{} ledgers failed; first: {f}", failures.len())),
    }
}

fn nested(rt: &mut Runtime<'_>, frames: &[ProgramAst], child: &ProgramAst) -> (Option<CapabilitySet>, RunResult) {
    match frames.split_first() {
        None => {
            let seen = rt.within_program(child, |rt| rt.effective_capabilities());
            (seen, rt.call_machine_as_subprogram(child, ValueMap::new()))
        }
        Some((outer, rest)) => rt.within_program(outer, |rt| nested(rt, rest, child)),
    }
}

fn composition_narrowing(sandbox: &Path) -> Verdict {
    let effects = register_builtin_machines(&sandbox.join("nesting")).map_err(|e| e.to_string())?;
    let open = PolicySet::new("open", vec![], Decision::Allow).expect("valid policy");
    let mut rng = ChaCha8Rng::seed_from_u64(NESTING_SEED);
    let (mut problems, mut realized, mut deepest) = (Vec::new(), 0, 0);
    for case in 0..NESTING_CASES {
        let depth = rng.random_range(0..=NESTING_MAX_FRAMES);
        deepest = deepest.max(depth + 1);
        let frames: Vec<ProgramAst> = (0..depth)
            .map(|_| ProgramAst { name: "outer".into(), capabilities: random_capabilities(&mut rng), steps: vec![] })
            .collect();
        let child = random_program(&mut rng, 5);
        let mut declared: Vec<Vec<String>> = frames.iter().map(|f| f.capabilities.clone()).collect();
        declared.push(child.capabilities.clone());
        let fold: CapabilitySet = declared
            .iter()
            .map(|d| d.iter().cloned().collect::<CapabilitySet>())
            .reduce(|acc, s| acc.intersection(&s).cloned().collect())
            .unwrap_or_default();

        let before = effects.invocation_count();
        let mut ledger = Ledger::in_memory();
        let mut rt = Runtime::new(open.clone(), &mut ledger, &effects, RunOptions::default());
        let (caps, _) = nested(&mut rt, &frames, &child);
        if caps.as_ref() != Some(&fold) {
            problems.push(format!("case {case}: effective {caps:?}, fold {fold:?}"));
        }
        for inv in effects.invocations_since(before) {
            let action = effects.action_path(&inv.machine).unwrap_or(&inv.machine).to_string();
            let parent_ok = frames.iter().all(|f| f.capabilities.iter().any(|c| action.starts_with(c.as_str())));
            if !parent_ok || !fold.iter().any(|c| action.starts_with(c.as_str())) {
                problems.push(format!("case {case}: child realized {action} outside {declared:?}"));
            }
            realized += 1;
        }
    }
    match problems.first() {
        None => Ok(format!("{NESTING_CASES} cases up to depth {deepest}, {realized} effects realized, 0 escapes")),
        Some(p) => Err(format!("{} problems; first: {p}", problems.len())),
    }
}

fn case_study(sandbox: &Path) -> Verdict {
    let spec = WorkloadSpec { seed: DEFAULT_SEED, count: CASE_COUNT, ..WorkloadSpec::default() };
    let config = CaseStudyConfig::new(spec.clone(), sandbox.join("case-study"));
    let report = run_case_study(&config).map_err(|e| e.to_string())?;
    // Flip set from first principles: authorized region, amount in (limit A, limit B].
    let (a, b) = (RefundPolicyParams::policy_a(), RefundPolicyParams::policy_b());
    let requests = generate_workload(&spec).map_err(|e| e.to_string())?;
    let expected: Vec<String> = requests
        .iter()
        .filter(|r| a.allowed_regions.contains(&r.region) && r.amount_cents > a.limit_cents && r.amount_cents <= b.limit_cents)
        .map(|r| r.request_id.clone())
        .collect();
    if report.flipped_requests != expected {
        return Err(format!("flip set {:?} != expected {:?}", report.flipped_requests, expected));
    }
    if expected.is_empty() || report.outcomes.escalated == 0 || report.outcomes.denied_region == 0 {
        return Err("workload does not exercise every outcome".into());
    }
    let o = &report.outcomes;
    Ok(format!(
        "{} requests: {} refunded, {} denied (region), {} denied (limit), {} escalated; {} records; {} deny->allow flips; all equal the oracle",
        report.requests, o.refunded, o.denied_region, o.denied_limit, o.escalated, report.records, report.deny_to_allow
    ))
}

/// (state, read) -> (write, move, next)
type Rules = Vec<((&'static str, i64), (i64, i64, &'static str))>;

struct Machine {
    name: &'static str,
    start: &'static str,
    rules: Rules,
    tape: Vec<i64>,
}

fn machines() -> Vec<Machine> {
    vec![
        Machine {
            name: "unary increment",
            start: "scan",
            rules: vec![(("scan", 1), (1, 1, "scan")), (("scan", 0), (1, 0, "H"))],
            tape: vec![1, 1, 1],
        },
        Machine {
            name: "parity",
            start: "even",
            rules: vec![
                (("even", 1), (0, 1, "odd")),
                (("odd", 1), (0, 1, "even")),
                (("even", 0), (0, 0, "H")),
                (("odd", 0), (1, 0, "H")),
            ],
            tape: vec![1, 1, 1, 1, 1],
        },
        Machine {
            name: "3-state busy beaver",
            start: "A",
            rules: vec![
                (("A", 0), (1, 1, "B")),
                (("A", 1), (1, 1, "H")),
                (("B", 0), (0, 1, "C")),
                (("B", 1), (1, 1, "B")),
                (("C", 0), (1, -1, "C")),
                (("C", 1), (1, -1, "A")),
            ],
            tape: vec![0],
        },
    ]
}

fn trim(tape: impl IntoIterator<Item = i64>) -> Vec<i64> {
    let mut t: Vec<i64> = tape.into_iter().skip_while(|s| *s == 0).collect();
    while t.last() == Some(&0) {
        t.pop();
    }
    t
}

fn simulate_tm(m: &Machine) -> (Vec<i64>, u64) {
    let rules: HashMap<(&str, i64), (i64, i64, &str)> = m.rules.iter().cloned().collect();
    let mut tape: BTreeMap<i64, i64> = m.tape.iter().enumerate().map(|(i, s)| (i as i64, *s)).collect();
    let (mut pos, mut state, mut steps) = (0i64, m.start, 0u64);
    while state != "H" {
        let read = tape.get(&pos).copied().unwrap_or(0);
        let (write, mv, next) = rules[&(state, read)];
        tape.insert(pos, write);
        pos += mv;
        state = next;
        steps += 1;
    }
    (trim(tape.into_values()), steps)
}

fn tm_context(m: &Machine) -> ValueMap {
    let rules: ValueMap = m
        .rules
        .iter()
        .map(|((q, s), (w, mv, next))| {
            let mv = ["L", "N", "R"][(*mv + 1) as usize];
            let action = Value::map([("write", Value::Int(*w)), ("move", Value::str(mv)), ("next", Value::str(*next))]);
            (format!("{q},{s}"), action)
        })
        .collect();
    let machine = Value::map([
        ("start", Value::str(m.start)),
        ("halt", Value::str("H")),
        ("blank", Value::Int(0)),
        ("rules", Value::Map(rules)),
    ]);
    [
        ("machine".to_string(), machine),
        ("tape".to_string(), Value::List(m.tape.iter().map(|s| Value::Int(*s)).collect())),
        ("fuel".to_string(), Value::Int(10_000)),
    ]
    .into()
}

fn turing(sandbox: &Path) -> Verdict {
    let source = fs::read_to_string(workspace().join("programs/turing.idp")).map_err(|e| e.to_string())?;
    let program = parse(&source).map_err(|e| e.to_string())?;
    let effects = register_builtin_machines(&sandbox.join("turing")).map_err(|e| e.to_string())?;
    let policy = PolicySet::new("none", vec![], Decision::Deny).expect("valid policy");
    let mut summary = Vec::new();
    for m in machines() {
        let expected = simulate_tm(&m);
        let mut ledger = Ledger::in_memory();
        let r = run_program(&program, &policy, tm_context(&m), &mut ledger, &effects);
        if r.status != RunStatus::Completed {
            return Err(format!("{}: {} {:?}", m.name, r.status, r.error));
        }
        let result = r.final_env.get("result").ok_or(format!("{}: no result", m.name))?;
        let tape = result.get("tape").and_then(Value::as_list).ok_or(format!("{}: no tape", m.name))?;
        let got = (
            trim(tape.iter().filter_map(Value::as_int)),
            result.get("steps").and_then(Value::as_int).unwrap_or(-1) as u64,
        );
        if got != expected || result.get("state") != Some(&Value::str("H")) {
            return Err(format!("{}: interpreter {got:?}, simulator {expected:?}", m.name));
        }
        summary.push(format!("{} {} steps", m.name, got.1));
    }
    Ok(summary.join(", "))
}

fn bench_shape(sandbox: &Path) -> Verdict {
    let config = BenchConfig {
        rule_counts: BENCH_RULES.to_vec(),
        iterations: BENCH_ITERATIONS,
        warmup: BENCH_WARMUP,
        durability: Durability::Durable,
    };
    let mut lines = Vec::new();
    let mut broken = Vec::new();
    for rep in 0..BENCH_REPETITIONS {
        let scratch = sandbox.join(format!("bench-{rep}"));
        fs::create_dir_all(&scratch).map_err(|e| e.to_string())?;
        let report = run_bench(&config, &scratch).map_err(|e| e.to_string())?;
        let p50 = |name: &str| report.row(name).map(|r| r.p50).ok_or(format!("missing row {name}"));
        let evals = BENCH_RULES.iter().map(|n| p50(&policy_row(*n))).collect::<Result<Vec<_>, _>>()?;
        let (hash, append) = (p50(HASH_ROW)?, p50(APPEND_ROW)?);
        let eval20 = evals[2];
        if !evals.windows(2).all(|w| w[0] <= w[1]) {
            broken.push(format!("run {rep}: policy eval p50 not monotone {evals:?}"));
        }
        if !(hash <= eval20 && eval20 <= append) {
            broken.push(format!("run {rep}: hash {hash:.2} / eval(20) {eval20:.2} / append {append:.2} out of order"));
        }
        lines.push(format!(
            "eval {:.2}/{:.2}/{:.2} hash {hash:.2} append {append:.2}",
            evals[0], evals[1], evals[2]
        ));
    }
    if broken.is_empty() {
        Ok(format!("p50 us per run: {}", lines.join("; ")))
    } else {
        Err(format!("{}; measured: {}", broken.join("; "), lines.join("; ")))
    }
}

fn main() {
    let sandbox = tempfile::tempdir().expect("temporary sandbox");
    let effects = register_builtin_machines(&sandbox.path().join("scenarios")).expect("builtin machines");
    let corpus = scenario_corpus(&effects);

    let criteria: Vec<Criterion> = vec![
        ("mediation soundness", Box::new(|| soundness(&corpus))),
        ("ledger completeness", Box::new(|| completeness(&corpus))),
        ("non-bypass", Box::new(|| non_bypass(&corpus))),
        ("decide agrees with the oracle", Box::new(oracle_agreement)),
        ("ledger integrity", Box::new(ledger_integrity)),
        ("replay determinism", Box::new(|| replay_determinism(&corpus))),
        ("composition narrowing", Box::new(|| composition_narrowing(sandbox.path()))),
        ("refund case study", Box::new(|| case_study(sandbox.path()))),
        ("turing-completeness witness", Box::new(|| turing(sandbox.path()))),
        ("benchmark shape", Box::new(|| bench_shape(sandbox.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
