//! Exit-code and output contract of the `idc` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn programs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn idc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idc"))
        .args(args)
        .current_dir(dir)
        .env_remove("IDC_SANDBOX")
        .output()
        .expect("idc runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(name: &str) -> String {
    programs().join(name).display().to_string()
}

fn refund_context(id: &str, amount: i64, region: &str) -> String {
    format!(
        r#"{{"request":{{"request_id":"{id}","customer_id":"cust-001","amount_cents":{amount},"region":"{region}","reason":"damaged"}}}}"#
    )
}

fn run_refund(dir: &Path, ctx: &str, policy: &str) -> Output {
    idc(
        dir,
        &["run", &p("refund.idp"), "--policy", &p(policy), "--context", ctx, "--ledger", "l.idledger", "--sandbox", "sb"],
    )
}

fn ledger_lines(dir: &Path) -> usize {
    std::fs::read_to_string(dir.join("l.idledger")).unwrap().lines().count()
}

#[test]
fn invoice_example_completes_with_one_record() {
    let t = TempDir::new().unwrap();
    let o = idc(
        t.path(),
        &[
            "run",
            &p("invoice.idp"),
            "--policy",
            &p("invoice.policy.json"),
            "--context",
            &p("invoice.context.json"),
            "--ledger",
            "l.idledger",
            "--sandbox",
            "sb",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("step send_invoice: email.send -> allow"));
    assert_eq!(ledger_lines(t.path()), 1);
    assert_eq!(std::fs::read_dir(t.path().join("sb/outbox")).unwrap().count(), 1);
    assert_eq!(code(&idc(t.path(), &["verify", "l.idledger"])), 0);
}

#[test]
fn refund_outcomes_map_to_exit_codes() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&run_refund(t.path(), &refund_context("ok", 1_000, "us"), "refund.policy-a.json")), 0);
    let denied = run_refund(t.path(), &refund_context("over", 70_000, "us"), "refund.policy-a.json");
    assert_eq!(code(&denied), 3);
    assert!(stdout(&denied).contains("denied_halt"));
    assert_eq!(code(&run_refund(t.path(), &refund_context("region", 1_000, "zz"), "refund.policy-a.json")), 3);
    let suspended = run_refund(t.path(), &refund_context("big", 900_000, "us"), "refund.policy-a.json");
    assert_eq!(code(&suspended), 4);
    assert!(stdout(&suspended).contains("ticket: "));
    assert_eq!(ledger_lines(t.path()), 4 + 3 + 1 + 3);
}

#[test]
fn approve_allow_deny_and_unknown() {
    let t = TempDir::new().unwrap();
    let mut tickets = Vec::new();
    for id in ["a", "b"] {
        let o = idc(
            t.path(),
            &["--json", "run", &p("refund.idp"), "--policy", &p("refund.policy-a.json"), "--context",
              &refund_context(id, 800_000, "eu"), "--ledger", "l.idledger", "--sandbox", "sb"],
        );
        assert_eq!(code(&o), 4);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["status"], "suspended");
        tickets.push(v["ticket_id"].as_str().unwrap().to_string());
    }
    let approve = |id: &str, flag: &str| idc(t.path(), &["approve", id, flag, "--ledger", "l.idledger", "--sandbox", "sb"]);
    let ok = approve(&tickets[0], "--allow");
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert!(stdout(&ok).contains("step notify: email.send -> allow"));
    assert_eq!(code(&approve(&tickets[1], "--deny")), 3);
    let again = approve(&tickets[0], "--allow");
    assert_eq!(code(&again), 1);
    assert!(stderr(&again).contains("already-resolved"));
    assert_eq!(code(&approve("0123456789abcdef", "--allow")), 1);
    assert_eq!(code(&approve("not-a-ticket", "--deny")), 1);
    assert_eq!(code(&idc(t.path(), &["approve", &tickets[1], "--ledger", "l.idledger"])), 1);
    assert_eq!(code(&idc(t.path(), &["verify", "l.idledger"])), 0);
    assert_eq!(code(&idc(t.path(), &["replay-check", "--ledger", "l.idledger", "--policy", &p("refund.policy-a.json")])), 0);
}

#[test]
fn sandbox_environment_variable_overrides_flag() {
    let t = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_idc"))
        .args(["run", &p("refund.idp"), "--policy", &p("refund.policy-a.json"), "--context",
               &refund_context("env", 100, "us"), "--ledger", "l.idledger", "--sandbox", "flag-sb"])
        .current_dir(t.path())
        .env("IDC_SANDBOX", t.path().join("env-sb"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(t.path().join("env-sb/payments/refunds.csv").exists());
    assert!(!t.path().join("flag-sb").exists());
}

#[test]
fn missing_inputs_exit_one() {
    let t = TempDir::new().unwrap();
    let o = idc(t.path(), &["run", &p("invoice.idp"), "--policy", "nope.json", "--ledger", "l.idledger"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.json"));
    assert_eq!(code(&idc(t.path(), &["run", "missing.idp", "--policy", &p("invoice.policy.json"), "--ledger", "l"])), 1);
    assert_eq!(code(&idc(t.path(), &["frobnicate"])), 1);
    assert_eq!(code(&idc(t.path(), &["--help"])), 0);
}

#[test]
fn verify_and_simulate_on_tampered_ledgers() {
    let t = TempDir::new().unwrap();
    for (i, amount) in [1_000, 60_000, 75_000].iter().enumerate() {
        run_refund(t.path(), &refund_context(&format!("r{i}"), *amount, "ca"), "refund.policy-a.json");
    }
    let same = idc(t.path(), &["--json", "simulate", "--ledger", "l.idledger", "--policy", &p("refund.policy-a.json")]);
    assert_eq!(code(&same), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&same)).unwrap();
    assert_eq!(v["flipped_records"].as_array().unwrap().len(), 0);

    let changed = idc(t.path(), &["simulate", "--ledger", "l.idledger", "--policy", &p("refund.policy-b.json"), "--out", "r.json"]);
    assert_eq!(code(&changed), 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(t.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["matrix"]["deny"]["allow"], 2);
    assert_eq!(code(&idc(t.path(), &["replay-check", "--ledger", "l.idledger", "--policy", &p("refund.policy-b.json")])), 1);

    let path = t.path().join("l.idledger");
    let mut bytes = std::fs::read(&path).unwrap();
    let second_line = bytes.iter().position(|b| *b == b'\n').unwrap() + 40;
    bytes[second_line] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    let o = idc(t.path(), &["verify", "l.idledger"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("seq 1"), "{}", stdout(&o));
    let o = idc(t.path(), &["--json", "verify", "l.idledger"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["first_bad_seq"], 1);
    assert_eq!(code(&idc(t.path(), &["simulate", "--ledger", "l.idledger", "--policy", &p("refund.policy-b.json")])), 2);
    assert_eq!(code(&idc(t.path(), &["replay-check", "--ledger", "l.idledger", "--policy", &p("refund.policy-a.json")])), 2);
    let run = run_refund(t.path(), &refund_context("late", 100, "us"), "refund.policy-a.json");
    assert_eq!(code(&run), 2);

    std::fs::write(t.path().join("empty.idledger"), b"").unwrap();
    assert_eq!(code(&idc(t.path(), &["verify", "empty.idledger"])), 0);
    assert_eq!(code(&idc(t.path(), &["verify", "absent.idledger"])), 1);
}

#[test]
fn replay_check_diverges_with_exit_five() {
    let t = TempDir::new().unwrap();
    run_refund(t.path(), &refund_context("r", 60_000, "us"), "refund.policy-a.json");
    let renamed = std::fs::read_to_string(programs().join("refund.policy-b.json"))
        .unwrap()
        .replace("refunds-limit-1000", "refunds-limit-500");
    std::fs::write(t.path().join("impostor.json"), renamed).unwrap();
    let o = idc(t.path(), &["replay-check", "--ledger", "l.idledger", "--policy", "impostor.json"]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn bench_reports_every_row() {
    let t = TempDir::new().unwrap();
    let o = idc(
        t.path(),
        &["--json", "bench", "--rules", "3,6", "--iterations", "200", "--warmup", "20", "--durability", "fast",
          "--out", "bench.json", "--scratch", "scratch"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["policy-eval-3", "policy-eval-6", "hash", "ledger-append", "total-governance"]);
    for r in v["rows"].as_array().unwrap() {
        let (p50, p95, p99) = (r["p50"].as_f64().unwrap(), r["p95"].as_f64().unwrap(), r["p99"].as_f64().unwrap());
        assert!(p50 <= p95 && p95 <= p99);
    }
    assert_eq!(v["metadata"]["iterations"], 200);
    assert_eq!(v["metadata"]["warmup"], 20);
    assert_eq!(v["metadata"]["durability"], "fast");
    assert_eq!(v["metadata"]["seed"], 0x1DC1);
    assert!(t.path().join("bench.json").exists());
    assert_eq!(code(&idc(t.path(), &["bench", "--rules", "", "--iterations", "10"])), 1);
}

#[test]
fn case_study_writes_report() {
    let t = TempDir::new().unwrap();
    let o = idc(t.path(), &["case-study", "--count", "40", "--seed", "7", "--out", "case.json", "--sandbox", "sb", "--ledger", "case.idledger"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("all counts match the oracle"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(t.path().join("case.json")).unwrap()).unwrap();
    assert_eq!(v["requests"], 40);
    assert_eq!(code(&idc(t.path(), &["verify", "case.idledger"])), 0);
    assert_eq!(code(&idc(t.path(), &["case-study", "--count", "0", "--sandbox", "sb"])), 1);
}
