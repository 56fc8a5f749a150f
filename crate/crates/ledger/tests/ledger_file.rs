use idc_core::{Decision, Intent, RecordKind, RecordTemplate, Value, ValueMap};
use idc_ledger::{
    read_stream, read_stream_file, verify_bytes, verify_file, Durability, FailureReason, Ledger, LedgerError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn template(n: i64) -> RecordTemplate {
    let params: ValueMap = [
        ("amount".to_string(), Value::Int(n * 7 % 1_300)),
        ("note".to_string(), Value::str(format!("req-{n}\t\"ü\""))),
    ]
    .into();
    let mut context = ValueMap::new();
    context.insert("step".into(), Value::Int(n));
    RecordTemplate {
        kind: RecordKind::Decision,
        intent: Intent::new("refund.issue", "@stdlib/payment/refund", params, context.clone()).unwrap(),
        decision: Decision::ALL[(n % 3) as usize],
        applied_rules: (0..n % 3).map(|i| format!("rule-{i}")).collect(),
        policy_id: "refunds-v1".into(),
        context,
    }
}

fn build(n: usize) -> Vec<u8> {
    let mut l = Ledger::in_memory();
    for i in 0..n {
        l.append(template(i as i64), 1_700_000_000_000_000 + i as i64).unwrap();
    }
    l.memory_bytes().unwrap().to_vec()
}

fn line_span(bytes: &[u8], k: usize) -> (usize, usize) {
    let mut start = 0;
    for _ in 0..k {
        start += bytes[start..].iter().position(|&b| b == b'\n').unwrap() + 1;
    }
    let end = start + bytes[start..].iter().position(|&b| b == b'\n').unwrap();
    (start, end)
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.idledger");
    let mut l = Ledger::create(&path, Durability::Durable).unwrap();
    for i in 0..20 {
        l.append(template(i), i).unwrap();
    }
    let expected = l.records().to_vec();
    l.close().unwrap();
    assert_eq!(read_stream_file(&path, true).unwrap(), expected);
    assert!(verify_file(&path).unwrap().ok);
}

#[test]
fn ten_thousand_appends_verify() {
    let bytes = build(10_000);
    let report = verify_bytes(&bytes);
    assert!(report.ok, "{report}");
    assert_eq!(report.records_checked, 10_000);
}

#[test]
fn untampered_hundred_records_ok() {
    assert!(verify_bytes(&build(100)).ok);
}

#[test]
fn flipped_param_byte_in_record_two() {
    let mut bytes = build(100);
    let (start, end) = line_span(&bytes, 2);
    let line = &bytes[start..end];
    let needle = b"\"amount\":";
    let at = line.windows(needle.len()).position(|w| w == needle).unwrap() + needle.len();
    assert!(line[at].is_ascii_digit());
    bytes[start + at] = if line[at] == b'9' { b'8' } else { line[at] + 1 };
    let report = verify_bytes(&bytes);
    assert_eq!(report.first_bad_seq, Some(2));
    assert_eq!(report.reason, Some(FailureReason::HashMismatch));
}

#[test]
fn deleted_record_five() {
    let bytes = build(100);
    let (start, end) = line_span(&bytes, 5);
    let mut cut = bytes[..start].to_vec();
    cut.extend_from_slice(&bytes[end + 1..]);
    let report = verify_bytes(&cut);
    assert_eq!(report.first_bad_seq, Some(5));
    assert!(matches!(
        report.reason,
        Some(FailureReason::SeqGap) | Some(FailureReason::PrevLinkMismatch)
    ));
}

#[test]
fn rehashed_forgery_breaks_the_next_link() {
    // Re-sealing a modified record fixes its own hash but not its successor's link.
    let bytes = build(10);
    let mut records = read_stream(&bytes, true).unwrap();
    let mut forged = template(99);
    forged.decision = Decision::Allow;
    records[3] = idc_core::DecisionRecord::seal(forged, 3, records[3].timestamp, records[3].prev_hash).unwrap();
    let mut out = Vec::new();
    for r in &records {
        out.extend(r.to_line().unwrap());
        out.push(b'\n');
    }
    let report = verify_bytes(&out);
    assert_eq!(report.first_bad_seq, Some(4));
    assert_eq!(report.reason, Some(FailureReason::PrevLinkMismatch));
}

#[test]
fn random_single_byte_mutations_are_detected() {
    let bytes = build(200);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1_000 {
        let mut m = bytes.clone();
        let at = rng.random_range(0..m.len());
        m[at] ^= rng.random_range(1..=255u8);
        let record_of_offset = bytes[..at].iter().filter(|&&b| b == b'\n').count() as u64;
        let report = verify_bytes(&m);
        assert!(!report.ok, "mutation at {at} undetected");
        assert!(report.first_bad_seq.unwrap() <= record_of_offset);
    }
}

#[test]
fn open_continues_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.idledger");
    {
        let mut l = Ledger::create(&path, Durability::Fast).unwrap();
        l.append(template(1), 1).unwrap();
    }
    let mut l = Ledger::open(&path, Durability::Fast).unwrap();
    assert_eq!(l.len(), 1);
    let r = l.append(template(2), 2).unwrap().clone();
    assert_eq!(r.seq, 1);
    drop(l);
    assert_eq!(verify_file(&path).unwrap().records_checked, 2);
    assert!(matches!(Ledger::create(&path, Durability::Fast), Err(LedgerError::Io(_))));
}

#[test]
fn open_refuses_tampered_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.idledger");
    let mut bytes = build(3);
    let (start, _) = line_span(&bytes, 1);
    bytes[start + 3] ^= 0x01;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(Ledger::open(&path, Durability::Fast), Err(LedgerError::Tampered(_))));
    assert!(matches!(read_stream_file(&path, true), Err(LedgerError::Tampered(_))));
}

#[test]
fn durability_modes_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for mode in [Durability::Durable, Durability::Fast] {
        let path = dir.path().join(format!("{}.idledger", mode.as_str()));
        let mut l = Ledger::create(&path, mode).unwrap();
        for i in 0..5 {
            l.append(template(i), i).unwrap();
        }
        l.close().unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verifier_depends_only_on_core() {
    let manifest: toml::Table =
        toml::from_str(include_str!("../Cargo.toml")).expect("ledger manifest parses");
    let deps = manifest["dependencies"].as_table().unwrap();
    let internal: Vec<&String> = deps.keys().filter(|k| k.starts_with("idc-")).collect();
    assert_eq!(internal, vec!["idc-core"]);
}
