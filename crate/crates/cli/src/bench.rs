//! Latency benchmark of the governance path.
//!
//! Rows: policy evaluation at each requested rule count, the chain hash of a
//! representative record, a ledger append, and the whole mediation path
//! (evaluate, seal, hash, append). Every row times single operations after a
//! warmup and reports percentiles in microseconds.

use idc_core::{chain_hash, genesis_hash, Decision, DecisionRecord, Intent, Value, ValueMap};
use idc_ledger::{Durability, Ledger, LedgerError};
use idc_policy::{decide, govern, CmpOp, PolicyRule, PolicySet, Predicate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

/// Seed of the benchmark's policy and intent generator.
pub const BENCH_SEED: u64 = 0x1DC1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub rule_counts: Vec<usize>,
    pub iterations: usize,
    pub warmup: usize,
    pub durability: Durability,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { rule_counts: vec![5, 10, 20], iterations: 10_000, warmup: 1_000, durability: Durability::Durable }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub name: String,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchMetadata {
    pub iterations: usize,
    pub warmup: usize,
    pub durability: String,
    pub rule_counts: Vec<usize>,
    pub seed: u64,
    pub os: String,
    pub arch: String,
    pub cpu: String,
    /// Rule count of the policy used by the total-governance row.
    pub total_rule_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub metadata: BenchMetadata,
}

pub fn policy_row(n: usize) -> String {
    format!("policy-eval-{n}")
}
pub const HASH_ROW: &str = "hash";
pub const APPEND_ROW: &str = "ledger-append";
pub const TOTAL_ROW: &str = "total-governance";

impl BenchReport {
    pub fn row(&self, name: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}{:>10}{:>10}{:>10}{:>10}   (microseconds)", "operation", "p50", "p95", "p99", "mean");
        for r in &self.rows {
            let _ = writeln!(out, "{:<22}{:>10.2}{:>10.2}{:>10.2}{:>10.2}", r.name, r.p50, r.p95, r.p99, r.mean);
        }
        let m = &self.metadata;
        let _ = writeln!(
            out,
            "{} iterations after {} warmup, {} appends, seed {:#x}, {} / {} / {}",
            m.iterations, m.warmup, m.durability, m.seed, m.os, m.arch, m.cpu
        );
        out
    }
}

const WORDS: &[&str] = &["us", "eu", "ca", "br", "in", "admin", "agent", "support", "billing", "ops", "zz", "jp"];
const ACTIONS: &[&str] = &["email.send", "payment.refund", "crm.read", "kv.get", "file.write", "http.get"];
const FIELDS_STR: &[&str] = &["action", "target", "params.region", "context.role"];
const FIELDS_NUM: &[&str] = &["params.amount_cents", "context.limit", "params.priority"];

/// `n / 3` prefix rules, `n / 3` set-membership rules over 8 strings, and the
/// remainder numeric comparisons.
pub fn bench_policy(n: usize, rng: &mut ChaCha8Rng) -> PolicySet {
    let (prefix, set) = (n / 3, n / 3);
    let rules = (0..n)
        .map(|i| {
            let predicate = if i < prefix {
                let action = ACTIONS.choose(rng).unwrap();
                Predicate::string_prefix(*FIELDS_STR.choose(rng).unwrap(), &action[..rng.random_range(1..=action.len())])
            } else if i < prefix + set {
                let allowed: Vec<&str> = WORDS.choose_multiple(rng, 8).copied().collect();
                Predicate::set_member(*FIELDS_STR.choose(rng).unwrap(), allowed)
            } else {
                let op = *CmpOp::ALL.choose(rng).unwrap();
                Predicate::numeric_cmp(*FIELDS_NUM.choose(rng).unwrap(), op, rng.random_range(0..100_000))
            };
            PolicyRule::new(format!("rule-{i}"), predicate, *Decision::ALL.choose(rng).unwrap())
        })
        .collect();
    PolicySet::new(format!("bench-{n}"), rules, Decision::Deny).expect("bench policy is valid")
}

pub fn bench_intent(rng: &mut ChaCha8Rng) -> (Intent, ValueMap) {
    let params: ValueMap = [
        ("amount_cents".to_string(), Value::Int(rng.random_range(1..200_000))),
        ("region".to_string(), Value::str(*WORDS.choose(rng).unwrap())),
        ("priority".to_string(), Value::Int(rng.random_range(0..5))),
        ("customer_id".to_string(), Value::Str(format!("cust-{:03}", rng.random_range(0..100)))),
    ]
    .into();
    let context: ValueMap = [
        ("role".to_string(), Value::str(*WORDS.choose(rng).unwrap())),
        ("limit".to_string(), Value::Int(rng.random_range(0..100_000))),
    ]
    .into();
    let action = *ACTIONS.choose(rng).unwrap();
    let intent = Intent::new(action, format!("@bench/{action}"), params, context.clone()).expect("bench intent is valid");
    (intent, context)
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize(name: impl Into<String>, mut micros: Vec<f64>) -> BenchRow {
    micros.sort_by(f64::total_cmp);
    let mean = if micros.is_empty() { 0.0 } else { micros.iter().sum::<f64>() / micros.len() as f64 };
    BenchRow {
        name: name.into(),
        p50: percentile(&micros, 50.0),
        p95: percentile(&micros, 95.0),
        p99: percentile(&micros, 99.0),
        mean,
    }
}

fn measure(warmup: usize, iterations: usize, mut op: impl FnMut(usize)) -> Vec<f64> {
    for i in 0..warmup {
        op(i);
    }
    (0..iterations)
        .map(|i| {
            let start = Instant::now();
            op(warmup + i);
            start.elapsed().as_secs_f64() * 1e6
        })
        .collect()
}

fn cpu_name() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| s.lines().find(|l| l.starts_with("model name")).and_then(|l| l.split(':').nth(1)).map(|s| s.trim().to_string()))
        .unwrap_or_else(|| "unknown".into())
}

/// Runs the benchmark. Ledger files are created under `scratch`.
pub fn run_bench(config: &BenchConfig, scratch: &Path) -> Result<BenchReport, LedgerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(BENCH_SEED);
    let pool: Vec<(Intent, ValueMap)> = (0..256).map(|_| bench_intent(&mut rng)).collect();
    let policies: Vec<PolicySet> = config.rule_counts.iter().map(|n| bench_policy(*n, &mut rng)).collect();
    let (warmup, iterations) = (config.warmup, config.iterations);
    let mut rows = Vec::new();

    // Rule counts are timed round-robin within each iteration so that clock
    // and frequency drift affects every row alike.
    let mut eval_samples = vec![Vec::with_capacity(iterations); policies.len()];
    for i in 0..warmup + iterations {
        let (intent, ctx) = &pool[i % pool.len()];
        for (policy, samples) in policies.iter().zip(&mut eval_samples) {
            let start = Instant::now();
            black_box(decide(policy, intent, ctx));
            if i >= warmup {
                samples.push(start.elapsed().as_secs_f64() * 1e6);
            }
        }
    }
    for (n, samples) in config.rule_counts.iter().zip(eval_samples) {
        rows.push(summarize(policy_row(*n), samples));
    }

    let total_policy = policies.first().cloned().unwrap_or_else(|| bench_policy(0, &mut rng));
    let (intent, ctx) = &pool[0];
    let sample = DecisionRecord::seal(govern(&total_policy, intent, ctx).template, 0, 0, genesis_hash())
        .expect("bench record seals");
    let bytes = sample.unsealed_bytes().expect("bench record encodes");
    let prev = genesis_hash();
    rows.push(summarize(HASH_ROW, measure(warmup, iterations, |_| {
        black_box(chain_hash(black_box(&bytes), &prev));
    })));

    let mut ledger = Ledger::create(scratch.join("bench-append.idledger"), config.durability)?;
    let templates: Vec<_> = pool.iter().map(|(i, c)| govern(&total_policy, i, c).template).collect();
    let mut failure = None;
    let samples = measure(warmup, iterations, |i| {
        if let Err(e) = ledger.append(templates[i % templates.len()].clone(), i as i64) {
            failure.get_or_insert(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    rows.push(summarize(APPEND_ROW, samples));
    drop(ledger);

    let mut ledger = Ledger::create(scratch.join("bench-total.idledger"), config.durability)?;
    let mut failure = None;
    let samples = measure(warmup, iterations, |i| {
        let (intent, ctx) = &pool[i % pool.len()];
        let outcome = govern(&total_policy, intent, ctx);
        if let Err(e) = ledger.append(outcome.template, i as i64) {
            failure.get_or_insert(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    rows.push(summarize(TOTAL_ROW, samples));

    Ok(BenchReport {
        rows,
        metadata: BenchMetadata {
            iterations,
            warmup,
            durability: config.durability.as_str().to_string(),
            rule_counts: config.rule_counts.clone(),
            seed: BENCH_SEED,
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpu: cpu_name(),
            total_rule_count: total_policy.rules.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&s, 50.0), 50.0);
        assert_eq!(percentile(&s, 95.0), 95.0);
        assert_eq!(percentile(&s, 99.0), 99.0);
        assert_eq!(percentile(&[3.0], 99.0), 3.0);
        assert_eq!(percentile(&[], 50.0), 0.0);
    }

    #[test]
    fn policy_mix() {
        let mut rng = ChaCha8Rng::seed_from_u64(BENCH_SEED);
        let p = bench_policy(20, &mut rng);
        let kinds: Vec<&str> = p
            .rules
            .iter()
            .map(|r| match r.predicate {
                Predicate::StringPrefix { .. } => "prefix",
                Predicate::SetMember { ref allowed, .. } => {
                    assert_eq!(allowed.len(), 8);
                    "set"
                }
                _ => "numeric",
            })
            .collect();
        assert_eq!(kinds.iter().filter(|k| **k == "prefix").count(), 6);
        assert_eq!(kinds.iter().filter(|k| **k == "set").count(), 6);
        assert_eq!(kinds.iter().filter(|k| **k == "numeric").count(), 8);
    }
}
