//! Seeded refund-request workloads.

use idc_core::Value;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefundRequest {
    pub request_id: String,
    pub customer_id: String,
    pub amount_cents: i64,
    pub region: String,
    pub reason: String,
}

impl RefundRequest {
    pub fn to_value(&self) -> Value {
        Value::map([
            ("request_id", Value::str(&self.request_id)),
            ("customer_id", Value::str(&self.customer_id)),
            ("amount_cents", Value::Int(self.amount_cents)),
            ("region", Value::str(&self.region)),
            ("reason", Value::str(&self.reason)),
        ])
    }
}

/// Amounts drawn uniformly from `min_cents..=max_cents`, chosen with
/// probability proportional to `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmountBand {
    pub weight: u32,
    pub min_cents: i64,
    pub max_cents: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub count: usize,
    pub bands: Vec<AmountBand>,
    /// Share of requests naming a customer outside the authorized regions.
    pub unauthorized_fraction: f64,
    pub authorized_regions: Vec<String>,
    pub unauthorized_regions: Vec<String>,
    pub customers: usize,
}

pub const DEFAULT_SEED: u64 = 0x5EED_0200;

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            seed: DEFAULT_SEED,
            count: 200,
            bands: vec![
                AmountBand { weight: 40, min_cents: 500, max_cents: 50_000 },
                AmountBand { weight: 25, min_cents: 50_001, max_cents: 100_000 },
                AmountBand { weight: 25, min_cents: 100_001, max_cents: 500_000 },
                AmountBand { weight: 10, min_cents: 500_001, max_cents: 1_500_000 },
            ],
            unauthorized_fraction: 0.1,
            authorized_regions: vec!["us".into(), "ca".into(), "eu".into()],
            unauthorized_regions: vec!["br".into(), "in".into(), "zz".into()],
            customers: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorkloadError {
    #[error("workload count must be at least 1")]
    EmptyCount,
    #[error("amount band {0} is empty or not positive")]
    BadBand(usize),
    #[error("amount bands need a positive total weight")]
    NoWeight,
    #[error("unauthorized fraction must lie in [0, 1]")]
    BadFraction,
    #[error("region lists and customer count must be non-empty")]
    NoRegions,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.count == 0 {
            return Err(WorkloadError::EmptyCount);
        }
        for (i, b) in self.bands.iter().enumerate() {
            if b.min_cents < 1 || b.max_cents < b.min_cents {
                return Err(WorkloadError::BadBand(i));
            }
        }
        if self.bands.iter().map(|b| u64::from(b.weight)).sum::<u64>() == 0 {
            return Err(WorkloadError::NoWeight);
        }
        if !(0.0..=1.0).contains(&self.unauthorized_fraction) {
            return Err(WorkloadError::BadFraction);
        }
        if self.authorized_regions.is_empty() || self.unauthorized_regions.is_empty() || self.customers == 0 {
            return Err(WorkloadError::NoRegions);
        }
        Ok(())
    }
}

const REASONS: &[&str] = &["damaged", "late delivery", "duplicate charge", "not as described", "cancelled"];

/// Deterministic for a given spec. The first requests walk the bands in
/// order, one each, so every band is represented whenever `count` allows;
/// the rest draw a band by weight.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Vec<RefundRequest>, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weighted: Vec<&AmountBand> = spec.bands.iter().filter(|b| b.weight > 0).collect();
    let requests = (0..spec.count)
        .map(|i| {
            let band = match spec.bands.get(i) {
                Some(b) => b,
                None => *weighted.choose_weighted(&mut rng, |b| b.weight).expect("positive weight"),
            };
            let amount_cents = rng.random_range(band.min_cents..=band.max_cents);
            let regions = if rng.random_bool(spec.unauthorized_fraction) {
                &spec.unauthorized_regions
            } else {
                &spec.authorized_regions
            };
            RefundRequest {
                request_id: format!("req-{i:05}"),
                customer_id: format!("cust-{:03}", rng.random_range(0..spec.customers)),
                amount_cents,
                region: regions.choose(&mut rng).expect("non-empty").clone(),
                reason: REASONS.choose(&mut rng).expect("non-empty").to_string(),
            }
        })
        .collect();
    Ok(requests)
}
