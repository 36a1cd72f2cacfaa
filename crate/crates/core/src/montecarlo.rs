//! Block error rate simulation.
//!
//! Trial `t` at SNR index `i` draws from its own generator keyed by
//! `(seed, i, t)`. Trials are grouped in fixed-size batches, batches are
//! reduced in index order and the stopping rule is only checked at batch
//! boundaries, so a result never depends on how many workers ran it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bler::db_to_linear;
use crate::channel::{synth_correlation_matrix, ChannelModel, PreparedChannel};
use crate::error::{Error, Result};
use crate::receivers::{algorithm1_detailed, block_receive, ml_bruteforce, ml_detect, Detection};
use crate::subsets::{SubsetSpec, Variant, DEFAULT_BUDGET};

pub const DEFAULT_BATCH: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReceiverKind {
    /// Exhaustive search over the subset.
    Bruteforce,
    /// Exact ML via the cheapest exact method for the subset.
    Exact,
    Algorithm1 {
        #[serde(default = "default_d")]
        d: usize,
    },
    Block {
        k: usize,
    },
}

fn default_d() -> usize {
    2
}

impl ReceiverKind {
    pub fn label(&self) -> String {
        match self {
            Self::Bruteforce => "bruteforce".into(),
            Self::Exact => "exact".into(),
            Self::Algorithm1 { d } => format!("algorithm1_d{d}"),
            Self::Block { k } => format!("block_k{k}"),
        }
    }

    pub fn check_compatible(&self, spec: &SubsetSpec) -> Result<()> {
        match self {
            Self::Block { k } => match spec.variant() {
                Variant::Block { k: sk } if sk == k => Ok(()),
                _ => Err(Error::InvalidParameter(format!(
                    "block receiver with k = {k} needs a block subset with the same k, got {}",
                    spec.kind_name()
                ))),
            },
            Self::Algorithm1 { d } if !(2..=3).contains(d) => Err(Error::UnsupportedDistance(*d)),
            Self::Bruteforce if spec.size() > DEFAULT_BUDGET => Err(Error::BudgetExceeded {
                what: "brute-force receiver candidates",
                needed: spec.size(),
                budget: DEFAULT_BUDGET,
            }),
            _ => Ok(()),
        }
    }

    fn detect(&self, r: &crate::channel::CorrelationMatrix, spec: &SubsetSpec) -> Result<Detection> {
        match self {
            Self::Bruteforce => {
                let a = ml_bruteforce(r, spec);
                Ok(Detection {
                    perm: a.perm,
                    score: a.score,
                    subproblems: 0,
                    extra_scores: spec.size() as u32,
                    fallback: false,
                })
            }
            Self::Exact => ml_detect(r, spec),
            Self::Algorithm1 { d } => algorithm1_detailed(r, spec, *d),
            Self::Block { k } => {
                let b = block_receive(r, *k)?;
                Ok(Detection {
                    perm: b.perm,
                    score: crate::receivers::score(r, &b.perm),
                    subproblems: 1,
                    extra_scores: 0,
                    fallback: false,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Optional; must match the subset when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub subset: SubsetSpec,
    pub channel: ChannelModel,
    pub receiver: ReceiverKind,
    pub snr_grid_db: Vec<f64>,
    pub max_trials: u64,
    pub min_errors: u64,
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch_trials: u64,
    /// Total symbol energy `E`.
    #[serde(default = "default_energy")]
    pub e_total: f64,
}

fn default_batch() -> u64 {
    DEFAULT_BATCH
}

fn default_energy() -> f64 {
    1.0
}

impl SimConfig {
    pub fn new(subset: SubsetSpec, channel: ChannelModel, receiver: ReceiverKind, snr_grid_db: Vec<f64>) -> Self {
        Self {
            m: Some(subset.m()),
            subset,
            channel,
            receiver,
            snr_grid_db,
            max_trials: 10_000_000,
            min_errors: 200,
            seed: 0,
            batch_trials: DEFAULT_BATCH,
            e_total: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.m {
            if m != self.subset.m() {
                return Err(Error::LengthMismatch(m, self.subset.m()));
            }
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("SNR grid must be non-empty and finite".into()));
        }
        if self.max_trials == 0 || self.batch_trials == 0 {
            return Err(Error::InvalidParameter(
                "max_trials and batch_trials must be positive".into(),
            ));
        }
        if !(self.e_total > 0.0 && self.e_total.is_finite()) {
            return Err(Error::InvalidParameter(format!("E = {}", self.e_total)));
        }
        self.channel.validate()?;
        self.receiver.check_compatible(&self.subset)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Trials where the receiver fell back to brute force.
    pub fallbacks: u64,
    pub subproblems_total: u64,
    pub subproblems_max: u32,
    pub extra_scores_total: u64,
    /// Trials whose decision equals the first receiver's (paired runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agree_with_first: Option<u64>,
}

impl Diagnostics {
    fn record(&mut self, d: &Detection) {
        self.fallbacks += d.fallback as u64;
        self.subproblems_total += d.subproblems as u64;
        self.subproblems_max = self.subproblems_max.max(d.subproblems);
        self.extra_scores_total += d.extra_scores as u64;
    }

    fn merge(&mut self, other: &Self) {
        self.fallbacks += other.fallbacks;
        self.subproblems_total += other.subproblems_total;
        self.subproblems_max = self.subproblems_max.max(other.subproblems_max);
        self.extra_scores_total += other.extra_scores_total;
        if let Some(a) = other.agree_with_first {
            *self.agree_with_first.get_or_insert(0) += a;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub points: Vec<SnrPoint>,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(errors: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(
        trials >= 1 && errors <= trials,
        "need 0 <= errors <= trials, trials >= 1"
    );
    let z = normal_quantile(0.5 + confidence / 2.0);
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo.min(p), hi.max(p))
}

/// Inverse standard normal CDF by bisection on the tail function.
fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - crate::bler::q_function(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for trial `trial` at SNR index `snr_idx`.
pub fn trial_rng(seed: u64, snr_idx: usize, trial: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ snr_idx as u64) ^ trial);
    ChaCha8Rng::seed_from_u64(key)
}

#[derive(Debug, Clone, Default)]
struct Tally {
    trials: u64,
    errors: Vec<u64>,
    diag: Vec<Diagnostics>,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    receivers: &'a [ReceiverKind],
    channel: PreparedChannel,
}

impl Engine<'_> {
    fn run_batch(&self, snr_idx: usize, n0: f64, start: u64, end: u64) -> Result<Tally> {
        let k = self.receivers.len();
        let mut t = Tally {
            trials: end - start,
            errors: vec![0; k],
            diag: vec![Diagnostics::default(); k],
        };
        if k > 1 {
            for d in &mut t.diag[1..] {
                d.agree_with_first = Some(0);
            }
        }
        let spec = &self.cfg.subset;
        for trial in start..end {
            let mut rng = trial_rng(self.cfg.seed, snr_idx, trial);
            let symbol = rng.random_range(0..spec.size());
            let p = spec.encode(symbol)?;
            let ch = self.channel.sample(&mut rng);
            let r = synth_correlation_matrix(&p, &ch, self.cfg.e_total, n0, &mut rng);
            let mut first = None;
            for (i, rx) in self.receivers.iter().enumerate() {
                let det = rx.detect(&r, spec)?;
                t.errors[i] += (det.perm != p) as u64;
                t.diag[i].record(&det);
                match first {
                    None => first = Some(det.perm),
                    Some(f) => {
                        if let Some(a) = t.diag[i].agree_with_first.as_mut() {
                            *a += (f == det.perm) as u64;
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    fn run_point(&self, snr_idx: usize, pool: &rayon::ThreadPool) -> Result<Vec<SnrPoint>> {
        let cfg = self.cfg;
        let snr_db = cfg.snr_grid_db[snr_idx];
        let n0 = cfg.e_total / db_to_linear(snr_db);
        let k = self.receivers.len();
        let mut total = Tally {
            trials: 0,
            errors: vec![0; k],
            diag: vec![Diagnostics::default(); k],
        };
        let width = pool.current_num_threads().max(1) as u64;
        let mut next_batch = 0u64;
        'outer: loop {
            let starts: Vec<u64> = (0..width)
                .map(|i| (next_batch + i) * cfg.batch_trials)
                .take_while(|&s| s < cfg.max_trials)
                .collect();
            if starts.is_empty() {
                break;
            }
            next_batch += starts.len() as u64;
            let batches: Vec<Result<Tally>> = pool.install(|| {
                starts
                    .par_iter()
                    .map(|&s| self.run_batch(snr_idx, n0, s, (s + cfg.batch_trials).min(cfg.max_trials)))
                    .collect()
            });
            for b in batches {
                let b = b?;
                total.trials += b.trials;
                for i in 0..k {
                    total.errors[i] += b.errors[i];
                    total.diag[i].merge(&b.diag[i]);
                }
                let done = total.errors.iter().all(|&e| e >= cfg.min_errors) || total.trials >= cfg.max_trials;
                if done {
                    break 'outer;
                }
            }
        }
        Ok((0..k)
            .map(|i| {
                let (ci_lo, ci_hi) = wilson_interval(total.errors[i], total.trials, 0.95);
                SnrPoint {
                    snr_db,
                    trials: total.trials,
                    block_errors: total.errors[i],
                    bler: total.errors[i] as f64 / total.trials as f64,
                    ci_lo,
                    ci_hi,
                    diagnostics: total.diag[i].clone(),
                }
            })
            .collect())
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Simulates `cfg.receiver` over the SNR grid using `workers` threads.
pub fn run_bler(cfg: &SimConfig, workers: usize) -> Result<SimResult> {
    Ok(run_bler_paired(cfg, &[cfg.receiver], workers)?.remove(0))
}

/// Runs several receivers on identical trials (same symbols, channels and
/// noise). A point stops once every receiver has `min_errors` errors or
/// `max_trials` is reached. Results come back in the order of `receivers`.
pub fn run_bler_paired(cfg: &SimConfig, receivers: &[ReceiverKind], workers: usize) -> Result<Vec<SimResult>> {
    cfg.validate()?;
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("no receivers given".into()));
    }
    for rx in receivers {
        rx.check_compatible(&cfg.subset)?;
    }
    let engine = Engine {
        cfg,
        receivers,
        channel: cfg.channel.prepare()?,
    };
    let pool = build_pool(workers)?;
    let mut per_rx: Vec<Vec<SnrPoint>> = vec![Vec::new(); receivers.len()];
    for snr_idx in 0..cfg.snr_grid_db.len() {
        for (i, p) in engine.run_point(snr_idx, &pool)?.into_iter().enumerate() {
            per_rx[i].push(p);
        }
    }
    Ok(receivers
        .iter()
        .zip(per_rx)
        .map(|(rx, points)| SimResult {
            config: SimConfig {
                receiver: *rx,
                ..cfg.clone()
            },
            points,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(receiver: ReceiverKind) -> SimConfig {
        let mut c = SimConfig::new(
            SubsetSpec::alternating(5).unwrap(),
            ChannelModel::rician(2.0, 0.5, 2),
            receiver,
            vec![0.0, 6.0],
        );
        c.max_trials = 5000;
        c.min_errors = 100;
        c.batch_trials = 250;
        c.seed = 42;
        c
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100, 0.95);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
        assert!((hi - 0.5 - 0.0960).abs() < 1e-3);
        assert_eq!(wilson_interval(7, 7, 0.95).1, 1.0);
        for e in 0..=40 {
            let (lo, hi) = wilson_interval(e, 40, 0.95);
            let p = e as f64 / 40.0;
            assert!(lo <= p && p <= hi);
        }
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(1, 0, 0).random();
        let b: u64 = trial_rng(1, 0, 1).random();
        let c: u64 = trial_rng(1, 1, 0).random();
        let d: u64 = trial_rng(2, 0, 0).random();
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, trial_rng(1, 0, 0).random::<u64>());
    }

    #[test]
    fn independent_of_worker_count() {
        let cfg = small_cfg(ReceiverKind::Exact);
        let one = run_bler(&cfg, 1).unwrap();
        let four = run_bler(&cfg, 4).unwrap();
        let three = run_bler(&cfg, 3).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, three);
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&four).unwrap()
        );
    }

    #[test]
    fn stopping_rules() {
        let cfg = small_cfg(ReceiverKind::Exact);
        let res = run_bler(&cfg, 2).unwrap();
        for p in &res.points {
            assert!(p.trials % cfg.batch_trials == 0 || p.trials == cfg.max_trials);
            assert!(p.block_errors >= cfg.min_errors || p.trials == cfg.max_trials);
            assert!(p.trials <= cfg.max_trials);
            assert_eq!(p.bler, p.block_errors as f64 / p.trials as f64);
        }
        assert!(res.points[0].bler > res.points[1].bler);
    }

    #[test]
    fn noiseless_has_no_errors() {
        let specs = [
            (SubsetSpec::universal(5).unwrap(), ReceiverKind::Exact),
            (SubsetSpec::alternating(5).unwrap(), ReceiverKind::Algorithm1 { d: 2 }),
            (SubsetSpec::alternating(5).unwrap(), ReceiverKind::Bruteforce),
            (SubsetSpec::block(6, 2).unwrap(), ReceiverKind::Block { k: 2 }),
        ];
        for (spec, rx) in specs {
            let mut cfg = SimConfig::new(spec, ChannelModel::awgn(2), rx, vec![200.0]);
            cfg.max_trials = 10_000;
            let res = run_bler(&cfg, 2).unwrap();
            assert_eq!(res.points[0].block_errors, 0);
            assert_eq!(res.points[0].trials, 10_000);
        }
    }

    #[test]
    fn paired_runs_share_trials() {
        let cfg = small_cfg(ReceiverKind::Exact);
        let res = run_bler_paired(&cfg, &[ReceiverKind::Exact, ReceiverKind::Algorithm1 { d: 2 }], 2).unwrap();
        let solo = run_bler(&cfg, 1).unwrap();
        for (i, p) in res[0].points.iter().enumerate() {
            let q = &res[1].points[i];
            assert_eq!(p.trials, q.trials);
            let agree = q.diagnostics.agree_with_first.unwrap();
            assert!(p.block_errors.abs_diff(q.block_errors) <= p.trials - agree);
            assert!(agree > p.trials / 2);
            assert!(solo.points[i].trials <= p.trials);
        }
        assert_eq!(res[1].config.receiver, ReceiverKind::Algorithm1 { d: 2 });
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small_cfg(ReceiverKind::Block { k: 2 });
        assert!(run_bler(&cfg, 1).is_err());
        cfg.receiver = ReceiverKind::Exact;
        cfg.snr_grid_db.clear();
        assert!(run_bler(&cfg, 1).is_err());
        let mut cfg = small_cfg(ReceiverKind::Exact);
        cfg.m = Some(6);
        assert!(matches!(run_bler(&cfg, 1), Err(Error::LengthMismatch(6, 5))));
        let mut cfg = SimConfig::new(
            SubsetSpec::block(6, 3).unwrap(),
            ChannelModel::awgn(1),
            ReceiverKind::Block { k: 2 },
            vec![1.0],
        );
        assert!(cfg.validate().is_err());
        cfg.receiver = ReceiverKind::Block { k: 3 };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn config_json() {
        let text = r#"{
            "subset": {"m": 6, "variant": "block", "k": 2},
            "channel": {"kind": "awgn", "N": 2},
            "receiver": {"kind": "block", "k": 2},
            "snr_grid_db": [0, 4, 8],
            "max_trials": 1000000,
            "min_errors": 200,
            "seed": 7
        }"#;
        let cfg: SimConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.batch_trials, DEFAULT_BATCH);
        assert_eq!(cfg.receiver, ReceiverKind::Block { k: 2 });
        cfg.validate().unwrap();
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let a1: ReceiverKind = serde_json::from_str(r#"{"kind":"algorithm1"}"#).unwrap();
        assert_eq!(a1, ReceiverKind::Algorithm1 { d: 2 });
    }
}
