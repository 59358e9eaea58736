//! Seeded sweeps over URLLC counts, error targets and schemes.
//!
//! Each `(seed index)` expands through the counter-based splitter into
//! topology, arrival and source streams, so every scheme and sweep point sees
//! the same randomness for a given seed and results do not depend on which
//! worker ran first.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use coexist_core::frame::{derive_seed, generate_topology, SeedStream};
use coexist_core::scheduler::{MetricSet, Policy, RunSpec, Scheduler};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "COEXIST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunJob {
    pub scheme: Policy,
    pub n_urllc: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl RunJob {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.scheme
            .cmp(&other.scheme)
            .then(self.n_urllc.cmp(&other.n_urllc))
            .then(self.epsilon.total_cmp(&other.epsilon))
            .then(self.seed.cmp(&other.seed))
    }
}

/// One CSV line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(with = "policy_text")]
    pub scheme: Policy,
    pub n_urllc: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub embb_rate_bps: f64,
    pub bs_profit: f64,
    pub urllc_utility: f64,
    pub drops: u64,
}

impl ResultRow {
    pub fn job(&self) -> RunJob {
        RunJob {
            scheme: self.scheme,
            n_urllc: self.n_urllc,
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }

    pub fn key_string(&self) -> String {
        format!(
            "({}, n_urllc={}, epsilon={}, seed={})",
            self.scheme.as_str(),
            self.n_urllc,
            self.epsilon,
            self.seed
        )
    }
}

mod policy_text {
    use coexist_core::scheduler::Policy;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Policy, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(p.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Policy, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A run's full metrics alongside its key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub job: RunJob,
    pub metrics: MetricSet,
}

impl RunRecord {
    pub fn row(&self) -> ResultRow {
        ResultRow {
            scheme: self.job.scheme,
            n_urllc: self.job.n_urllc,
            epsilon: self.job.epsilon,
            seed: self.job.seed,
            embb_rate_bps: self.metrics.embb_sum_rate,
            bs_profit: self.metrics.bs_profit,
            urllc_utility: self.metrics.urllc_network_utility,
            drops: self.metrics.drops,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Sorted by `(scheme, n_urllc, epsilon, seed)`.
    pub records: Vec<RunRecord>,
    /// Wall-clock time of the whole sweep; kept out of the CSV.
    pub elapsed: Duration,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.records.iter().map(RunRecord::row).collect()
    }
}

/// Every `(scheme, n_urllc, epsilon, seed)` combination of the scenario.
pub fn jobs(config: &ScenarioConfig) -> Vec<RunJob> {
    let mut out = Vec::new();
    for scheme in config.sim.scheme.policies() {
        for n_urllc in config.urllc_counts() {
            for epsilon in config.epsilons() {
                for seed in 0..config.sim.seeds {
                    out.push(RunJob {
                        scheme,
                        n_urllc,
                        epsilon,
                        seed,
                    });
                }
            }
        }
    }
    out
}

/// Runs one job to completion.
pub fn run_job(config: &ScenarioConfig, job: &RunJob) -> SimResult<MetricSet> {
    let master = config.sim.master_seed;
    let scheduler = Scheduler::new(config.scheduler_config(job.epsilon), config.ladder()?, job.scheme)?;
    let users = generate_topology(
        derive_seed(master, job.seed, SeedStream::Topology),
        config.topology.n_embb,
        job.n_urllc,
        config.topology.radius_m,
    );
    let spec = RunSpec {
        ttis: config.sim.ttis,
        arrival_rate_per_user: config.traffic.arrival_rate,
        arrivals_seed: derive_seed(master, job.seed, SeedStream::Arrivals),
        sources_seed: derive_seed(master, job.seed, SeedStream::Sources),
    };
    Ok(scheduler.simulate(&users, &spec)?.metrics)
}

/// Worker pool sized by `COEXIST_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> SimResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| SimError::config(THREADS_ENV, format!("`{v}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| SimError::Pool(e.to_string()))
}

/// Runs every job of the scenario in parallel and sorts the results by key.
pub fn run_records(config: &ScenarioConfig) -> SimResult<ExperimentOutput> {
    config.validate()?;
    let start = Instant::now();
    let all = jobs(config);
    let pool = thread_pool()?;
    let mut records = pool.install(|| {
        all.par_iter()
            .map(|job| {
                run_job(config, job).map(|metrics| RunRecord { job: *job, metrics })
            })
            .collect::<SimResult<Vec<_>>>()
    })?;
    records.sort_by(|a, b| a.job.cmp_key(&b.job));
    if let Some(w) = records.windows(2).find(|w| w[0].job.cmp_key(&w[1].job) == Ordering::Equal) {
        return Err(SimError::DuplicateRow(w[1].row().key_string()));
    }
    Ok(ExperimentOutput {
        records,
        elapsed: start.elapsed(),
    })
}

/// Result rows of every job, sorted by key.
pub fn run_experiment(config: &ScenarioConfig) -> SimResult<Vec<ResultRow>> {
    Ok(run_records(config)?.rows())
}

/// Mean of `f` over the records matching `(scheme, n_urllc, epsilon)`.
pub fn mean_over_seeds(
    records: &[RunRecord],
    scheme: Policy,
    n_urllc: usize,
    epsilon: f64,
    f: impl Fn(&MetricSet) -> f64,
) -> Option<f64> {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.job.scheme == scheme && r.job.n_urllc == n_urllc && r.job.epsilon == epsilon)
        .map(|r| f(&r.metrics))
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Brute-force comparison on one random tiny instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub instance: u64,
    pub n_embb: usize,
    pub n_urllc: usize,
    pub rb_count: usize,
    pub minislots: usize,
    pub oracle_bits: f64,
    pub contract_bits: f64,
    pub puncture_bits: f64,
    pub grid_allowance_bits: f64,
    pub dominated: bool,
    pub contract_ge_puncture: bool,
}

/// Draws `instances` tiny instances from `seed` and checks the contract
/// heuristic against exhaustive search on each.
pub fn run_oracle(config: &ScenarioConfig, instances: u64, seed: u64) -> SimResult<Vec<OracleRow>> {
    use coexist_core::frame::rng_from_seed;
    use coexist_core::oracle::{check_dominance, TinyInstance};

    config.validate()?;
    let sc = config.scheduler_config(config.radio.error_target);
    let ladder = config.ladder()?;
    let pool = thread_pool()?;
    pool.install(|| {
        (0..instances)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(seed, i, SeedStream::Oracle));
                let inst = TinyInstance::random(&mut rng, sc.radio.urllc_max_power)?;
                let c = check_dominance(&inst, &sc, &ladder)?;
                Ok(OracleRow {
                    instance: i,
                    n_embb: inst.embb.len(),
                    n_urllc: inst.packets.len(),
                    rb_count: inst.rb_count,
                    minislots: inst.minislots,
                    oracle_bits: c.oracle,
                    contract_bits: c.contract,
                    puncture_bits: c.puncture,
                    grid_allowance_bits: c.grid_allowance,
                    dominated: c.oracle_dominates(),
                    contract_ge_puncture: c.contract_beats_puncture(),
                })
            })
            .collect()
    })
}
