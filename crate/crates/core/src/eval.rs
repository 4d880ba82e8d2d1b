//! Monte Carlo experiment harness.
//!
//! A batch walks the cross product of AP counts and area sizes, generates
//! `n_scenarios` deployments per combination from seeds derived off one
//! master seed, and evaluates every requested topology on the same
//! scenarios. Scenario evaluations are independent, so the batch runs on a
//! rayon pool when the `parallel` feature is on; records are collected in
//! deterministic (combination, scenario, topology) order either way, so
//! output never depends on thread count or interleaving.

use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpopt::{evaluate_lp, LpOptError};
use crate::multihop::evaluate_multihop;
use crate::pmp::{allocate_pmp, build_pmp, PmpError};
use crate::radio::{RadioConfig, RadioError};
use crate::scenario::{
    generate_scenario_with, scenario_to_bytes, GenOptions, Scenario, ScenarioError,
};

/// Which planner to run on a scenario. The declaration order is the
/// canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TopologyChoice {
    Pmp,
    Mh { max_hops: u32 },
    Lp,
}

impl TopologyChoice {
    pub const ALL: [TopologyChoice; 4] = [
        TopologyChoice::Pmp,
        TopologyChoice::Mh { max_hops: 2 },
        TopologyChoice::Mh { max_hops: 4 },
        TopologyChoice::Lp,
    ];
}

impl fmt::Display for TopologyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyChoice::Pmp => write!(f, "pmp"),
            TopologyChoice::Mh { max_hops } => write!(f, "mh{max_hops}"),
            TopologyChoice::Lp => write!(f, "lp"),
        }
    }
}

impl FromStr for TopologyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pmp" => Ok(TopologyChoice::Pmp),
            "mh2" => Ok(TopologyChoice::Mh { max_hops: 2 }),
            "mh4" => Ok(TopologyChoice::Mh { max_hops: 4 }),
            "lp" => Ok(TopologyChoice::Lp),
            other => Err(format!(
                "unknown topology {other:?}; expected pmp, mh2, mh4, or lp"
            )),
        }
    }
}

impl Serialize for TopologyChoice {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TopologyChoice {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome of one (scenario, topology) evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    pub scenario_seed: u64,
    pub topology: TopologyChoice,
    pub feasible: bool,
    pub served_mbps: f64,
    pub per_ap_served_mbps: Vec<f64>,
    pub total_demand_mbps: f64,
    /// Uniform demand scale actually served: 1.0 when feasible, the
    /// bisection result for overloaded plans, the served fraction for an
    /// overloaded star, `None` for LP-infeasible scenarios that are
    /// excluded from served-load aggregation.
    pub alpha: Option<f64>,
    /// True when hop/degree limits stranded a node (multi-hop only).
    pub unreachable: bool,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid batch config: {0}")]
    InvalidConfig(String),
    #[error("no records match the selection")]
    EmptySelection,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Pmp(#[from] PmpError),
    #[error(transparent)]
    LpOpt(#[from] LpOptError),
}

/// How to schedule batch evaluation. Without the `parallel` feature every
/// mode degrades to the sequential loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool.
    Auto,
    /// A dedicated pool with this many threads.
    Threads(usize),
}

/// The k-th value of the splitmix64 stream seeded with `master_seed`.
/// Derived seeds decorrelate neighboring indices while staying reproducible
/// across platforms.
pub fn scenario_seed(master_seed: u64, index: u64) -> u64 {
    let z = master_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the canonical scenario bytes; stored in every record so
/// cross-topology scenario identity is checkable after the fact.
pub fn scenario_hash(s: &Scenario) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in scenario_to_bytes(s) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Batch description. `Default` reproduces the headline experiment: areas
/// of 10 km, 2 to 10 APs, 2000 scenarios, demands {2,4,6,8,10} Mbit/s, all
/// four topologies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub radio: RadioConfig,
    pub n_aps_list: Vec<usize>,
    pub area_list_km: Vec<f64>,
    pub n_scenarios: usize,
    pub topologies: Vec<TopologyChoice>,
    pub master_seed: u64,
    pub demand_set_mbps: Vec<f64>,
    /// Pin the PoP to the area center instead of placing it randomly.
    pub pop_at_center: bool,
    /// Apply uniform demand scaling to LP-infeasible scenarios instead of
    /// excluding them from served-load aggregation.
    pub lp_alpha_fallback: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            radio: RadioConfig::default(),
            n_aps_list: (2..=10).collect(),
            area_list_km: vec![10.0],
            n_scenarios: 2000,
            topologies: TopologyChoice::ALL.to_vec(),
            master_seed: 1,
            demand_set_mbps: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            pop_at_center: false,
            lp_alpha_fallback: false,
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |msg: String| Err(EvalError::InvalidConfig(msg));
        if self.n_scenarios < 1 {
            return bad("n_scenarios must be at least 1".into());
        }
        if self.n_aps_list.is_empty() {
            return bad("n_aps_list must not be empty".into());
        }
        if self.n_aps_list.iter().any(|n| *n < 1) {
            return bad("every n_aps entry must be at least 1".into());
        }
        if self.area_list_km.is_empty() {
            return bad("area_list_km must not be empty".into());
        }
        if self
            .area_list_km
            .iter()
            .any(|a| !(a.is_finite() && *a > 0.0))
        {
            return bad("every area must be positive and finite".into());
        }
        if self.topologies.is_empty() {
            return bad("topologies must not be empty".into());
        }
        if self.demand_set_mbps.is_empty()
            || self
                .demand_set_mbps
                .iter()
                .any(|d| !(d.is_finite() && *d > 0.0))
        {
            return bad("demand set must be non-empty and positive".into());
        }
        self.radio
            .validate()
            .map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Requested topologies in canonical order without duplicates.
    pub fn topology_set(&self) -> Vec<TopologyChoice> {
        let mut set = self.topologies.clone();
        set.sort();
        set.dedup();
        set
    }
}

/// One (scenario, topology) row plus the batch coordinates that produced
/// it.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRecord {
    pub master_seed: u64,
    /// Scenario index within its (n_aps, area) combination; the seed stream
    /// is shared across combinations so sweeps vary one factor at a time.
    pub scenario_index: u64,
    pub scenario_seed: u64,
    pub n_aps: usize,
    pub area_km: f64,
    pub scenario_hash: u64,
    pub result: EvalResult,
}

/// Aggregates for one (n_aps, area, topology) group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub topology: TopologyChoice,
    pub n_aps: usize,
    pub area_km: f64,
    pub scenarios: usize,
    pub feasible_count: usize,
    pub feasibility_pct: f64,
    /// Mean served load over aggregatable records (those carrying an
    /// alpha); `None` when the group has no such records.
    pub mean_served_mbps: Option<f64>,
    /// Records included in the served-load mean.
    pub served_samples: usize,
    pub mean_demand_mbps: f64,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub records: Vec<ScenarioRecord>,
    pub summaries: Vec<GroupSummary>,
}

/// Evaluates one scenario under one topology.
pub fn evaluate_scenario(
    s: &Scenario,
    cfg: &RadioConfig,
    choice: TopologyChoice,
    lp_alpha_fallback: bool,
) -> Result<EvalResult, EvalError> {
    match choice {
        TopologyChoice::Pmp => {
            let topo = build_pmp(s, cfg)?;
            let alloc = allocate_pmp(&topo, s, cfg)?;
            let per_ap: Vec<f64> = alloc.per_ap.iter().map(|a| a.served_bps / 1e6).collect();
            let total_demand = s.total_demand_mbps();
            let served = if alloc.feasible {
                total_demand
            } else {
                per_ap.iter().sum()
            };
            let alpha = if alloc.feasible {
                1.0
            } else {
                served / total_demand
            };
            Ok(EvalResult {
                scenario_seed: s.seed,
                topology: TopologyChoice::Pmp,
                feasible: alloc.feasible,
                served_mbps: served,
                per_ap_served_mbps: per_ap,
                total_demand_mbps: total_demand,
                alpha: Some(alpha),
                unreachable: false,
            })
        }
        TopologyChoice::Mh { max_hops } => Ok(evaluate_multihop(s, cfg, max_hops)?),
        TopologyChoice::Lp => Ok(evaluate_lp(s, cfg, lp_alpha_fallback)?),
    }
}

/// Runs the full batch. Records are ordered by (combination, scenario
/// index, topology) regardless of the parallelism mode.
pub fn run_batch(cfg: &BatchConfig, par: Parallelism) -> Result<BatchResult, EvalError> {
    cfg.validate()?;
    let topologies = cfg.topology_set();
    let mut combos = Vec::new();
    for &n_aps in &cfg.n_aps_list {
        for &area_km in &cfg.area_list_km {
            combos.push((n_aps, area_km));
        }
    }
    let jobs: Vec<(usize, u64)> = combos
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| (0..cfg.n_scenarios as u64).map(move |k| (ci, k)))
        .collect();

    let eval_job = |&(ci, k): &(usize, u64)| -> Result<Vec<ScenarioRecord>, EvalError> {
        let (n_aps, area_km) = combos[ci];
        let seed = scenario_seed(cfg.master_seed, k);
        let opts = GenOptions {
            pop_at_center: cfg.pop_at_center,
        };
        let s = generate_scenario_with(n_aps, area_km, &cfg.demand_set_mbps, seed, &opts)?;
        let hash = scenario_hash(&s);
        topologies
            .iter()
            .map(|t| {
                let result = evaluate_scenario(&s, &cfg.radio, *t, cfg.lp_alpha_fallback)?;
                Ok(ScenarioRecord {
                    master_seed: cfg.master_seed,
                    scenario_index: k,
                    scenario_seed: seed,
                    n_aps,
                    area_km,
                    scenario_hash: hash,
                    result,
                })
            })
            .collect()
    };

    let nested = run_jobs(&jobs, par, eval_job)?;
    let records: Vec<ScenarioRecord> = nested.into_iter().flatten().collect();
    let summaries = summarize(&records);
    Ok(BatchResult { records, summaries })
}

#[cfg(feature = "parallel")]
fn run_jobs<F>(
    jobs: &[(usize, u64)],
    par: Parallelism,
    eval_job: F,
) -> Result<Vec<Vec<ScenarioRecord>>, EvalError>
where
    F: Fn(&(usize, u64)) -> Result<Vec<ScenarioRecord>, EvalError> + Sync,
{
    match par {
        Parallelism::Sequential => jobs.iter().map(&eval_job).collect(),
        Parallelism::Threads(n) if n <= 1 => jobs.iter().map(&eval_job).collect(),
        Parallelism::Auto => jobs.par_iter().map(&eval_job).collect(),
        Parallelism::Threads(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| EvalError::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(&eval_job).collect()),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<F>(
    jobs: &[(usize, u64)],
    _par: Parallelism,
    eval_job: F,
) -> Result<Vec<Vec<ScenarioRecord>>, EvalError>
where
    F: Fn(&(usize, u64)) -> Result<Vec<ScenarioRecord>, EvalError> + Sync,
{
    jobs.iter().map(&eval_job).collect()
}

/// Whether a record participates in served-load statistics. LP-infeasible
/// scenarios carry no alpha and are excluded unless the fallback mode
/// produced one.
fn aggregatable(r: &ScenarioRecord) -> bool {
    r.result.alpha.is_some()
}

/// Groups records by (n_aps, area, topology) in first-seen order.
pub fn summarize(records: &[ScenarioRecord]) -> Vec<GroupSummary> {
    struct Acc {
        n_aps: usize,
        area_km: f64,
        topology: TopologyChoice,
        scenarios: usize,
        feasible: usize,
        served_sum: f64,
        served_samples: usize,
        demand_sum: f64,
    }
    let mut groups: Vec<Acc> = Vec::new();
    for r in records {
        let key = (r.n_aps, r.area_km.to_bits(), r.result.topology);
        let acc = match groups
            .iter_mut()
            .find(|g| (g.n_aps, g.area_km.to_bits(), g.topology) == key)
        {
            Some(acc) => acc,
            None => {
                groups.push(Acc {
                    n_aps: r.n_aps,
                    area_km: r.area_km,
                    topology: r.result.topology,
                    scenarios: 0,
                    feasible: 0,
                    served_sum: 0.0,
                    served_samples: 0,
                    demand_sum: 0.0,
                });
                groups.last_mut().unwrap()
            }
        };
        acc.scenarios += 1;
        acc.feasible += usize::from(r.result.feasible);
        acc.demand_sum += r.result.total_demand_mbps;
        if aggregatable(r) {
            acc.served_sum += r.result.served_mbps;
            acc.served_samples += 1;
        }
    }
    groups
        .into_iter()
        .map(|g| GroupSummary {
            topology: g.topology,
            n_aps: g.n_aps,
            area_km: g.area_km,
            scenarios: g.scenarios,
            feasible_count: g.feasible,
            feasibility_pct: 100.0 * g.feasible as f64 / g.scenarios as f64,
            mean_served_mbps: (g.served_samples > 0)
                .then(|| g.served_sum / g.served_samples as f64),
            served_samples: g.served_samples,
            mean_demand_mbps: g.demand_sum / g.scenarios as f64,
        })
        .collect()
}

/// Sample filter for CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfFilter {
    All,
    /// Keep only scenarios feasible under every topology present in the
    /// record set.
    MutuallyFeasible,
}

impl fmt::Display for CdfFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CdfFilter::All => write!(f, "all"),
            CdfFilter::MutuallyFeasible => write!(f, "mutually-feasible"),
        }
    }
}

impl FromStr for CdfFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(CdfFilter::All),
            "mutually-feasible" => Ok(CdfFilter::MutuallyFeasible),
            other => Err(format!(
                "unknown filter {other:?}; expected all or mutually-feasible"
            )),
        }
    }
}

/// Empirical distribution of served load for one topology.
#[derive(Debug, Clone)]
pub struct Cdf {
    /// Sorted served-load samples in Mbit/s.
    pub samples: Vec<f64>,
    /// One (x, F(x)) pair per sample, F(x) = #{samples <= x} / n.
    pub points: Vec<(f64, f64)>,
}

fn scenario_key(r: &ScenarioRecord) -> (usize, u64, u64) {
    (r.n_aps, r.area_km.to_bits(), r.scenario_index)
}

/// Served-load CDF over the records of `topology`, after filtering.
/// LP-infeasible records without an alpha never contribute samples.
pub fn served_load_cdf(
    records: &[ScenarioRecord],
    topology: TopologyChoice,
    filter: CdfFilter,
) -> Result<Cdf, EvalError> {
    let selected: Vec<&ScenarioRecord> = match filter {
        CdfFilter::All => records
            .iter()
            .filter(|r| r.result.topology == topology && aggregatable(r))
            .collect(),
        CdfFilter::MutuallyFeasible => {
            let mut infeasible_keys = std::collections::HashSet::new();
            for r in records {
                if !r.result.feasible {
                    infeasible_keys.insert(scenario_key(r));
                }
            }
            records
                .iter()
                .filter(|r| {
                    r.result.topology == topology
                        && !infeasible_keys.contains(&scenario_key(r))
                })
                .collect()
        }
    };
    if selected.is_empty() {
        return Err(EvalError::EmptySelection);
    }
    let mut samples: Vec<f64> = selected.iter().map(|r| r.result.served_mbps).collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut points = Vec::with_capacity(samples.len());
    let mut i = 0;
    while i < samples.len() {
        let mut j = i;
        while j + 1 < samples.len() && samples[j + 1] == samples[i] {
            j += 1;
        }
        let f = (j + 1) as f64 / n;
        for _ in i..=j {
            points.push((samples[i], f));
        }
        i = j + 1;
    }
    Ok(Cdf { samples, points })
}

/// Percentage of feasible records for one topology.
pub fn feasibility_rate(
    records: &[ScenarioRecord],
    topology: TopologyChoice,
) -> Result<f64, EvalError> {
    let mut total = 0usize;
    let mut feasible = 0usize;
    for r in records {
        if r.result.topology == topology {
            total += 1;
            feasible += usize::from(r.result.feasible);
        }
    }
    if total == 0 {
        return Err(EvalError::EmptySelection);
    }
    Ok(100.0 * feasible as f64 / total as f64)
}
