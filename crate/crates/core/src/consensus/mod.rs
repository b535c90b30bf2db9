//! Distributed averaging over lossy star links: authenticated gossip (A),
//! smart-contract averaging (B) and transaction-based averaging (C).

mod graph;
mod methods;

pub use graph::{build_graph, GossipGraph, MAX_GRAPH_ATTEMPTS};
pub use methods::{gossip_step, ContractAveraging, TransactionAveraging, Traffic};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dlt::{builtin_profile, Bytes, DltError, DltName, DltProfile};
use crate::kernel::{Kernel, RngStream};
use crate::sync::SyncConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("a {k}-out graph needs n > k >= 1 distinct nodes, got n = {n}")]
    GraphShape { n: usize, k: usize },
    #[error("no strongly connected sample in {attempts} attempts")]
    NotConnected { attempts: u32 },
    #[error("unknown method {0:?}; expected A, B or C")]
    UnknownMethod(String),
    #[error("invalid averaging setting: {0}")]
    Config(String),
    #[error(transparent)]
    Dlt(#[from] DltError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Authenticated push gossip to one random neighbor per period.
    A,
    /// Values sent to one averaging contract; devices adopt its mean.
    B,
    /// Values sent as plain transactions; devices watch their neighbors' ones.
    C,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::A, Method::B, Method::C];

    pub fn key(self) -> &'static str {
        match self {
            Method::A => "A",
            Method::B => "B",
            Method::C => "C",
        }
    }

    pub fn uses_ledger(self) -> bool {
        self != Method::A
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = ConsensusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Method::A),
            "B" | "b" => Ok(Method::B),
            "C" | "c" => Ok(Method::C),
            other => Err(ConsensusError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    /// Transmission period T.
    pub period_s: f64,
    /// Block period T_B.
    pub block_period_s: f64,
    /// Loss probability of each UL or DL leg.
    pub p: f64,
    pub periods: u32,
}

impl MethodConfig {
    pub fn baseline(method: Method) -> Self {
        Self {
            method,
            period_s: 10.0,
            block_period_s: 10.0,
            p: 0.1,
            periods: 30,
        }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(ConsensusError::Config(format!("p = {} outside [0, 1]", self.p)));
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite())
            || !(self.block_period_s > 0.0 && self.block_period_s.is_finite())
        {
            return Err(ConsensusError::Config(
                "periods T and T_B must be positive and finite".into(),
            ));
        }
        if self.periods == 0 {
            return Err(ConsensusError::Config("at least one period is required".into()));
        }
        Ok(())
    }
}

/// Everything shared by the three methods apart from the graph and values.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingEnv {
    /// Ledger used by methods B and C; its block period is replaced by T_B.
    pub profile: DltProfile,
    pub sync: SyncConfig,
    pub value_bytes: Bytes,
    pub signature_bytes: Bytes,
}

impl Default for AveragingEnv {
    fn default() -> Self {
        Self {
            profile: builtin_profile(DltName::Ethereum),
            sync: SyncConfig::default(),
            value_bytes: 4,
            signature_bytes: 72,
        }
    }
}

/// Metrics for one transmission period, averaged over devices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub period: u32,
    pub time_s: f64,
    pub convergence_error: f64,
    pub ul_bytes: f64,
    pub dl_bytes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: Method,
    pub records: Vec<PeriodRecord>,
    /// Device values at the end of every period.
    pub snapshots: Vec<Vec<f32>>,
}

/// Initial estimates, uniform on `[lo, hi]`, from the `case2.init` stream.
pub fn initial_values(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f32> {
    let mut rng = RngStream::new(seed, "case2.init");
    (0..n).map(|_| rng.uniform(lo, hi) as f32).collect()
}

/// Arithmetic mean of the initial values, rounded to the 32-bit grid the
/// devices compute on.
pub fn target_mean(initial: &[f32]) -> f64 {
    let sum: f64 = initial.iter().map(|&v| f64::from(v)).sum();
    f64::from((sum / initial.len() as f64) as f32)
}

/// Root-mean-square deviation of `values` from `target`.
pub fn convergence_error(values: &[f32], target: f64) -> f64 {
    let sq: f64 = values
        .iter()
        .map(|&v| (f64::from(v) - target).powi(2))
        .sum();
    (sq / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tick {
    Block,
    Sample(u32),
    Submit(u32),
}

impl Tick {
    /// Same-instant order: a block seals what was sent before it, the
    /// period is sampled, and only then do devices send again.
    fn class(self) -> u8 {
        match self {
            Tick::Block => 0,
            Tick::Sample(_) => 1,
            Tick::Submit(_) => 2,
        }
    }
}

/// Runs one method for `cfg.periods` periods.
///
/// Devices transmit at `k * T`, blocks are sealed at `j * T_B` (j >= 1) and
/// period `k` is sampled at `(k + 1) * T`. Losses come from the stream
/// `case2.<method>.loss` of `seed`, drawn as documented on the step functions.
pub fn simulate(
    graph: &GossipGraph,
    initial: &[f32],
    cfg: &MethodConfig,
    env: &AveragingEnv,
    seed: u64,
) -> Result<MethodRun, ConsensusError> {
    cfg.validate()?;
    if initial.len() != graph.len() {
        return Err(ConsensusError::Config(format!(
            "{} initial values for {} devices",
            initial.len(),
            graph.len()
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(ConsensusError::Config("initial values must be finite".into()));
    }

    let horizon = f64::from(cfg.periods) * cfg.period_s;
    let mut ticks: Vec<(f64, Tick)> = Vec::new();
    for k in 0..cfg.periods {
        ticks.push((f64::from(k) * cfg.period_s, Tick::Submit(k)));
        ticks.push((f64::from(k + 1) * cfg.period_s, Tick::Sample(k)));
    }
    if cfg.method.uses_ledger() {
        let mut j = 1u32;
        while f64::from(j) * cfg.block_period_s <= horizon {
            ticks.push((f64::from(j) * cfg.block_period_s, Tick::Block));
            j += 1;
        }
    }
    ticks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.class().cmp(&b.1.class())));
    let mut kernel = Kernel::new();
    for (at, tick) in ticks {
        kernel.schedule(at, tick).expect("ticks are finite and sorted");
    }

    let profile = DltProfile {
        block_period: Some(cfg.block_period_s),
        ..env.profile.clone()
    };
    profile.validate()?;
    let mut rng = RngStream::new(seed, format!("case2.{}.loss", cfg.method));
    let mut values = initial.to_vec();
    let mut traffic = Traffic::new(values.len());
    let target = target_mean(initial);
    let mut contract = ContractAveraging::new(profile.clone())?;
    let mut transactions = TransactionAveraging::new(profile)?;
    let mut run = MethodRun {
        method: cfg.method,
        records: Vec::with_capacity(cfg.periods as usize),
        snapshots: Vec::with_capacity(cfg.periods as usize),
    };

    while let Some(ev) = kernel.next_until(f64::INFINITY) {
        let now = ev.fire_time;
        match (ev.kind, cfg.method) {
            (Tick::Submit(_), Method::A) => gossip_step(
                graph,
                &mut values,
                cfg.p,
                &mut rng,
                &mut traffic,
                env.value_bytes + env.signature_bytes,
                env.value_bytes,
            ),
            (Tick::Submit(_), Method::B) => {
                contract.submit(&values, cfg.p, &mut rng, &mut traffic, env.value_bytes)?
            }
            (Tick::Submit(_), Method::C) => {
                transactions.submit(&values, cfg.p, &mut rng, &mut traffic, env.value_bytes)?
            }
            (Tick::Block, Method::B) => {
                contract.on_block(now, &mut values, cfg.p, &mut rng, &mut traffic, &env.sync)?
            }
            (Tick::Block, Method::C) => transactions.on_block(
                now,
                graph,
                &mut values,
                cfg.p,
                &mut rng,
                &mut traffic,
                &env.sync,
            )?,
            (Tick::Block, Method::A) => {}
            (Tick::Sample(k), _) => {
                run.records.push(PeriodRecord {
                    period: k,
                    time_s: now,
                    convergence_error: convergence_error(&values, target),
                    ul_bytes: traffic.mean_ul(),
                    dl_bytes: traffic.mean_dl(),
                });
                run.snapshots.push(values.clone());
                traffic.reset();
            }
        }
    }
    Ok(run)
}
