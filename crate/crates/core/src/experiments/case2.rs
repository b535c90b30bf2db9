use rayon::prelude::*;

use crate::consensus::{build_graph, initial_values, simulate, AveragingEnv, Method, MethodConfig};

use super::{ExperimentError, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Case2Row {
    pub seed: u64,
    pub method: Method,
    pub period: u32,
    pub time_s: f64,
    pub convergence_error: f64,
    pub ul_bytes: f64,
    pub dl_bytes: f64,
}

pub fn averaging_env(cfg: &ScenarioConfig) -> AveragingEnv {
    AveragingEnv {
        profile: cfg.profile(cfg.case2.dlt).clone(),
        sync: cfg.sync.clone(),
        value_bytes: cfg.case2.value_bytes,
        signature_bytes: cfg.case2.signature_bytes,
    }
}

/// Runs one seed: every configured method on the same graph and initial values.
pub fn simulate_case2(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Case2Row>, ExperimentError> {
    let c2 = &cfg.case2;
    let graph = build_graph(c2.n, c2.k, seed)?;
    let initial = initial_values(c2.n, c2.init_min, c2.init_max, seed);
    let env = averaging_env(cfg);
    let mut rows = Vec::new();
    for &method in &c2.methods {
        let mc = MethodConfig {
            method,
            period_s: c2.period_s,
            block_period_s: c2.block_period_s,
            p: c2.p,
            periods: c2.periods,
        };
        let run = simulate(&graph, &initial, &mc, &env, seed)?;
        rows.extend(run.records.into_iter().map(|r| Case2Row {
            seed,
            method,
            period: r.period,
            time_s: r.time_s,
            convergence_error: r.convergence_error,
            ul_bytes: r.ul_bytes,
            dl_bytes: r.dl_bytes,
        }));
    }
    Ok(rows)
}

/// All seeds in parallel; rows ordered by seed, method, period.
pub fn run_case2(cfg: &ScenarioConfig) -> Result<Vec<Case2Row>, ExperimentError> {
    cfg.validate()?;
    let per_seed: Vec<Vec<Case2Row>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| simulate_case2(cfg, seed))
        .collect::<Result<_, _>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Mean of a column over seeds, per method and period.
pub fn mean_by_period(
    rows: &[Case2Row],
    method: Method,
    column: impl Fn(&Case2Row) -> f64,
) -> Vec<(u32, f64)> {
    let mut acc: std::collections::BTreeMap<u32, (f64, usize)> = Default::default();
    for r in rows.iter().filter(|r| r.method == method) {
        let e = acc.entry(r.period).or_default();
        e.0 += column(r);
        e.1 += 1;
    }
    acc.into_iter().map(|(p, (s, n))| (p, s / n as f64)).collect()
}
