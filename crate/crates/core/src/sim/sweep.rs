use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use super::{run_one, ExperimentConfig, ExperimentOutcome, PolicySpec, SimError};
use crate::concentration::delta_tilde;

pub const CSV_HEADER: &str =
    "policy,alpha,log_inv_delta,mean_tau,se_tau,mean_regret,se_regret,error_rate,nodecision_rate";

/// Version string embedded in JSON output.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// An order statistic of decision times where runs without a decision
/// count as +∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub enum Quantile {
    Steps(u64),
    NoDecision,
}

impl Quantile {
    pub fn steps(&self) -> Option<u64> {
        match self {
            Quantile::Steps(t) => Some(*t),
            Quantile::NoDecision => None,
        }
    }
}

impl Serialize for Quantile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Quantile::Steps(t) => s.serialize_u64(*t),
            Quantile::NoDecision => s.serialize_str("NoDecision"),
        }
    }
}

/// Statistics of one (policy, δ) cell.
///
/// Means and standard errors of τ and regret are over the replications that
/// decided; they are `None` when fewer than one (mean) or two (standard
/// error) replications did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub policy: String,
    pub alpha: Option<String>,
    pub log_inv_delta: f64,
    pub delta: f64,
    pub delta_tilde: f64,
    pub replications: u64,
    pub decided: u64,
    pub mean_tau: Option<f64>,
    pub se_tau: Option<f64>,
    pub mean_regret: Option<f64>,
    pub se_regret: Option<f64>,
    pub mean_realized_regret: Option<f64>,
    pub error_rate: f64,
    pub nodecision_rate: f64,
    /// Fraction of replications whose estimates left the stopping radius.
    pub concentration_failure_rate: f64,
    /// Empirical `(1 − δ̃)`-quantile of τ.
    pub tau_quantile: Quantile,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub rows: Vec<AggregateRow>,
}

fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (Some(mean), Some((ss / (n - 1) as f64 / n as f64).sqrt()))
}

/// The `⌈(1−q)·n⌉`-th smallest decision time (at least the first).
fn upper_quantile(outcomes: &[ExperimentOutcome], q: f64) -> Quantile {
    let mut taus: Vec<Quantile> = outcomes
        .iter()
        .map(|o| o.decision_step.map_or(Quantile::NoDecision, Quantile::Steps))
        .collect();
    taus.sort_unstable();
    let rank = ((1.0 - q) * taus.len() as f64).ceil() as usize;
    taus[rank.clamp(1, taus.len()) - 1]
}

/// Summarizes the replications of one cell, in replication order.
pub fn aggregate(
    policy: &PolicySpec,
    log_inv_delta: f64,
    outcomes: &[ExperimentOutcome],
) -> Result<AggregateRow, SimError> {
    if outcomes.is_empty() {
        return Err(SimError::Config("no replications to aggregate".into()));
    }
    let delta = (-log_inv_delta).exp();
    let dt = delta_tilde(delta)?.value();
    let reps = outcomes.len() as f64;
    let decided: Vec<&ExperimentOutcome> =
        outcomes.iter().filter(|o| o.decision_step.is_some()).collect();
    let taus: Vec<f64> = decided.iter().map(|o| o.decision_step.unwrap() as f64).collect();
    let regrets: Vec<f64> = decided.iter().map(|o| o.pseudo_regret).collect();
    let realized: Vec<f64> = decided.iter().map(|o| o.realized_regret).collect();
    let (mean_tau, se_tau) = mean_se(&taus);
    let (mean_regret, se_regret) = mean_se(&regrets);
    let count = |f: &dyn Fn(&ExperimentOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    Ok(AggregateRow {
        policy: policy.name().to_string(),
        alpha: policy.alpha().map(|a| a.to_string()),
        log_inv_delta,
        delta,
        delta_tilde: dt,
        replications: outcomes.len() as u64,
        decided: decided.len() as u64,
        mean_tau,
        se_tau,
        mean_regret,
        se_regret,
        mean_realized_regret: mean_se(&realized).0,
        error_rate: count(&|o| o.decision_step.is_some() && !o.correct) as f64 / reps,
        nodecision_rate: count(&|o| o.decision_step.is_none()) as f64 / reps,
        concentration_failure_rate: count(&|o| !o.concentration_held) as f64 / reps,
        tau_quantile: upper_quantile(outcomes, dt),
    })
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, SimError> {
    if threads == Some(0) {
        return Err(SimError::Config("threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Cells in output order: policies as configured, then `log(1/δ)` ascending.
fn cells(config: &ExperimentConfig) -> Vec<(PolicySpec, usize)> {
    let mut grid: Vec<usize> = (0..config.log_inv_delta.len()).collect();
    grid.sort_by(|&a, &b| config.log_inv_delta[a].total_cmp(&config.log_inv_delta[b]));
    config.policies.iter().flat_map(|p| grid.iter().map(move |&i| (*p, i))).collect()
}

/// Every outcome of the sweep, grouped by cell in output order and by
/// replication index within a cell.
pub fn sweep_outcomes(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<(PolicySpec, usize, Vec<ExperimentOutcome>)>, SimError> {
    config.validate()?;
    let cells = cells(config);
    let reps = config.replications;
    let tasks: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let outcomes: Vec<ExperimentOutcome> = with_threads(threads, || {
        tasks
            .par_iter()
            .map(|&(c, r)| run_one(config, &cells[c].0, cells[c].1, r))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let mut it = outcomes.into_iter();
    Ok(cells
        .into_iter()
        .map(|(p, i)| (p, i, it.by_ref().take(reps as usize).collect()))
        .collect())
}

/// Runs the full policies × δ-grid × replications cross-product.
///
/// Replications run on up to `threads` workers (all cores when `None`);
/// aggregation is serial over outcomes sorted by replication index, so the
/// result does not depend on the thread count.
pub fn sweep(config: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult, SimError> {
    let rows = sweep_outcomes(config, threads)?
        .iter()
        .map(|(p, i, outs)| aggregate(p, config.log_inv_delta[*i], outs))
        .collect::<Result<_, _>>()?;
    Ok(SweepResult { config: config.clone(), rows })
}

fn na(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// CSV with the resolved config echoed as `#! ` lines above the header.
/// Undefined statistics are written as `NA`.
pub fn write_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    for line in result.config.to_kv().lines() {
        let _ = writeln!(out, "#! {line}");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.policy,
            r.alpha.as_deref().unwrap_or("NA"),
            r.log_inv_delta,
            na(r.mean_tau),
            na(r.se_tau),
            na(r.mean_regret),
            na(r.se_regret),
            r.error_rate,
            r.nodecision_rate,
        );
    }
    out
}

/// JSON with the version, the resolved config and every row.
pub fn write_json(result: &SweepResult) -> String {
    let doc = serde_json::json!({
        "version": VERSION,
        "config": result.config.to_json(),
        "rows": result.rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("rows serialize");
    s.push('\n');
    s
}
