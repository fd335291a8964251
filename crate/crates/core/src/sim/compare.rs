use serde::{Deserialize, Serialize};

use super::{AggregateRow, ExperimentConfig, PolicySpec, Quantile, Setting};
use crate::concentration::{
    bound_report_etc_mm, bound_report_iid, bound_report_mm, Alpha, BoundReport,
    ConcentrationError, IidAlgorithm,
};

/// Empirical high-probability decision time next to the theoretical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub policy: String,
    pub alpha: Option<String>,
    pub log_inv_delta: f64,
    pub tau_quantile: Quantile,
    pub decision_time_bound: Option<f64>,
    /// Whether the bound is the exact (non-asymptotic) form.
    pub exact_form: bool,
    /// `tau_quantile / decision_time_bound`.
    pub ratio: Option<f64>,
    /// `None` when there is no finite bound to compare with.
    pub within_bound: Option<bool>,
    pub note: Option<String>,
}

fn bound_for(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    delta: f64,
) -> Result<Option<BoundReport>, ConcentrationError> {
    let gap = config.gap();
    let k = config.means.len();
    // Exact forms exist for two arms only.
    let exact = k == 2;
    let iid = |alg| bound_report_iid(alg, delta, gap, config.sigma_sq, k, exact).map(Some);
    let (sr, se) = (config.sigma_r_sq, config.sigma_eps_sq);
    let mm = |a: Alpha| bound_report_mm(a, delta, gap, sr, se, true, config.mm_scale).map(Some);
    match (config.setting, policy) {
        (Setting::Iid, PolicySpec::Etc) => iid(IidAlgorithm::Etc),
        (Setting::Iid, PolicySpec::Ucb(a)) => iid(IidAlgorithm::Ucb(*a)),
        (Setting::Iid, PolicySpec::EtcPrime) => iid(IidAlgorithm::Ucb(Alpha::INFINITY)),
        (Setting::Unit, PolicySpec::UcbMm(a)) => mm(*a),
        (Setting::Unit, PolicySpec::EtcPrime) => mm(Alpha::INFINITY),
        (Setting::Unit, PolicySpec::EtcMm) => {
            bound_report_etc_mm(delta, gap, sr, se, true).map(Some)
        }
        _ => Ok(None),
    }
}

/// Juxtaposes each row's `(1−δ̃)`-quantile of τ with the theoretical `T_δ`.
///
/// Rows whose policy has no finite bound (α ≤ 1, static tests, degenerate
/// parameters) are reported with a note instead of a ratio.
pub fn compare_to_bounds(config: &ExperimentConfig, rows: &[AggregateRow]) -> Vec<BoundComparison> {
    let policies: Vec<(String, Option<String>, PolicySpec)> = config
        .policies
        .iter()
        .map(|p| (p.name().to_string(), p.alpha().map(|a| a.to_string()), *p))
        .collect();
    rows.iter()
        .map(|row| {
            let policy = policies
                .iter()
                .find(|(n, a, _)| *n == row.policy && *a == row.alpha)
                .map(|(_, _, p)| *p);
            let (bound, note) = match policy.map(|p| bound_for(config, &p, row.delta)) {
                None => (None, Some("policy not in config".to_string())),
                Some(Ok(Some(report))) => match report.decision_time_bound {
                    Some(t) => (Some((t, report.exact_form)), None),
                    None => (None, Some("no finite bound".to_string())),
                },
                Some(Ok(None)) => (None, Some("no bound for this policy".to_string())),
                Some(Err(ConcentrationError::NoGuarantee { .. })) => {
                    (None, Some("no finite bound".to_string()))
                }
                Some(Err(e)) => (None, Some(e.to_string())),
            };
            let ratio = match (bound, row.tau_quantile) {
                (Some((t, _)), Quantile::Steps(q)) => Some(q as f64 / t),
                _ => None,
            };
            BoundComparison {
                policy: row.policy.clone(),
                alpha: row.alpha.clone(),
                log_inv_delta: row.log_inv_delta,
                tau_quantile: row.tau_quantile,
                decision_time_bound: bound.map(|b| b.0),
                exact_form: bound.is_some_and(|b| b.1),
                ratio,
                within_bound: bound.map(|(t, _)| row.tau_quantile.steps().is_some_and(|q| q as f64 <= t)),
                note,
            }
        })
        .collect()
}
