use serde::{Deserialize, Serialize};

use super::sample_size::solve_sample_size_scaled;
use super::{
    c_alpha, check_delta, check_positive, clamped_ln, Alpha, ConcentrationError, MmLogScale,
};

/// Algorithms with an iid decision-time guarantee. ETC' is `Ucb(Alpha::INFINITY)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IidAlgorithm {
    Etc,
    Ucb(Alpha),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_alpha: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

/// Predicted decision time `T_δ` and regret at decision.
///
/// `decision_time_bound` is `None` when no finite bound exists (α = 1). For
/// leading-order reports the `*_log_coefficient` fields hold the factor in
/// front of the log term so they can be compared without the log itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub decision_time_bound: Option<f64>,
    pub regret_bound: f64,
    pub constants: BoundConstants,
    pub exact_form: bool,
    pub time_log_coefficient: Option<f64>,
    pub regret_log_coefficient: Option<f64>,
}

fn check_alpha(alpha: Alpha) -> Result<(), ConcentrationError> {
    match alpha.finite() {
        Some(a) if a < 1.0 => Err(ConcentrationError::NoGuarantee { alpha: a }),
        _ => Ok(()),
    }
}

/// `ln ln x` with both logarithms clamped below at 1.
fn loglog(x: f64) -> f64 {
    clamped_ln(clamped_ln(x))
}

/// `ln ln(2C·max{ln(2/δ), 2 ln(2C)})`, inner log clamped at 1.
fn ucb_loglog(c: f64, delta: f64) -> f64 {
    let inner = 2.0 * c * (2.0 / delta).ln().max(2.0 * (2.0 * c).ln());
    clamped_ln(inner).ln()
}

/// Bounds for the iid algorithms with `k` arms sharing the same gap.
pub fn bound_report_iid(
    algorithm: IidAlgorithm,
    delta: f64,
    gap: f64,
    sigma_sq: f64,
    k: usize,
    exact: bool,
) -> Result<BoundReport, ConcentrationError> {
    check_delta(delta)?;
    check_positive("gap", gap)?;
    check_positive("sigma_sq", sigma_sq)?;
    if k < 2 {
        return Err(ConcentrationError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    if exact && k > 2 {
        return Err(ConcentrationError::NoExactForm("more than two arms"));
    }
    let g2 = gap * gap;
    let kf = k as f64;
    match algorithm {
        IidAlgorithm::Etc if exact => {
            let a = 32.0 * sigma_sq / g2;
            let l = (1.0 / delta).ln();
            let bracket = l + 2.0 * clamped_ln(a * l.max(2.0 * a.ln())).ln();
            Ok(BoundReport {
                decision_time_bound: Some(a * bracket),
                regret_bound: 16.0 * sigma_sq / gap * bracket,
                constants: BoundConstants::default(),
                exact_form: true,
                time_log_coefficient: None,
                regret_log_coefficient: None,
            })
        }
        IidAlgorithm::Etc => {
            let (time_coef, regret_coef, log) = if k == 2 {
                (32.0 * sigma_sq / g2, 16.0 * sigma_sq / gap, (1.0 / delta).ln())
            } else {
                (kf * 32.0 * sigma_sq / g2, (kf - 1.0) * 32.0 * sigma_sq / gap, (kf / delta).ln())
            };
            Ok(BoundReport {
                decision_time_bound: Some(time_coef * log),
                regret_bound: regret_coef * log,
                constants: BoundConstants::default(),
                exact_form: false,
                time_log_coefficient: Some(time_coef),
                regret_log_coefficient: Some(regret_coef),
            })
        }
        IidAlgorithm::Ucb(alpha) if exact => {
            check_alpha(alpha)?;
            let m = alpha.exploration_min();
            let ratio = alpha.pull_ratio_factor();
            let c1 = 2.0 * sigma_sq * m / g2 + 1.0;
            let c2 = ratio * c1 + 1.0;
            let l = (2.0 / delta).ln();
            let time = c2.is_finite().then(|| {
                (c1 + c2) * l + 2.0 * c1 * ucb_loglog(c1, delta) + 2.0 * c2 * ucb_loglog(c2, delta)
            });
            Ok(BoundReport {
                decision_time_bound: time,
                regret_bound: (2.0 * sigma_sq * m / gap + gap) * (l + 2.0 * ucb_loglog(c1, delta)),
                constants: BoundConstants {
                    c_alpha: Some(c_alpha(alpha)),
                    c1: Some(c1),
                    c2: c2.is_finite().then_some(c2),
                    ..Default::default()
                },
                exact_form: true,
                time_log_coefficient: None,
                regret_log_coefficient: None,
            })
        }
        IidAlgorithm::Ucb(alpha) => {
            check_alpha(alpha)?;
            let c = c_alpha(alpha);
            let (time_coef, regret_coef, log) = if k == 2 {
                let t = alpha.decision_time_factor() * (16.0 * sigma_sq * c / g2 + 1.0);
                (t, 8.0 * sigma_sq * c / gap + gap, (1.0 / delta).ln())
            } else {
                let per_arm = 8.0 * sigma_sq * c / g2;
                let t = alpha.pull_ratio_factor() * (per_arm + 1.0) + (kf - 1.0) * per_arm + kf;
                (t, (kf - 1.0) * (8.0 * sigma_sq * c / gap + gap), (kf / delta).ln())
            };
            let time_coef = time_coef.is_finite().then_some(time_coef);
            Ok(BoundReport {
                decision_time_bound: time_coef.map(|t| t * log),
                regret_bound: regret_coef * log,
                constants: BoundConstants { c_alpha: Some(c), ..Default::default() },
                exact_form: false,
                time_log_coefficient: time_coef,
                regret_log_coefficient: Some(regret_coef),
            })
        }
    }
}

/// Bounds for UCB-MM_α (two populations, one unit per step).
///
/// The exact form uses the sample-size equation with
/// `γ₁ = min{(α+1)², 16α²/(α−1)²} + Δ²` and `γ₂ = (α+1)²/(α−1)²·γ₁ + Δ²`,
/// counting one extra unit per population for the allocation at the
/// deciding step.
pub fn bound_report_mm(
    alpha: Alpha,
    delta: f64,
    gap: f64,
    sigma_r_sq: f64,
    sigma_eps_sq: f64,
    exact: bool,
    scale: MmLogScale,
) -> Result<BoundReport, ConcentrationError> {
    check_alpha(alpha)?;
    check_delta(delta)?;
    check_positive("gap", gap)?;
    check_positive("sigma_r_sq", sigma_r_sq)?;
    check_positive("sigma_eps_sq", sigma_eps_sq)?;
    let g2 = gap * gap;
    let m = alpha.exploration_min();
    let ratio = alpha.pull_ratio_factor();
    let gamma1 = m + g2;
    let gamma2 = ratio * gamma1 + g2;
    let c = c_alpha(alpha);
    let mut constants = BoundConstants {
        c_alpha: Some(c),
        gamma1: Some(gamma1),
        gamma2: gamma2.is_finite().then_some(gamma2),
        ..Default::default()
    };
    if exact {
        let n_b = solve_sample_size_scaled(gamma1, gap, sigma_r_sq, sigma_eps_sq, delta, scale)?;
        let n_a = if gamma2.is_finite() {
            Some(solve_sample_size_scaled(gamma2, gap, sigma_r_sq, sigma_eps_sq, delta, scale)?)
        } else {
            None
        };
        return Ok(BoundReport {
            decision_time_bound: n_a.map(|n_a| (n_a + n_b + 1) as f64),
            regret_bound: gap * (n_b + 1) as f64,
            constants,
            exact_form: true,
            time_log_coefficient: None,
            regret_log_coefficient: None,
        });
    }
    let log = (1.0 / delta).ln();
    let ll = loglog(1.0 / delta);
    let spread = sigma_r_sq / sigma_eps_sq;
    let regret_coef = 8.0 * sigma_r_sq * c / gap + gap;
    let time_coef = alpha.decision_time_factor() * (16.0 * sigma_r_sq * c / g2 + 1.0);
    let time_coef = time_coef.is_finite().then_some(time_coef);
    constants.gamma2 = constants.gamma2.filter(|_| time_coef.is_some());
    Ok(BoundReport {
        decision_time_bound: time_coef.map(|t| t * log + 2.0 * spread * gap * ll),
        regret_bound: regret_coef * log + spread * gap * ll,
        constants,
        exact_form: false,
        time_log_coefficient: time_coef,
        regret_log_coefficient: Some(regret_coef),
    })
}

/// Bounds for ETC-MM (two units per step, one per population).
pub fn bound_report_etc_mm(
    delta: f64,
    gap: f64,
    sigma_r_sq: f64,
    sigma_eps_sq: f64,
    exact: bool,
) -> Result<BoundReport, ConcentrationError> {
    check_delta(delta)?;
    check_positive("gap", gap)?;
    check_positive("sigma_r_sq", sigma_r_sq)?;
    check_positive("sigma_eps_sq", sigma_eps_sq)?;
    if exact {
        // No decision while the threshold exceeds Δ/2, i.e. LHS(n) ≥ Δ²/8.
        let n = solve_sample_size_scaled(
            8.0,
            gap,
            sigma_r_sq,
            sigma_eps_sq,
            delta,
            MmLogScale::ProofForm,
        )? + 1;
        return Ok(BoundReport {
            decision_time_bound: Some(2.0 * n as f64),
            regret_bound: gap * n as f64,
            constants: BoundConstants { gamma1: Some(8.0), ..Default::default() },
            exact_form: true,
            time_log_coefficient: None,
            regret_log_coefficient: None,
        });
    }
    let time_coef = 32.0 * sigma_r_sq / (gap * gap);
    let time = time_coef * (1.0 / delta).ln() + sigma_eps_sq / sigma_r_sq * loglog(1.0 / delta);
    Ok(BoundReport {
        decision_time_bound: Some(time),
        regret_bound: 0.5 * gap * time,
        constants: BoundConstants::default(),
        exact_form: false,
        time_log_coefficient: Some(time_coef),
        regret_log_coefficient: Some(0.5 * gap * time_coef),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn etc_leading_coefficients() {
        let r = bound_report_iid(IidAlgorithm::Etc, 0.01, 1.0, 1.0, 2, false).unwrap();
        assert_eq!(r.time_log_coefficient, Some(32.0));
        assert_eq!(r.regret_log_coefficient, Some(16.0));
        assert!((r.decision_time_bound.unwrap() - 32.0 * 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ucb_regret_coefficient_near_one() {
        let r = bound_report_iid(IidAlgorithm::Ucb(a(1.0 + 1e-9)), 0.01, 1.0, 1.0, 2, false)
            .unwrap();
        // (8σ²c/Δ + Δ) with c → 1; the +Δ is the non-vanishing part.
        assert!((r.regret_log_coefficient.unwrap() - 9.0).abs() < 1e-6);
        let at_one = bound_report_iid(IidAlgorithm::Ucb(Alpha::ONE), 0.01, 1.0, 1.0, 2, false)
            .unwrap();
        assert_eq!(at_one.decision_time_bound, None);
        assert!(bound_report_iid(IidAlgorithm::Ucb(a(0.5)), 0.01, 1.0, 1.0, 2, false).is_err());
    }

    #[test]
    fn etc_prime_leading_terms() {
        let r = bound_report_iid(IidAlgorithm::Ucb(Alpha::INFINITY), 0.01, 1.0, 1.0, 2, false)
            .unwrap();
        assert_eq!(r.regret_log_coefficient, Some(33.0));
        assert_eq!(r.time_log_coefficient, Some(65.0));
    }

    #[test]
    fn exact_c1_example() {
        let r = bound_report_iid(IidAlgorithm::Ucb(a(2.0)), 0.01, 1.0, 1.0, 2, true).unwrap();
        assert_eq!(r.constants.c1, Some(19.0));
        assert_eq!(r.constants.c2, Some(9.0 * 19.0 + 1.0));
        assert!(bound_report_iid(IidAlgorithm::Ucb(a(2.0)), 0.01, 1.0, 1.0, 3, true).is_err());
    }

    #[test]
    fn exact_hand_evaluation() {
        // ETC, σ² = 1, Δ = 1, δ = 0.01 evaluated directly.
        let l = 100f64.ln();
        let bracket = l + 2.0 * (32.0 * l.max(2.0 * 32f64.ln())).ln().ln();
        let r = bound_report_iid(IidAlgorithm::Etc, 0.01, 1.0, 1.0, 2, true).unwrap();
        assert!((r.decision_time_bound.unwrap() - 32.0 * bracket).abs() < 1e-9);
        assert!((r.regret_bound - 16.0 * bracket).abs() < 1e-9);
    }

    #[test]
    fn exact_dominates_leading() {
        for alg in [IidAlgorithm::Etc, IidAlgorithm::Ucb(a(1.5)), IidAlgorithm::Ucb(a(4.0))] {
            for e in 1..=12 {
                let delta = 10f64.powi(-e);
                let lead = bound_report_iid(alg, delta, 1.0, 1.0, 2, false).unwrap();
                let full = bound_report_iid(alg, delta, 1.0, 1.0, 2, true).unwrap();
                assert!(full.decision_time_bound > lead.decision_time_bound);
                assert!(full.regret_bound > lead.regret_bound);
            }
        }
    }

    #[test]
    fn exact_over_leading_converges() {
        let ratio = |alg, delta: f64, time: bool| {
            let lead = bound_report_iid(alg, delta, 1.0, 1.0, 2, false).unwrap();
            let full = bound_report_iid(alg, delta, 1.0, 1.0, 2, true).unwrap();
            if time {
                full.decision_time_bound.unwrap() / lead.decision_time_bound.unwrap()
            } else {
                full.regret_bound / lead.regret_bound
            }
        };
        let deltas: Vec<f64> = (2..=12).map(|e| 10f64.powi(-e)).collect();
        for (alg, time) in [
            (IidAlgorithm::Etc, true),
            (IidAlgorithm::Etc, false),
            (IidAlgorithm::Ucb(a(2.0)), false),
        ] {
            let rs: Vec<f64> = deltas.iter().map(|&d| ratio(alg, d, time)).collect();
            assert!(rs.windows(2).all(|w| w[1] < w[0]), "{alg:?}: {rs:?}");
            assert!(rs.last().unwrap() - 1.0 < 0.2);
        }
        // UCB_α decision time: the exact form carries an extra additive constant
        // per log term, so the ratio tends to a limit slightly above 1.
        let alpha = a(2.0);
        let (m, dtf) = (alpha.exploration_min(), alpha.decision_time_factor());
        let limit = (dtf * (4.0 * m + 2.0) + 1.0) / (dtf * (4.0 * m + 1.0));
        let gaps: Vec<f64> = deltas
            .iter()
            .map(|&d| (ratio(IidAlgorithm::Ucb(alpha), d, true) - limit).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        let far = (ratio(IidAlgorithm::Ucb(alpha), 1e-200, true) - limit).abs();
        assert!(far < 0.1);
    }

    #[test]
    fn k_arm_forms() {
        let r = bound_report_iid(IidAlgorithm::Etc, 0.05, 1.0, 1.0, 4, false).unwrap();
        assert_eq!(r.time_log_coefficient, Some(128.0));
        assert_eq!(r.regret_log_coefficient, Some(96.0));
        assert!((r.regret_bound - 96.0 * 80f64.ln()).abs() < 1e-9);
        let u = bound_report_iid(IidAlgorithm::Ucb(a(3.0)), 0.05, 1.0, 1.0, 3, false).unwrap();
        // c = 4, ratio = 4: 4·(32+1) + 2·32 + 3.
        assert_eq!(u.time_log_coefficient, Some(199.0));
        assert_eq!(u.regret_log_coefficient, Some(66.0));
    }

    #[test]
    fn mm_examples() {
        let r = bound_report_mm(a(3.0), 0.01, 1.0, 1.0, 1.0, false, MmLogScale::ProofForm).unwrap();
        assert_eq!(r.constants.gamma1, Some(17.0));
        assert_eq!(r.constants.gamma2, Some(4.0 * 17.0 + 1.0));
        let near_one =
            bound_report_mm(a(1.0 + 1e-9), 0.01, 1.0, 2.0, 1.0, false, MmLogScale::ProofForm)
                .unwrap();
        assert!((near_one.regret_log_coefficient.unwrap() - 17.0).abs() < 1e-6);
        let loglog_part = |se: f64| {
            let r = bound_report_mm(a(2.0), 0.01, 1.0, 1.0, se, false, MmLogScale::ProofForm)
                .unwrap();
            r.regret_bound - r.regret_log_coefficient.unwrap() * 100f64.ln()
        };
        assert!(loglog_part(1e6) < 1e-5);
        assert!(loglog_part(1.0) > loglog_part(10.0));
    }

    #[test]
    fn mm_exact_uses_sample_size_solutions() {
        let alpha = a(2.0);
        let r = bound_report_mm(alpha, 0.01, 1.0, 1.0, 1.0, true, MmLogScale::ProofForm).unwrap();
        let g1 = 9.0 + 1.0;
        let g2 = 9.0 * g1 + 1.0;
        let n_b = super::super::solve_sample_size(g1, 1.0, 1.0, 1.0, 0.01).unwrap();
        let n_a = super::super::solve_sample_size(g2, 1.0, 1.0, 1.0, 0.01).unwrap();
        assert_eq!(r.decision_time_bound, Some((n_a + n_b + 1) as f64));
        assert_eq!(r.regret_bound, (n_b + 1) as f64);
        let one = bound_report_mm(Alpha::ONE, 0.01, 1.0, 1.0, 1.0, true, MmLogScale::ProofForm)
            .unwrap();
        assert_eq!(one.decision_time_bound, None);
    }

    #[test]
    fn etc_mm_regret_is_half_gap_times_time() {
        for exact in [false, true] {
            let r = bound_report_etc_mm(0.01, 0.5, 1.0, 1.0, exact).unwrap();
            assert!((r.regret_bound - 0.25 * r.decision_time_bound.unwrap()).abs() < 1e-9);
        }
    }
}
