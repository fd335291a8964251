use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use super::{check_delta, Alpha, ConcentrationError};

pub const ZETA_DEFAULT_TOL: f64 = 1e-9;

/// Inflation factor of the Hoeffding-on-intervals bound:
/// `φ(x) = (1 + x + 2√x) / (4√x)` for `x = T₂/T₁ ≥ 1`.
///
/// It satisfies `1 − (x−1)²/16 ≤ 1/φ(x) ≤ 1`.
pub fn phi(x: f64) -> Result<f64, ConcentrationError> {
    if !(x >= 1.0) || x.is_infinite() {
        return Err(ConcentrationError::Domain { what: "phi argument", value: x });
    }
    let root = x.sqrt();
    Ok((1.0 + x + 2.0 * root) / (4.0 * root))
}

/// `c_α = min{(α+1)²/4, 4α²/(α−1)²}`, with `c₁ = 1` and `c_∞ = 4`.
///
/// Lies in `[1, 7]` for α ≥ 1; the maximum `(3+√5)²/4 ≈ 6.854` is reached at
/// `α = 2 + √5` where both branches cross.
pub fn c_alpha(alpha: Alpha) -> f64 {
    alpha.exploration_min() / 4.0
}

/// Riemann zeta for real `s > 1`.
///
/// Partial sum up to `N − 1`, integral tail `N^{1−s}/(s−1)` and the first two
/// Euler–Maclaurin end corrections. `N` is chosen so that the first omitted
/// correction, which bounds the remainder for `k^{-s}`, is below `tol`.
pub fn zeta(s: f64, tol: f64) -> Result<f64, ConcentrationError> {
    if !(s > 1.0) || s.is_infinite() {
        return Err(ConcentrationError::Domain { what: "zeta argument", value: s });
    }
    if !(tol > 0.0) {
        return Err(ConcentrationError::Domain { what: "zeta tolerance", value: tol });
    }
    // Next Euler–Maclaurin term: s(s+1)(s+2) / (720 N^{s+3}).
    let scale = s * (s + 1.0) * (s + 2.0) / 720.0;
    let n = (scale / tol).powf(1.0 / (s + 3.0)).ceil().max(10.0);
    let n_int = n as u64;
    let head: f64 = (1..n_int).rev().map(|k| (k as f64).powf(-s)).sum();
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s / 12.0 * n.powf(-s - 1.0);
    Ok(head + tail)
}

/// Constant of the √log branch of the anytime Hoeffding bound,
/// `e^{α/2}/log 2 · √(1/(8α)) / (α(1 − α/(2 log(log 2/δ))) − 1)`.
///
/// This is the exact δ-dependent value; `None` when the expression is not
/// positive (δ too large for the branch). As δ → 0 it tends to
/// `e^{α/2}/log 2 · √(1/(8α)) / (α − 1)`, about 0.98 at α = 2.
pub fn peeling_sqrt_constant(alpha: f64, delta: f64) -> Option<f64> {
    let level = (LN_2 / delta).ln();
    if !(level > 0.0) {
        return None;
    }
    let denom = alpha * (1.0 - alpha / (2.0 * level)) - 1.0;
    if !(denom > 0.0) {
        return None;
    }
    Some((alpha / 2.0).exp() / LN_2 * (1.0 / (8.0 * alpha)).sqrt() / denom)
}

/// δ-free upper bound of the √log-branch constant,
/// `e^{α/2}/log^α 2 · √(1/(8α)) · (16/15)/(α − 16/15)`; ≈ 1.62 at α = 2.
pub fn peeling_sqrt_constant_bound(alpha: f64) -> Option<f64> {
    let gap = alpha - 16.0 / 15.0;
    (gap > 0.0).then(|| {
        (alpha / 2.0).exp() / LN_2.powf(alpha) * (1.0 / (8.0 * alpha)).sqrt() * (16.0 / 15.0) / gap
    })
}

/// Constant of the log branch, `(2e/α)^{α/2} ζ(α − α²/(2 log(1/δ)))`.
pub fn peeling_log_constant(alpha: f64, delta: f64) -> Option<f64> {
    let level = (1.0 / delta).ln();
    if !(level > 0.0) {
        return None;
    }
    let s = alpha - alpha * alpha / (2.0 * level);
    let z = zeta(s, ZETA_DEFAULT_TOL).ok()?;
    Some((2.0 * E / alpha).powf(alpha / 2.0) * z)
}

/// δ-free bound `(2e/α)^{α/2} ζ(3α/4)` of the log-branch constant, valid over
/// the whole branch range; `e·ζ(3/2) ≈ 7.10` at α = 2.
pub fn peeling_log_constant_bound(alpha: f64) -> Option<f64> {
    let z = zeta(0.75 * alpha, ZETA_DEFAULT_TOL).ok()?;
    Some((2.0 * E / alpha).powf(alpha / 2.0) * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaTildeBranch {
    /// `δ̃` of order `δ√log(1/δ)`.
    SqrtLog,
    /// `δ̃` of order `δ log(1/δ)`.
    Log,
}

/// The inflated failure probability `δ̃` at which the anytime bound with
/// `log(log² t / δ)` inside the radius holds.
///
/// Both branch values are reported whenever their formula is defined; the
/// `applicable` branch is the one whose validity condition (checked at the
/// peeling exponent 2 and level `δ/log² 2`) holds. When both hold the
/// smaller value is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTilde {
    pub delta: f64,
    pub sqrt_log_branch: Option<f64>,
    pub log_branch: Option<f64>,
    pub applicable: Option<DeltaTildeBranch>,
}

impl DeltaTilde {
    /// The applicable branch's value, or an error when δ lies outside both
    /// validity ranges.
    pub fn checked(&self) -> Result<f64, ConcentrationError> {
        match self.applicable {
            Some(DeltaTildeBranch::SqrtLog) => Ok(self.sqrt_log_branch.expect("branch value")),
            Some(DeltaTildeBranch::Log) => Ok(self.log_branch.expect("branch value")),
            None => Err(ConcentrationError::NoValidBranch { delta: self.delta }),
        }
    }

    /// A usable probability level in `[δ, 1]`.
    ///
    /// Outside both validity ranges this falls back to the larger of the
    /// defined branch values, and to 1 when neither is defined.
    pub fn value(&self) -> f64 {
        let raw = self.checked().unwrap_or_else(|_| {
            match (self.sqrt_log_branch, self.log_branch) {
                (Some(a), Some(b)) => a.max(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 1.0,
            }
        });
        raw.clamp(self.delta, 1.0)
    }
}

pub fn delta_tilde(delta: f64) -> Result<DeltaTilde, ConcentrationError> {
    check_delta(delta)?;
    let ln2_sq = LN_2 * LN_2;
    // log²(t) = log²(2)·log₂²(t), so the peeling bound runs at level δ/log²2.
    let level = delta / ln2_sq;

    let sqrt_log_branch = peeling_sqrt_constant(2.0, level).and_then(|c| {
        let inner = (LN_2 / level).ln();
        (inner > 0.0).then(|| c * level * inner.sqrt() + level * (E / LN_2 + 1.0))
    });
    let log_branch = {
        let inner = (1.0 / level).ln();
        (inner > 0.0).then(|| {
            let c = peeling_log_constant_bound(2.0).expect("zeta(1.5) is defined");
            c * level * inner + 5.0 * level
        })
    };

    let sqrt_valid = {
        let l = (LN_2 / level).ln();
        sqrt_log_branch.is_some() && 1.0 + 1.0 / l < 2.0 && 2.0 < l / 8.0
    };
    let log_valid = {
        let l = (1.0 / level).ln();
        log_branch.is_some() && 1.0 + 1.0 / l <= 2.0 && 2.0 <= 0.5 * l
    };
    let applicable = match (sqrt_valid, log_valid) {
        (true, true) => {
            if sqrt_log_branch <= log_branch {
                Some(DeltaTildeBranch::SqrtLog)
            } else {
                Some(DeltaTildeBranch::Log)
            }
        }
        (true, false) => Some(DeltaTildeBranch::SqrtLog),
        (false, true) => Some(DeltaTildeBranch::Log),
        (false, false) => None,
    };
    Ok(DeltaTilde { delta, sqrt_log_branch, log_branch, applicable })
}
