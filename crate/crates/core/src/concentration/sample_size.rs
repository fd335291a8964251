use super::{check_delta, check_nonnegative, check_positive, ConcentrationError, MmLogScale};

/// Largest unit count the solver will consider.
pub const SAMPLE_SIZE_LIMIT: u64 = 1_000_000_000_000;

/// Left-hand side of the sample-size equation,
/// `2(σ_r² + σ_ε² log(en)/n)/n · log(36n⁴/δ · max{1, nσ_r²/σ_ε²})`.
///
/// This is the squared mean-of-means radius at `n` units. The logarithm is
/// assembled term by term so large `n` never overflows.
pub fn sample_size_lhs(n: f64, sigma_r_sq: f64, sigma_eps_sq: f64, delta: f64) -> f64 {
    sample_size_lhs_scaled(n, sigma_r_sq, sigma_eps_sq, delta, MmLogScale::ProofForm)
}

/// [`sample_size_lhs`] with another constant in front of `n⁴/δ`.
pub fn sample_size_lhs_scaled(
    n: f64,
    sigma_r_sq: f64,
    sigma_eps_sq: f64,
    delta: f64,
    scale: MmLogScale,
) -> f64 {
    let ln_n = n.ln();
    let v = sigma_r_sq + sigma_eps_sq * (1.0 + ln_n) / n;
    let spread = if sigma_r_sq > 0.0 {
        (ln_n + sigma_r_sq.ln() - sigma_eps_sq.ln()).max(0.0)
    } else {
        0.0
    };
    let log_term = scale.ln_constant() + 4.0 * ln_n - delta.ln() + spread;
    2.0 * v / n * log_term
}

/// Smallest integer `n ≥ 1` with `LHS(n) ≤ Δ²/γ`.
///
/// The bracket starts at `[1, 2]` and doubles until the left-hand side drops
/// below the target, then bisects. The result satisfies
/// `LHS(n) ≤ Δ²/γ < LHS(n − 1)` whenever `n > 1`.
pub fn solve_sample_size(
    gamma: f64,
    gap: f64,
    sigma_r_sq: f64,
    sigma_eps_sq: f64,
    delta: f64,
) -> Result<u64, ConcentrationError> {
    solve_sample_size_scaled(gamma, gap, sigma_r_sq, sigma_eps_sq, delta, MmLogScale::ProofForm)
}

pub fn solve_sample_size_scaled(
    gamma: f64,
    gap: f64,
    sigma_r_sq: f64,
    sigma_eps_sq: f64,
    delta: f64,
    scale: MmLogScale,
) -> Result<u64, ConcentrationError> {
    check_positive("gamma", gamma)?;
    check_positive("gap", gap)?;
    check_nonnegative("sigma_r_sq", sigma_r_sq)?;
    check_positive("sigma_eps_sq", sigma_eps_sq)?;
    check_delta(delta)?;

    let target = gap * gap / gamma;
    let lhs = |n: u64| sample_size_lhs_scaled(n as f64, sigma_r_sq, sigma_eps_sq, delta, scale);
    if lhs(1) <= target {
        return Ok(1);
    }
    let (mut lo, mut hi) = (1u64, 2u64);
    while lhs(hi) > target {
        if hi >= SAMPLE_SIZE_LIMIT {
            return Err(ConcentrationError::NoConvergence { limit: SAMPLE_SIZE_LIMIT });
        }
        lo = hi;
        hi = (hi * 2).min(SAMPLE_SIZE_LIMIT);
    }
    // Invariant: lhs(lo) > target >= lhs(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if lhs(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut n = hi;
    while n > 1 && lhs(n - 1) <= target {
        n -= 1;
    }
    Ok(n)
}

/// Units per population for a fixed-horizon static test,
/// `⌈32(σ_r² + σ_ε²/T)/Δ² · log(1/δ)⌉`.
pub fn static_sample_bound(
    horizon: u64,
    gap: f64,
    sigma_r_sq: f64,
    sigma_eps_sq: f64,
    delta: f64,
) -> Result<u64, ConcentrationError> {
    if horizon == 0 {
        return Err(ConcentrationError::Domain { what: "horizon", value: 0.0 });
    }
    check_positive("gap", gap)?;
    check_nonnegative("sigma_r_sq", sigma_r_sq)?;
    check_nonnegative("sigma_eps_sq", sigma_eps_sq)?;
    check_delta(delta)?;
    let x = 32.0 * (sigma_r_sq + sigma_eps_sq / horizon as f64) / (gap * gap) * (1.0 / delta).ln();
    // Absorb rounding noise so exact integers are not bumped to the next one.
    let nearest = x.round();
    let n = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { x.ceil() };
    Ok(n.max(1.0) as u64)
}
