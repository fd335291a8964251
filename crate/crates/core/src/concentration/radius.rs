use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_delta, check_nonnegative, clamped_ln, ConcentrationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusFamily {
    /// Per-arm UCB radius `√(2σ²/n · log(f·log²n/δ))`, `f = 3` by default.
    UcbIid,
    /// ETC gap threshold at common pull count `n`.
    EtcIid,
    /// Per-arm radius of the α = ∞ limit, `√(8σ²/n · log(f·log²n/δ))`.
    EtcPrimeIid,
    /// Mean-of-means radius over `n` units.
    MeanOfMeans,
    /// Two-term mean-of-means radius that stays finite at `σ_ε² = 0`.
    MeanOfMeansAlt,
    /// ETC-MM gap threshold at common unit count `n`.
    EtcMm,
    /// Static population, decision at horizon `t = T`.
    StaticFixedHorizon,
    /// Static population, anytime threshold at step `t`.
    StaticAnytime,
}

impl RadiusFamily {
    pub fn is_unit(&self) -> bool {
        !matches!(self, Self::UcbIid | Self::EtcIid | Self::EtcPrimeIid)
    }

    pub fn needs_time(&self) -> bool {
        matches!(self, Self::StaticFixedHorizon | Self::StaticAnytime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variance {
    Iid { sigma_sq: f64 },
    Unit { sigma_r_sq: f64, sigma_eps_sq: f64 },
}

impl Variance {
    /// `(σ_r², σ_ε²)`; an iid variance is read as `(σ², 0)`.
    pub fn unit_pair(&self) -> (f64, f64) {
        match *self {
            Variance::Iid { sigma_sq } => (sigma_sq, 0.0),
            Variance::Unit { sigma_r_sq, sigma_eps_sq } => (sigma_r_sq, sigma_eps_sq),
        }
    }

    /// σ² of the iid setting; for unit variances, `σ_r² + σ_ε²`.
    pub fn total(&self) -> f64 {
        let (r, e) = self.unit_pair();
        r + e
    }
}

/// Constant inside the mean-of-means log term. The four variants differ only
/// by the factor in front of `n⁴/δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmLogScale {
    /// `(4n)⁴/(2δ)`.
    Index,
    /// `(4n)⁴/δ`.
    Listing,
    /// `36n⁴/δ`, the same constant the sample-size solver uses.
    #[default]
    ProofForm,
    /// `(4n)⁴/(6δ)`.
    StatementForm,
}

impl MmLogScale {
    /// `ln` of the constant multiplying `n⁴/δ`.
    pub fn ln_constant(&self) -> f64 {
        match self {
            MmLogScale::Index => 128f64.ln(),
            MmLogScale::Listing => 256f64.ln(),
            MmLogScale::ProofForm => 36f64.ln(),
            MmLogScale::StatementForm => (256.0f64 / 6.0).ln(),
        }
    }
}

impl std::str::FromStr for MmLogScale {
    type Err = ConcentrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "index" => Ok(Self::Index),
            "listing" => Ok(Self::Listing),
            "proof" | "proof_form" => Ok(Self::ProofForm),
            "statement" | "statement_form" => Ok(Self::StatementForm),
            other => Err(ConcentrationError::InvalidParameter(format!("mm log scale `{other}`"))),
        }
    }
}

/// A confidence-radius family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSpec {
    pub family: RadiusFamily,
    pub variance: Variance,
    pub delta: f64,
    pub num_arms: usize,
    /// Factor `f` in `log(f·log²n/δ)` of the per-arm iid radii.
    pub ucb_log_factor: f64,
    pub mm_scale: MmLogScale,
}

pub const DEFAULT_UCB_LOG_FACTOR: f64 = 3.0;

impl RadiusSpec {
    pub fn new(
        family: RadiusFamily,
        variance: Variance,
        delta: f64,
        num_arms: usize,
    ) -> Result<Self, ConcentrationError> {
        let spec = RadiusSpec {
            family,
            variance,
            delta,
            num_arms,
            ucb_log_factor: DEFAULT_UCB_LOG_FACTOR,
            mm_scale: MmLogScale::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn iid(family: RadiusFamily, sigma_sq: f64, delta: f64) -> Result<Self, ConcentrationError> {
        Self::new(family, Variance::Iid { sigma_sq }, delta, 2)
    }

    pub fn unit(
        family: RadiusFamily,
        sigma_r_sq: f64,
        sigma_eps_sq: f64,
        delta: f64,
    ) -> Result<Self, ConcentrationError> {
        Self::new(family, Variance::Unit { sigma_r_sq, sigma_eps_sq }, delta, 2)
    }

    pub fn with_log_factor(mut self, factor: f64) -> Result<Self, ConcentrationError> {
        self.ucb_log_factor = factor;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mm_scale(mut self, scale: MmLogScale) -> Self {
        self.mm_scale = scale;
        self
    }

    pub fn with_family(mut self, family: RadiusFamily) -> Result<Self, ConcentrationError> {
        self.family = family;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConcentrationError> {
        check_delta(self.delta)?;
        if self.num_arms < 2 {
            return Err(ConcentrationError::InvalidParameter(format!(
                "num_arms must be at least 2, got {}",
                self.num_arms
            )));
        }
        if !(self.ucb_log_factor >= 1.0) || self.ucb_log_factor.is_infinite() {
            return Err(ConcentrationError::Domain {
                what: "ucb log factor",
                value: self.ucb_log_factor,
            });
        }
        match self.variance {
            Variance::Iid { sigma_sq } => check_nonnegative("sigma_sq", sigma_sq)?,
            Variance::Unit { sigma_r_sq, sigma_eps_sq } => {
                check_nonnegative("sigma_r_sq", sigma_r_sq)?;
                check_nonnegative("sigma_eps_sq", sigma_eps_sq)?;
            }
        }
        if self.family.is_unit() && matches!(self.variance, Variance::Iid { .. }) {
            return Err(ConcentrationError::InvalidParameter(format!(
                "{:?} needs a (sigma_r_sq, sigma_eps_sq) pair",
                self.family
            )));
        }
        if self.family == RadiusFamily::MeanOfMeans && self.variance.unit_pair().1 <= 0.0 {
            return Err(ConcentrationError::Domain { what: "sigma_eps_sq", value: 0.0 });
        }
        Ok(())
    }

    /// δ with the K-arm adjustment δ/K applied when there are more than two arms.
    pub fn effective_delta(&self) -> f64 {
        if self.num_arms > 2 {
            self.delta / self.num_arms as f64
        } else {
            self.delta
        }
    }

    /// Half-width at count `n` (pulls, or units for the unit families).
    ///
    /// The static families also take the per-unit time `t`; other families
    /// ignore it.
    pub fn radius(&self, n: u64, t: Option<u64>) -> Result<f64, ConcentrationError> {
        if n == 0 {
            return Err(ConcentrationError::Domain { what: "count n", value: 0.0 });
        }
        let nf = n as f64;
        let d = self.effective_delta();
        let (sr, se) = self.variance.unit_pair();
        let log_sq = {
            let l = clamped_ln(nf);
            l * l
        };
        let r = match self.family {
            RadiusFamily::UcbIid => {
                (2.0 * self.variance.total() / nf * (self.ucb_log_factor * log_sq / d).ln()).sqrt()
            }
            RadiusFamily::EtcPrimeIid => {
                (8.0 * self.variance.total() / nf * (self.ucb_log_factor * log_sq / d).ln()).sqrt()
            }
            RadiusFamily::EtcIid => {
                let s = self.variance.total();
                if self.num_arms > 2 {
                    let k = self.num_arms as f64;
                    4.0 * (s / nf * (3.0 * k * log_sq / self.delta).ln()).sqrt()
                } else {
                    (4.0 * s / nf * (log_sq / self.delta).ln()).sqrt()
                }
            }
            RadiusFamily::MeanOfMeans => {
                let v = sr + se * (1.0 + nf.ln()) / nf;
                let ln_n = nf.ln();
                let spread = if sr > 0.0 { (ln_n + sr.ln() - se.ln()).max(0.0) } else { 0.0 };
                let log_term = self.mm_scale.ln_constant() + 4.0 * ln_n - d.ln() + spread;
                (2.0 * v / nf * log_term).sqrt()
            }
            RadiusFamily::MeanOfMeansAlt => {
                let first = (2.0 * sr / nf * (9.0 * log_sq / d).ln()).sqrt();
                let second = (2.0 * se * (1.0 + nf.ln()) / (nf * nf)
                    * (4.0 * (4.0 * nf).ln() - d.ln()))
                .sqrt();
                first + second
            }
            RadiusFamily::EtcMm => {
                let v = sr + se * (1.0 + nf.ln()) / nf;
                (4.0 * v / nf * (PI * PI * nf * nf / (3.0 * d)).ln()).sqrt()
            }
            RadiusFamily::StaticFixedHorizon => {
                let horizon = self.time(t)?;
                (8.0 * (sr + se / horizon) * (1.0 / self.delta).ln() / nf).sqrt()
            }
            RadiusFamily::StaticAnytime => {
                let tf = self.time(t)?;
                let lt = clamped_ln(tf);
                (8.0 * sr * (2.0 / self.delta).ln() / nf).sqrt()
                    + (8.0 * se * (3.0 * lt * lt / self.delta).ln() / (tf * nf)).sqrt()
            }
        };
        Ok(r)
    }

    fn time(&self, t: Option<u64>) -> Result<f64, ConcentrationError> {
        match t {
            Some(0) => Err(ConcentrationError::Domain { what: "time t", value: 0.0 }),
            Some(t) => Ok(t as f64),
            None => Err(ConcentrationError::MissingTime { family: self.family }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [RadiusFamily; 8] = [
        RadiusFamily::UcbIid,
        RadiusFamily::EtcIid,
        RadiusFamily::EtcPrimeIid,
        RadiusFamily::MeanOfMeans,
        RadiusFamily::MeanOfMeansAlt,
        RadiusFamily::EtcMm,
        RadiusFamily::StaticFixedHorizon,
        RadiusFamily::StaticAnytime,
    ];

    fn spec_for(family: RadiusFamily, num_arms: usize) -> RadiusSpec {
        let variance = if family.is_unit() {
            Variance::Unit { sigma_r_sq: 1.0, sigma_eps_sq: 1.0 }
        } else {
            Variance::Iid { sigma_sq: 1.0 }
        };
        RadiusSpec::new(family, variance, 0.1, num_arms).unwrap()
    }

    #[test]
    fn ucb_example() {
        let spec = RadiusSpec::iid(RadiusFamily::UcbIid, 1.0, 0.1).unwrap();
        let l = 100f64.ln();
        let by_hand = (0.02 * (3.0 * l * l / 0.1).ln()).sqrt();
        let r = spec.radius(100, None).unwrap();
        assert!((r - by_hand).abs() < 1e-12);
        assert!((r - 0.3593).abs() < 1e-3);
    }

    #[test]
    fn zero_variance_gives_zero() {
        let spec = RadiusSpec::iid(RadiusFamily::UcbIid, 0.0, 0.1).unwrap();
        for n in 1..50 {
            assert_eq!(spec.radius(n, None).unwrap(), 0.0);
        }
    }

    #[test]
    fn etc_prime_is_twice_ucb() {
        let ucb = RadiusSpec::iid(RadiusFamily::UcbIid, 2.5, 0.03).unwrap();
        let prime = ucb.with_family(RadiusFamily::EtcPrimeIid).unwrap();
        for n in [1, 2, 3, 10, 1000, 123_456] {
            let ratio = prime.radius(n, None).unwrap() / ucb.radius(n, None).unwrap();
            assert!((ratio - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_of_means_example() {
        let spec = RadiusSpec::unit(RadiusFamily::MeanOfMeans, 1.0, 1.0, 0.1).unwrap();
        let n: f64 = 10.0;
        let by_hand = (2.0 * (1.0 + (std::f64::consts::E * n).ln() / n) / n
            * (36.0 * n.powi(4) / 0.1 * n).ln())
        .sqrt();
        let r = spec.radius(10, None).unwrap();
        assert!((r - by_hand).abs() < 1e-9);
        assert!((r - 2.1515207199171726).abs() < 1e-9);
    }

    #[test]
    fn mm_scale_variants_are_ordered() {
        let base = RadiusSpec::unit(RadiusFamily::MeanOfMeans, 1.0, 1.0, 0.1).unwrap();
        let r = |s| base.with_mm_scale(s).radius(20, None).unwrap();
        assert!(r(MmLogScale::ProofForm) < r(MmLogScale::StatementForm));
        assert!(r(MmLogScale::StatementForm) < r(MmLogScale::Index));
        assert!(r(MmLogScale::Index) < r(MmLogScale::Listing));
    }

    #[test]
    fn mean_of_means_rejects_zero_noise() {
        assert!(RadiusSpec::unit(RadiusFamily::MeanOfMeans, 1.0, 0.0, 0.1).is_err());
        let alt = RadiusSpec::unit(RadiusFamily::MeanOfMeansAlt, 1.0, 0.0, 0.1).unwrap();
        let plain = RadiusSpec::iid(RadiusFamily::UcbIid, 1.0, 0.1)
            .unwrap()
            .with_log_factor(9.0)
            .unwrap();
        assert_eq!(alt.radius(7, None).unwrap(), plain.radius(7, None).unwrap());
    }

    #[test]
    fn static_anytime_examples() {
        let spec = RadiusSpec::unit(RadiusFamily::StaticAnytime, 1.0, 1.0, 0.1).unwrap();
        let first = (8.0 * 20f64.ln() / 100.0).sqrt();
        let at = |t: f64| {
            let l = t.ln().max(1.0);
            first + (8.0 * (3.0 * l * l / 0.1).ln() / (t * 100.0)).sqrt()
        };
        let r1 = spec.radius(100, Some(1)).unwrap();
        let r6 = spec.radius(100, Some(1_000_000)).unwrap();
        assert!((r1 - at(1.0)).abs() < 1e-9);
        assert!((r6 - at(1e6)).abs() < 1e-9);
        assert!((r1 - 1.0111773854497086).abs() < 1e-9);
        assert!((r6 - 0.49038136523282694).abs() < 1e-9);
        assert!(matches!(
            spec.radius(100, None),
            Err(ConcentrationError::MissingTime { .. })
        ));
    }

    #[test]
    fn k_arm_adjustment_widens() {
        let two = spec_for(RadiusFamily::UcbIid, 2);
        let five = spec_for(RadiusFamily::UcbIid, 5);
        assert!(five.radius(50, None).unwrap() > two.radius(50, None).unwrap());
        assert_eq!(five.effective_delta(), 0.02);
    }

    #[test]
    fn finite_and_decreasing_beyond_eight() {
        for family in ALL {
            for k in [2, 4] {
                let spec = spec_for(family, k);
                let mut prev = f64::INFINITY;
                for n in 1..5000u64 {
                    let r = spec.radius(n, Some(50)).unwrap();
                    assert!(r.is_finite() && r > 0.0, "{family:?} n={n}");
                    if n >= 8 {
                        assert!(r < prev, "{family:?} not decreasing at n={n}");
                    }
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RadiusSpec::iid(RadiusFamily::UcbIid, 1.0, 0.0).is_err());
        assert!(RadiusSpec::iid(RadiusFamily::UcbIid, 1.0, 1.0).is_err());
        assert!(RadiusSpec::iid(RadiusFamily::UcbIid, -1.0, 0.5).is_err());
        assert!(RadiusSpec::iid(RadiusFamily::MeanOfMeans, 1.0, 0.5).is_err());
        assert!(RadiusSpec::new(RadiusFamily::UcbIid, Variance::Iid { sigma_sq: 1.0 }, 0.1, 1)
            .is_err());
        let spec = RadiusSpec::iid(RadiusFamily::UcbIid, 1.0, 0.1).unwrap();
        assert!(spec.radius(0, None).is_err());
    }
}
