use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ConcentrationError;

/// Exploration inflation factor α of UCB_α / UCB-MM_α.
///
/// `+∞` is represented symbolically: an infinite α means "always pull the
/// least-pulled arm" and is never confused with a large finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha(Repr);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Repr {
    Finite(f64),
    Infinite,
}

impl Alpha {
    pub const INFINITY: Alpha = Alpha(Repr::Infinite);
    pub const ONE: Alpha = Alpha(Repr::Finite(1.0));

    /// Values below 1 are accepted (they give a plain exploration bonus) but
    /// carry no finite-decision guarantee; see [`Alpha::guarantees_decision`].
    pub fn new(value: f64) -> Result<Self, ConcentrationError> {
        if value.is_nan() || value < 0.0 {
            return Err(ConcentrationError::Domain { what: "alpha", value });
        }
        if value.is_infinite() {
            Ok(Self::INFINITY)
        } else {
            Ok(Alpha(Repr::Finite(value)))
        }
    }

    /// Finite value, or `None` for +∞.
    pub fn finite(&self) -> Option<f64> {
        match self.0 {
            Repr::Finite(v) => Some(v),
            Repr::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.0, Repr::Infinite)
    }

    /// As an `f64`, with +∞ mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Whether the decision time is guaranteed finite (α > 1).
    pub fn guarantees_decision(&self) -> bool {
        self.finite().is_none_or(|v| v > 1.0)
    }

    /// `(α+1)²/(α−1)²`, the factor bounding how much more often the best arm
    /// can be pulled than the other one. Infinite at α = 1, 1 at α = ∞.
    pub fn pull_ratio_factor(&self) -> f64 {
        match self.0 {
            Repr::Infinite => 1.0,
            Repr::Finite(a) if a == 1.0 => f64::INFINITY,
            Repr::Finite(a) => ((a + 1.0) / (a - 1.0)).powi(2),
        }
    }

    /// `(α²+1)/(α−1)²`, the decision-time prefactor of the leading-order bounds.
    pub fn decision_time_factor(&self) -> f64 {
        match self.0 {
            Repr::Infinite => 1.0,
            Repr::Finite(a) if a == 1.0 => f64::INFINITY,
            Repr::Finite(a) => (a * a + 1.0) / ((a - 1.0) * (a - 1.0)),
        }
    }

    /// `min{(α+1)², 16α²/(α−1)²}`.
    pub fn exploration_min(&self) -> f64 {
        match self.0 {
            Repr::Infinite => 16.0,
            Repr::Finite(a) => {
                let left = (a + 1.0) * (a + 1.0);
                let right = if a == 1.0 {
                    f64::INFINITY
                } else {
                    16.0 * a * a / ((a - 1.0) * (a - 1.0))
                };
                left.min(right)
            }
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Repr::Finite(v) => write!(f, "{v}"),
            Repr::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = ConcentrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "∞" => Ok(Self::INFINITY),
            _ => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| ConcentrationError::InvalidParameter(format!("alpha `{s}`")))?;
                Alpha::new(v)
            }
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Repr::Finite(v) => serializer.serialize_f64(v),
            Repr::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Alpha::new(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_infinity_symbolically() {
        assert!("inf".parse::<Alpha>().unwrap().is_infinite());
        assert!(Alpha::new(f64::INFINITY).unwrap().is_infinite());
        assert_eq!("2.5".parse::<Alpha>().unwrap().finite(), Some(2.5));
        assert!(Alpha::new(-1.0).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
    }

    #[test]
    fn guarantee_needs_alpha_above_one() {
        assert!(!Alpha::ONE.guarantees_decision());
        assert!(!Alpha::new(0.5).unwrap().guarantees_decision());
        assert!(Alpha::new(1.01).unwrap().guarantees_decision());
        assert!(Alpha::INFINITY.guarantees_decision());
    }

    #[test]
    fn serde_round_trip() {
        let json = serde_json::to_string(&[Alpha::new(1.5).unwrap(), Alpha::INFINITY]).unwrap();
        assert_eq!(json, r#"[1.5,"inf"]"#);
        let back: Vec<Alpha> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Alpha::new(1.5).unwrap(), Alpha::INFINITY]);
    }
}
