use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::concentration::{Alpha, MmLogScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Iid,
    Unit,
    Static,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Iid => "iid",
            Setting::Unit => "unit",
            Setting::Static => "static",
        })
    }
}

impl FromStr for Setting {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "iid" => Ok(Setting::Iid),
            "unit" => Ok(Setting::Unit),
            "static" => Ok(Setting::Static),
            other => Err(SimError::Config(format!("unknown setting `{other}`"))),
        }
    }
}

/// A policy entry of an experiment, written `etc`, `ucb:1.5`, `etc_prime`,
/// `etc_mm`, `ucb_mm:2`, `static_anytime` or `static_fixed`.
///
/// In the unit setting `etc_prime` runs UCB-MM with α = ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Etc,
    Ucb(Alpha),
    EtcPrime,
    EtcMm,
    UcbMm(Alpha),
    StaticAnytime,
    StaticFixed,
}

impl PolicySpec {
    /// Name without the α argument.
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Etc => "etc",
            PolicySpec::Ucb(_) => "ucb",
            PolicySpec::EtcPrime => "etc_prime",
            PolicySpec::EtcMm => "etc_mm",
            PolicySpec::UcbMm(_) => "ucb_mm",
            PolicySpec::StaticAnytime => "static_anytime",
            PolicySpec::StaticFixed => "static_fixed",
        }
    }

    pub fn alpha(&self) -> Option<Alpha> {
        match self {
            PolicySpec::Ucb(a) | PolicySpec::UcbMm(a) => Some(*a),
            PolicySpec::EtcPrime => Some(Alpha::INFINITY),
            _ => None,
        }
    }

    pub fn allowed_in(&self, setting: Setting) -> bool {
        use PolicySpec::*;
        match setting {
            Setting::Iid => matches!(self, Etc | Ucb(_) | EtcPrime),
            Setting::Unit => matches!(self, EtcMm | UcbMm(_) | EtcPrime),
            Setting::Static => matches!(self, StaticAnytime | StaticFixed),
        }
    }

    /// Whether a finite decision time is guaranteed.
    pub fn guarantees_decision(&self) -> bool {
        self.alpha().is_none_or(|a| a.guarantees_decision())
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Etc => f.write_str("etc"),
            PolicySpec::Ucb(a) => write!(f, "ucb:{a}"),
            PolicySpec::EtcPrime => f.write_str("etc_prime"),
            PolicySpec::EtcMm => f.write_str("etc_mm"),
            PolicySpec::UcbMm(a) => write!(f, "ucb_mm:{a}"),
            PolicySpec::StaticAnytime => f.write_str("static_anytime"),
            PolicySpec::StaticFixed => f.write_str("static_fixed"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let alpha = |arg: Option<&str>| -> Result<Alpha, SimError> {
            let arg = arg.ok_or_else(|| SimError::Config(format!("policy `{s}` needs an alpha")))?;
            arg.parse::<Alpha>().map_err(|e| SimError::Config(format!("policy `{s}`: {e}")))
        };
        let spec = match name {
            "etc" => PolicySpec::Etc,
            "ucb" => PolicySpec::Ucb(alpha(arg)?),
            "etc_prime" => PolicySpec::EtcPrime,
            "etc_mm" => PolicySpec::EtcMm,
            "ucb_mm" => PolicySpec::UcbMm(alpha(arg)?),
            "static_anytime" => PolicySpec::StaticAnytime,
            "static_fixed" => PolicySpec::StaticFixed,
            _ => return Err(SimError::Config(format!("unknown policy `{s}`"))),
        };
        if arg.is_some() && spec.alpha().is_none() || arg.is_some() && spec == PolicySpec::EtcPrime {
            return Err(SimError::Config(format!("policy `{name}` takes no argument")));
        }
        Ok(spec)
    }
}

impl Serialize for PolicySpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicySpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakMode {
    Lowest,
    Random,
}

/// Everything that determines a sweep's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub policies: Vec<PolicySpec>,
    /// Arm means (iid) or population means (unit, static).
    pub means: Vec<f64>,
    /// Reward variance of every arm in the iid setting.
    pub sigma_sq: f64,
    pub sigma_r_sq: f64,
    pub sigma_eps_sq: f64,
    /// Grid of `log(1/δ)` values.
    pub log_inv_delta: Vec<f64>,
    pub replications: u64,
    pub seed: u64,
    pub max_steps: u64,
    /// Common random numbers: reward streams shared across policies.
    pub crn: bool,
    pub init_pulls: u64,
    pub tie_break: TieBreakMode,
    pub etc_random_first: bool,
    pub ucb_log_factor: f64,
    pub mm_scale: MmLogScale,
    pub mm_alt_radius: bool,
    pub arrivals_per_step: u32,
    pub static_units: u64,
    pub static_horizon: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            setting: Setting::Iid,
            policies: Self::default_policies(Setting::Iid),
            means: vec![0.0, 1.0],
            sigma_sq: 1.0,
            sigma_r_sq: 1.0,
            sigma_eps_sq: 1.0,
            log_inv_delta: (2..=9).map(f64::from).collect(),
            replications: 1000,
            seed: 0,
            max_steps: 10_000_000,
            crn: true,
            init_pulls: crate::bandit::DEFAULT_INIT_PULLS,
            tie_break: TieBreakMode::Lowest,
            etc_random_first: false,
            ucb_log_factor: crate::concentration::DEFAULT_UCB_LOG_FACTOR,
            mm_scale: MmLogScale::default(),
            mm_alt_radius: false,
            arrivals_per_step: 1,
            static_units: 100,
            static_horizon: 100,
        }
    }
}

/// Every accepted key, as `(section, name)`. Bare names are also accepted.
const KEYS: &[(&str, &str)] = &[
    ("experiment", "setting"),
    ("experiment", "policies"),
    ("experiment", "means"),
    ("experiment", "log_inv_delta"),
    ("experiment", "replications"),
    ("experiment", "seed"),
    ("experiment", "max_steps"),
    ("experiment", "crn"),
    ("iid", "sigma_sq"),
    ("iid", "init_pulls"),
    ("iid", "tie_break"),
    ("iid", "etc_random_first"),
    ("iid", "ucb_log_factor"),
    ("unit", "sigma_r_sq"),
    ("unit", "sigma_eps_sq"),
    ("unit", "mm_scale"),
    ("unit", "mm_alt_radius"),
    ("unit", "arrivals_per_step"),
    ("static", "units"),
    ("static", "horizon"),
];

fn canonical_key(section: Option<&str>, name: &str) -> Result<&'static str, SimError> {
    let name = name.trim();
    let (section, name) = match (section, name.split_once('.')) {
        (_, Some((s, n))) => (Some(s.trim()), n.trim()),
        (s, None) => (s, name),
    };
    KEYS.iter()
        .find(|(s, n)| *n == name && section.is_none_or(|sec| sec == *s))
        .map(|(_, n)| *n)
        .ok_or_else(|| match section {
            Some(s) => SimError::Config(format!("unknown key `{s}.{name}`")),
            None => SimError::Config(format!("unknown key `{name}`")),
        })
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, SimError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| SimError::Config(format!("`{key}` = `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, SimError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, SimError> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(SimError::Config(format!("`{key}` = `{other}`: expected a boolean"))),
    }
}

impl ExperimentConfig {
    pub fn default_policies(setting: Setting) -> Vec<PolicySpec> {
        let alphas = [1.5, 2.0, 4.0, 32.0].map(|a| Alpha::new(a).expect("valid alpha"));
        match setting {
            Setting::Iid => std::iter::once(PolicySpec::Etc)
                .chain(alphas.iter().map(|&a| PolicySpec::Ucb(a)))
                .chain(std::iter::once(PolicySpec::EtcPrime))
                .collect(),
            Setting::Unit => std::iter::once(PolicySpec::EtcMm)
                .chain(alphas.iter().map(|&a| PolicySpec::UcbMm(a)))
                .chain(std::iter::once(PolicySpec::EtcPrime))
                .collect(),
            Setting::Static => vec![PolicySpec::StaticAnytime, PolicySpec::StaticFixed],
        }
    }

    /// Parses a config file: JSON when it starts with `{`, otherwise
    /// `key = value` lines with optional `[section]` headers.
    ///
    /// If any line starts with `#!`, only those lines are read, so the echo
    /// at the top of a CSV output can be fed back as a config.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut config = ExperimentConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), SimError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            return self.apply_json(trimmed);
        }
        let echoed: Vec<&str> =
            text.lines().filter_map(|l| l.trim_start().strip_prefix("#!")).collect();
        let lines: Vec<&str> = if echoed.is_empty() { text.lines().collect() } else { echoed };
        let mut section: Option<String> = None;
        let mut pairs = Vec::new();
        for (lineno, raw) in lines.iter().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            pairs.push((canonical_key(section.as_deref(), key)?, value.trim().to_string()));
        }
        for (key, value) in pairs {
            self.set(key, &value)?;
        }
        self.validate()
    }

    fn apply_json(&mut self, text: &str) -> Result<(), SimError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SimError::Config(format!("invalid JSON: {e}")))?;
        // A JSON output file carries its config under "config".
        let root = value.get("config").unwrap_or(&value);
        let obj = root
            .as_object()
            .ok_or_else(|| SimError::Config("JSON config must be an object".into()))?;
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let mut pairs = Vec::new();
        for (k, v) in obj {
            match v {
                serde_json::Value::Object(inner) => {
                    for (ik, iv) in inner {
                        pairs.push((canonical_key(Some(k), ik)?, json_text(iv, &scalar)));
                    }
                }
                other => pairs.push((canonical_key(None, k)?, json_text(other, &scalar))),
            }
        }
        for (key, value) in pairs {
            self.set(key, &value)?;
        }
        self.validate()
    }

    /// Applies `key=value` overrides, with the same keys as the file format.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), SimError> {
        for item in overrides {
            let item = item.as_ref();
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("override `{item}` is not key=value")))?;
            self.set(canonical_key(None, k)?, v.trim())?;
        }
        self.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        match key {
            "setting" => {
                let setting: Setting = value.trim().parse()?;
                if setting != self.setting {
                    self.setting = setting;
                    self.policies = Self::default_policies(setting);
                }
            }
            "policies" => self.policies = parse_list(key, value)?,
            "means" => self.means = parse_list(key, value)?,
            "log_inv_delta" => self.log_inv_delta = parse_list(key, value)?,
            "replications" => self.replications = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "max_steps" => self.max_steps = parse_value(key, value)?,
            "crn" => self.crn = parse_bool(key, value)?,
            "sigma_sq" => self.sigma_sq = parse_value(key, value)?,
            "init_pulls" => self.init_pulls = parse_value(key, value)?,
            "tie_break" => {
                self.tie_break = match value.trim() {
                    "lowest" => TieBreakMode::Lowest,
                    "random" => TieBreakMode::Random,
                    other => {
                        return Err(SimError::Config(format!("`tie_break` = `{other}`")));
                    }
                }
            }
            "etc_random_first" => self.etc_random_first = parse_bool(key, value)?,
            "ucb_log_factor" => self.ucb_log_factor = parse_value(key, value)?,
            "sigma_r_sq" => self.sigma_r_sq = parse_value(key, value)?,
            "sigma_eps_sq" => self.sigma_eps_sq = parse_value(key, value)?,
            "mm_scale" => self.mm_scale = parse_value(key, value)?,
            "mm_alt_radius" => self.mm_alt_radius = parse_bool(key, value)?,
            "arrivals_per_step" => self.arrivals_per_step = parse_value(key, value)?,
            "units" => self.static_units = parse_value(key, value)?,
            "horizon" => self.static_horizon = parse_value(key, value)?,
            other => return Err(SimError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.policies.is_empty() {
            return bad("policies must not be empty".into());
        }
        if let Some(p) = self.policies.iter().find(|p| !p.allowed_in(self.setting)) {
            return bad(format!("policy `{p}` is not available in the {} setting", self.setting));
        }
        if self.log_inv_delta.is_empty() {
            return bad("log_inv_delta must not be empty".into());
        }
        if let Some(l) = self.log_inv_delta.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return bad(format!("log_inv_delta values must be positive, got {l}"));
        }
        let arms = self.means.len();
        if arms < 2 || (self.setting != Setting::Iid && arms != 2) {
            return bad(format!("{} setting needs {} means, got {arms}", self.setting, if self.setting == Setting::Iid { "at least 2" } else { "exactly 2" }));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return bad("means must be finite".into());
        }
        for (name, v) in [
            ("sigma_sq", self.sigma_sq),
            ("sigma_r_sq", self.sigma_r_sq),
            ("sigma_eps_sq", self.sigma_eps_sq),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.setting == Setting::Unit && self.sigma_eps_sq == 0.0 && !self.mm_alt_radius {
            return bad("sigma_eps_sq = 0 needs mm_alt_radius = true".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.ucb_log_factor >= 1.0 && self.ucb_log_factor.is_finite()) {
            return bad(format!("ucb_log_factor must be at least 1, got {}", self.ucb_log_factor));
        }
        if self.init_pulls == 0 {
            return bad("init_pulls must be at least 1".into());
        }
        if !(1..=2).contains(&self.arrivals_per_step) {
            return bad("arrivals_per_step must be 1 or 2".into());
        }
        if self.static_units == 0 || self.static_horizon == 0 {
            return bad("static units and horizon must be at least 1".into());
        }
        Ok(())
    }

    /// `δ = exp(−log_inv_delta)` for every grid point.
    pub fn deltas(&self) -> Vec<f64> {
        self.log_inv_delta.iter().map(|l| (-l).exp()).collect()
    }

    /// Gap between the best and second-best mean.
    pub fn gap(&self) -> f64 {
        let mut sorted = self.means.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[0] - sorted[1]
    }

    /// The resolved config in the file format, one `key = value` per line.
    pub fn to_kv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let policies = self.policies.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
        let scale = match self.mm_scale {
            MmLogScale::Index => "index",
            MmLogScale::Listing => "listing",
            MmLogScale::ProofForm => "proof",
            MmLogScale::StatementForm => "statement",
        };
        let tie = match self.tie_break {
            TieBreakMode::Lowest => "lowest",
            TieBreakMode::Random => "random",
        };
        format!(
            "[experiment]\nsetting = {}\npolicies = {}\nmeans = {}\nlog_inv_delta = {}\nreplications = {}\nseed = {}\nmax_steps = {}\ncrn = {}\n\
             [iid]\nsigma_sq = {}\ninit_pulls = {}\ntie_break = {}\netc_random_first = {}\nucb_log_factor = {}\n\
             [unit]\nsigma_r_sq = {}\nsigma_eps_sq = {}\nmm_scale = {}\nmm_alt_radius = {}\narrivals_per_step = {}\n\
             [static]\nunits = {}\nhorizon = {}\n",
            self.setting,
            policies,
            join(&self.means),
            join(&self.log_inv_delta),
            self.replications,
            self.seed,
            self.max_steps,
            self.crn,
            self.sigma_sq,
            self.init_pulls,
            tie,
            self.etc_random_first,
            self.ucb_log_factor,
            self.sigma_r_sq,
            self.sigma_eps_sq,
            scale,
            self.mm_alt_radius,
            self.arrivals_per_step,
            self.static_units,
            self.static_horizon,
        )
    }

    /// The resolved config as nested JSON, readable by [`ExperimentConfig::parse`].
    pub fn to_json(&self) -> serde_json::Value {
        let mut root = serde_json::Map::new();
        let mut section: Option<(String, serde_json::Map<String, serde_json::Value>)> = None;
        for line in self.to_kv().lines() {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if let Some((n, m)) = section.take() {
                    root.insert(n, m.into());
                }
                section = Some((name.to_string(), serde_json::Map::new()));
            } else if let Some((k, v)) = line.split_once(" = ") {
                if let Some((_, m)) = section.as_mut() {
                    m.insert(k.to_string(), serde_json::Value::String(v.to_string()));
                }
            }
        }
        if let Some((n, m)) = section {
            root.insert(n, m.into());
        }
        root.into()
    }
}

fn json_text(v: &serde_json::Value, scalar: &dyn Fn(&serde_json::Value) -> String) -> String {
    match v {
        serde_json::Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
        other => scalar(other),
    }
}
