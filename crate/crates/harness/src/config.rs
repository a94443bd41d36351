//! Scenario configuration, read from TOML.

use std::path::{Path, PathBuf};

use dms_core::gbr_local::{PenaltyMode, SolverMode, SsbrNeighborhood};
use dms_core::radio::{Fading, McsEntry, McsTable};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossConfig {
    #[serde(default = "default_intercept")]
    pub intercept_db: f64,
    #[serde(default = "default_slope")]
    pub slope_db_per_decade: f64,
    #[serde(default = "default_min_distance")]
    pub min_distance_m: f64,
}

fn default_intercept() -> f64 {
    128.1
}
fn default_slope() -> f64 {
    37.6
}
fn default_min_distance() -> f64 {
    10.0
}

impl Default for PathlossConfig {
    fn default() -> Self {
        PathlossConfig {
            intercept_db: default_intercept(),
            slope_db_per_decade: default_slope(),
            min_distance_m: default_min_distance(),
        }
    }
}

/// `"default"`, a path to a JSON table, or an inline list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum McsSpec {
    Named(String),
    Inline(Vec<McsEntry>),
}

impl Default for McsSpec {
    fn default() -> Self {
        McsSpec::Named("default".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeadlinePolicy {
    N,
    #[default]
    NSquared,
    Explicit(usize),
}

impl DeadlinePolicy {
    pub fn rounds(&self, n_bs: usize) -> usize {
        match self {
            DeadlinePolicy::N => n_bs,
            DeadlinePolicy::NSquared => n_bs * n_bs,
            DeadlinePolicy::Explicit(v) => *v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    Legacy,
    Reuse3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FadingRedraw {
    #[default]
    PerEpoch,
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandStep {
    pub epoch: usize,
    pub gbr_rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub br_mode: SolverMode,
    #[serde(default = "default_br_users")]
    pub br_exact_max_users: usize,
    #[serde(default = "default_br_ttis")]
    pub br_exact_max_ttis: usize,
    #[serde(default)]
    pub ssbr_neighborhood: SsbrNeighborhood,
    #[serde(default = "default_ssbr_factor")]
    pub ssbr_cap_factor: usize,
    #[serde(default)]
    pub be_mode: SolverMode,
}

fn default_br_users() -> usize {
    6
}
fn default_br_ttis() -> usize {
    10
}
fn default_ssbr_factor() -> usize {
    4
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            br_mode: SolverMode::Auto,
            br_exact_max_users: default_br_users(),
            br_exact_max_ttis: default_br_ttis(),
            ssbr_neighborhood: SsbrNeighborhood::default(),
            ssbr_cap_factor: default_ssbr_factor(),
            be_mode: SolverMode::Auto,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_bs: usize,
    /// Guaranteed-rate users per site.
    pub users_per_bs: usize,
    pub isd_m: f64,
    /// Width and height in metres.
    pub area_m: [f64; 2],
    pub W: usize,
    #[serde(default = "default_slot")]
    pub T_slot_ms: f64,
    pub gbr_rate_mbps: f64,
    #[serde(default)]
    pub be_users_per_bs: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub penalty_mode: PenaltyMode,
    #[serde(default)]
    pub mcs_table: McsSpec,
    #[serde(default)]
    pub pathloss: PathlossConfig,
    #[serde(default = "default_b")]
    pub B_bits: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub demand_schedule: Vec<DemandStep>,
    #[serde(default)]
    pub deadline_policy: DeadlinePolicy,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default = "default_tx")]
    pub tx_power_dbm: f64,
    #[serde(default = "default_noise")]
    pub noise_w: f64,
    #[serde(default = "default_bw")]
    pub bandwidth_mhz: f64,
    #[serde(default = "default_fading")]
    pub fading: Fading,
    #[serde(default)]
    pub fading_redraw: FadingRedraw,
    /// Replay a saved topology instead of generating one.
    #[serde(default)]
    pub topology_file: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_slot() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    1000.0
}
fn default_b() -> u64 {
    64
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_epochs() -> usize {
    10
}
fn default_tx() -> f64 {
    30.0
}
fn default_noise() -> f64 {
    1.085e-14
}
fn default_bw() -> f64 {
    20.0
}
fn default_fading() -> Fading {
    Fading::RayleighUnitMean
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates; relative paths inside resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &cfg.topology_file {
            if t.is_relative() {
                cfg.topology_file = Some(base.join(t));
            }
        }
        if let McsSpec::Named(n) = &cfg.mcs_table {
            if n != "default" && Path::new(n).is_relative() {
                cfg.mcs_table = McsSpec::Named(base.join(n).to_string_lossy().into_owned());
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(format!("{name} must be positive, got {v}")))
            }
        };
        if self.n_bs == 0 {
            return Err(bad("n_bs must be positive"));
        }
        if self.W == 0 {
            return Err(bad("W must be at least 1"));
        }
        positive("isd_m", self.isd_m)?;
        positive("area_m[0]", self.area_m[0])?;
        positive("area_m[1]", self.area_m[1])?;
        positive("T_slot_ms", self.T_slot_ms)?;
        positive("alpha", self.alpha)?;
        positive("noise_w", self.noise_w)?;
        positive("bandwidth_mhz", self.bandwidth_mhz)?;
        positive("pathloss.min_distance_m", self.pathloss.min_distance_m)?;
        if !(self.gbr_rate_mbps.is_finite() && self.gbr_rate_mbps >= 0.0) {
            return Err(bad("gbr_rate_mbps must be non-negative"));
        }
        if self.B_bits == 0 {
            return Err(bad("B_bits must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds must not be empty"));
        }
        if self.epochs == 0 {
            return Err(bad("epochs must be positive"));
        }
        if let PenaltyMode::Fixed(v) = self.penalty_mode {
            positive("penalty_mode.fixed", v)?;
        }
        if let DeadlinePolicy::Explicit(0) = self.deadline_policy {
            return Err(bad("deadline_policy.explicit must be positive"));
        }
        let mut last = 0;
        for s in &self.demand_schedule {
            if s.epoch == 0 || s.epoch <= last {
                return Err(bad("demand_schedule epochs must be positive and strictly increasing"));
            }
            if !(s.gbr_rate_mbps.is_finite() && s.gbr_rate_mbps >= 0.0) {
                return Err(bad("demand_schedule gbr_rate_mbps must be non-negative"));
            }
            last = s.epoch;
        }
        if self.solver.ssbr_cap_factor == 0 {
            return Err(bad("solver.ssbr_cap_factor must be positive"));
        }
        if let McsSpec::Inline(e) = &self.mcs_table {
            McsTable::new(e.clone()).map_err(|e| bad(format!("mcs_table: {e}")))?;
        }
        Ok(())
    }

    pub fn tti_s(&self) -> f64 {
        self.T_slot_ms * 1e-3
    }

    pub fn mcs(&self) -> Result<McsTable> {
        match &self.mcs_table {
            McsSpec::Named(n) if n == "default" => Ok(McsTable::lte_like(self.bandwidth_mhz * 1e6, self.tti_s())),
            McsSpec::Named(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| bad(format!("mcs_table {path}: {e}")))
            }
            McsSpec::Inline(e) => McsTable::new(e.clone()).map_err(|e| bad(format!("mcs_table: {e}"))),
        }
    }

    /// Guaranteed-rate demand per user in bits per `W` period at `rate_mbps`.
    pub fn demand_bits(&self, rate_mbps: f64) -> f64 {
        rate_mbps * 1e6 * self.W as f64 * self.tti_s()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
n_bs = 7
users_per_bs = 10
isd_m = 200.0
area_m = [300.0, 500.0]
W = 70
gbr_rate_mbps = 4.0
"#;

    #[test]
    fn minimal_defaults() {
        let c = ScenarioConfig::from_toml(MIN).unwrap();
        assert_eq!(c.alpha, 1000.0);
        assert_eq!(c.deadline_policy, DeadlinePolicy::NSquared);
        assert_eq!(c.demand_bits(4.0), 280_000.0);
        assert_eq!(c.mcs().unwrap().top_rate(), 111_000.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = ScenarioConfig::from_toml(&format!("{MIN}\nfoo = 1\n")).unwrap_err();
        assert!(e.to_string().contains("foo"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn enums_parse() {
        let c = ScenarioConfig::from_toml(&format!(
            "{MIN}\npenalty_mode = {{ fixed = 0.1 }}\ndeadline_policy = {{ explicit = 5 }}\nbaseline = \"reuse3\"\n"
        ))
        .unwrap();
        assert_eq!(c.penalty_mode, PenaltyMode::Fixed(0.1));
        assert_eq!(c.deadline_policy.rounds(7), 5);
        assert_eq!(c.baseline, Baseline::Reuse3);
    }

    #[test]
    fn bad_schedule() {
        let t = format!("{MIN}\ndemand_schedule = [{{ epoch = 3, gbr_rate_mbps = 1.0 }}, {{ epoch = 2, gbr_rate_mbps = 1.0 }}]\n");
        assert!(ScenarioConfig::from_toml(&t).is_err());
    }
}
