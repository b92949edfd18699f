//! Run configuration: one TOML document with embedded defaults.
//!
//! Every key is optional. Device profiles are merged key by key onto the
//! built-in profiles, so a config may override a single parameter:
//!
//! ```toml
//! seed = 7
//! [profiles.pt-ag-volatile]
//! v_th_dark = 0.45
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceError, DeviceParams, PROFILE_NONVOLATILE, PROFILE_VOLATILE};
use crate::maze::{EpsilonSchedule, MazeSpec};
use crate::neuro::{DendriteProtocol, SynapseProtocol};
use crate::optics::{DEFAULT_BOTTOM_AG_NM, DEFAULT_TOP_AG_NM};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid profile `{name}`: {source}")]
    Profile { name: String, source: DeviceError },
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IvSweepConfig {
    pub profile: String,
    /// Illumination for the second trace (W).
    pub power: f64,
    pub v_start: f64,
    pub v_peak: f64,
    pub v_step: f64,
    /// Dwell per grid point (s).
    pub dwell: f64,
}

impl Default for IvSweepConfig {
    fn default() -> Self {
        IvSweepConfig {
            profile: PROFILE_NONVOLATILE.into(),
            power: 1e-3,
            v_start: -0.2,
            v_peak: 1.0,
            v_step: 0.005,
            dwell: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    pub profile: String,
    pub delta_v: Vec<f64>,
    pub samples: usize,
    pub histogram_bins: usize,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            profile: PROFILE_VOLATILE.into(),
            delta_v: vec![-0.05, 0.0, 0.05, 0.1],
            samples: 100_000,
            histogram_bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    pub top_nm: f64,
    pub bottom_nm: f64,
    pub target_nm: f64,
    pub d_min_nm: f64,
    pub d_max_nm: f64,
    pub window_min_nm: f64,
    pub window_max_nm: f64,
    pub window_points: usize,
    /// GeSe3 thicknesses whose full spectra are exported.
    pub spectra_nm: Vec<f64>,
    /// Extra material tables, id -> CSV path.
    pub materials: BTreeMap<String, String>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        CavityConfig {
            top_nm: DEFAULT_TOP_AG_NM,
            bottom_nm: DEFAULT_BOTTOM_AG_NM,
            target_nm: 637.0,
            d_min_nm: 5.0,
            d_max_nm: 300.0,
            window_min_nm: 400.0,
            window_max_nm: 1100.0,
            window_points: 701,
            spectra_nm: vec![28.0, 51.0, 78.0, 103.0],
            materials: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynapseBackend {
    Device,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MazeConfig {
    pub trials: usize,
    pub backend: SynapseBackend,
    /// Trailing window of the success-rate curve.
    pub success_window: usize,
    pub layout: MazeSpec,
    pub epsilon: EpsilonSchedule,
}

impl Default for MazeConfig {
    fn default() -> Self {
        MazeConfig {
            trials: 200,
            backend: SynapseBackend::Device,
            success_window: 20,
            layout: MazeSpec::default(),
            epsilon: EpsilonSchedule::default(),
        }
    }
}

/// Synapse cell profile. The cell is mounted with reversed polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynapseConfig {
    pub profile: String,
    pub protocol: SynapseProtocol,
}

impl Default for SynapseConfig {
    fn default() -> Self {
        SynapseConfig { profile: PROFILE_NONVOLATILE.into(), protocol: SynapseProtocol::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XorConfig {
    pub profile: String,
    pub seeds: u64,
    /// Soma threshold (A); half the LRS read current when absent.
    pub soma_threshold: Option<f64>,
    pub dendrite: DendriteProtocol,
}

impl Default for XorConfig {
    fn default() -> Self {
        XorConfig { profile: PROFILE_VOLATILE.into(), seeds: 100, soma_threshold: None, dendrite: DendriteProtocol::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub profiles: BTreeMap<String, DeviceParams>,
    pub iv_sweep: IvSweepConfig,
    pub latency_stats: LatencyConfig,
    pub cavity_design: CavityConfig,
    pub synapse: SynapseConfig,
    pub maze_train: MazeConfig,
    pub xor: XorConfig,
}

pub fn default_profiles() -> BTreeMap<String, DeviceParams> {
    BTreeMap::from([
        (PROFILE_NONVOLATILE.to_string(), DeviceParams::ag_ag_nonvolatile()),
        (PROFILE_VOLATILE.to_string(), DeviceParams::pt_ag_volatile()),
    ])
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            profiles: default_profiles(),
            iv_sweep: IvSweepConfig::default(),
            latency_stats: LatencyConfig::default(),
            cavity_design: CavityConfig::default(),
            synapse: SynapseConfig::default(),
            maze_train: MazeConfig::default(),
            xor: XorConfig::default(),
        }
    }
}

impl Config {
    /// Parses TOML, merging `[profiles.*]` tables onto the built-in profiles.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse()?;
        let overrides = match table.remove("profiles") {
            None => toml::Table::new(),
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(ConfigError::Invalid("`profiles` must be a table".into())),
        };
        let mut config: Config = toml::Value::Table(table).try_into()?;
        let mut base = toml::Table::try_from(default_profiles()).expect("profiles serialize");
        for (name, value) in overrides {
            let toml::Value::Table(fields) = value else {
                return Err(ConfigError::Invalid(format!("profile `{name}` must be a table")));
            };
            let entry = base.entry(name.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(target) = entry else { unreachable!() };
            target.extend(fields);
        }
        config.profiles = toml::Value::Table(base).try_into()?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn profile(&self, name: &str) -> Result<&DeviceParams, ConfigError> {
        self.profiles.get(name).ok_or_else(|| ConfigError::UnknownProfile(name.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in &self.profiles {
            p.validate().map_err(|source| ConfigError::Profile { name: name.clone(), source })?;
        }
        for name in [&self.iv_sweep.profile, &self.latency_stats.profile, &self.synapse.profile, &self.xor.profile] {
            self.profile(name)?;
        }
        if self.latency_stats.samples == 0 || self.latency_stats.histogram_bins == 0 {
            return Err(ConfigError::Invalid("latency_stats needs samples and bins".into()));
        }
        if self.xor.seeds == 0 {
            return Err(ConfigError::Invalid("xor.seeds must be >= 1".into()));
        }
        if self.maze_train.trials == 0 {
            return Err(ConfigError::Invalid("maze_train.trials must be >= 1".into()));
        }
        self.maze_train.layout.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        let back = Config::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn partial_profile_override_merges() {
        let c = Config::from_toml("seed = 3\n[profiles.pt-ag-volatile]\nv_th_dark = 0.45\n").unwrap();
        assert_eq!(c.seed, 3);
        let p = c.profile(PROFILE_VOLATILE).unwrap();
        assert_eq!(p.v_th_dark, 0.45);
        assert_eq!(p.g_lrs, DeviceParams::pt_ag_volatile().g_lrs);
    }

    #[test]
    fn bad_documents_are_rejected() {
        assert!(Config::from_toml("seed = \"x\"").is_err());
        assert!(Config::from_toml("bogus = 1").is_err());
        assert!(Config::from_toml("[profiles.pt-ag-volatile]\ng_lrs = 1e-9\n").is_err());
        assert!(Config::from_toml("[profiles.new]\nv_th_dark = 0.4\n").is_err());
        assert!(Config::from_toml("[iv_sweep]\nprofile = \"missing\"\n").is_err());
        assert!(Config::from_toml("[profiles.pt-ag-volatile]\npolarity_sign = 2\n").is_err());
    }
}
