use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::SyntheticTrace;
use crate::error::{Error, Result};
use crate::phy::ChannelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    /// IBP concentration; mean number of contents each user selects.
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    /// Measured users, each mapped to a distinct UE.
    #[serde(default = "defaults::n_users")]
    pub n_users: usize,
    /// IBP users run before measurement; they shape the priors only.
    #[serde(default)]
    pub warmup_users: u64,
    /// Closeness threshold for OffSN membership.
    #[serde(default = "defaults::w_t")]
    pub w_t: f64,
    /// Minimum contact duration to deliver one content, seconds.
    #[serde(default = "defaults::x_min")]
    pub x_min: f64,
    /// Minimum encounters before a pair gets a closeness edge.
    #[serde(default = "defaults::n_min")]
    pub n_min: u64,
    /// Maximum D2D distance, meters.
    #[serde(default = "defaults::d_max")]
    pub d_max: f64,
    /// Control cost per selected content, in rate units.
    #[serde(default)]
    pub c_c: f64,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub placement: PlacementConfig,
    #[serde(default)]
    pub trace: TraceSource,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

mod defaults {
    pub fn seed() -> u64 {
        1
    }
    pub fn alpha() -> f64 {
        20.0
    }
    pub fn n_users() -> usize {
        27
    }
    pub fn w_t() -> f64 {
        0.5
    }
    pub fn x_min() -> f64 {
        60.0
    }
    pub fn n_min() -> u64 {
        2
    }
    pub fn d_max() -> f64 {
        50.0
    }
    pub fn repetitions() -> usize {
        20
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: defaults::seed(),
            alpha: defaults::alpha(),
            n_users: defaults::n_users(),
            warmup_users: 0,
            w_t: defaults::w_t(),
            x_min: defaults::x_min(),
            n_min: defaults::n_min(),
            d_max: defaults::d_max(),
            c_c: 0.0,
            channel: ChannelParams::default(),
            placement: PlacementConfig::default(),
            trace: TraceSource::default(),
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementConfig {
    /// Cell radius around the eNB, meters.
    pub cell_radius: f64,
    /// Radius of the dense-area disk each OffSN is placed in, meters.
    pub hotspot_radius: f64,
    /// Distance of the hotspot centers from the eNB, as a fraction of the cell radius.
    pub hotspot_ring: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig { cell_radius: 500.0, hotspot_radius: 40.0, hotspot_ring: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    /// Canonical trace CSV. Relative paths resolve against the config file.
    File { path: PathBuf },
    Synthetic(SyntheticTrace),
}

impl Default for TraceSource {
    fn default() -> Self {
        TraceSource::Synthetic(SyntheticTrace::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    DMax,
    CC,
}

impl SweepParam {
    pub fn apply(self, config: &mut SimConfig, value: f64) {
        match self {
            SweepParam::DMax => config.d_max = value,
            SweepParam::CC => config.c_c = value,
        }
    }

    pub fn current(self, config: &SimConfig) -> f64 {
        match self {
            SweepParam::DMax => config.d_max,
            SweepParam::CC => config.c_c,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d_max" => Ok(SweepParam::DMax),
            "c_c" => Ok(SweepParam::CC),
            other => Err(Error::config(format!("unknown sweep parameter `{other}`, expected d_max or c_c"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("d_max", self.d_max)?;
        positive("placement.cell_radius", self.placement.cell_radius)?;
        positive("placement.hotspot_radius", self.placement.hotspot_radius)?;
        if !(0.0..1.0).contains(&self.placement.hotspot_ring) {
            return Err(Error::config("placement.hotspot_ring must lie in [0, 1)"));
        }
        if self.n_users == 0 {
            return Err(Error::config("n_users must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.w_t) {
            return Err(Error::config(format!("w_t must lie in [0, 1], got {}", self.w_t)));
        }
        if !(self.x_min >= 0.0 && self.x_min.is_finite()) {
            return Err(Error::config(format!("x_min must be non-negative, got {}", self.x_min)));
        }
        if self.n_min < 1 {
            return Err(Error::config("n_min must be at least 1"));
        }
        if !(self.c_c >= 0.0 && self.c_c.is_finite()) {
            return Err(Error::config(format!("c_c must be non-negative, got {}", self.c_c)));
        }
        self.channel.validate()?;
        if let TraceSource::Synthetic(s) = &self.trace {
            s.validate()?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::config("sweep.values must not be empty"));
            }
            if sweep.repetitions == 0 {
                return Err(Error::config("sweep.repetitions must be at least 1"));
            }
            for &v in &sweep.values {
                let mut probe = self.clone();
                probe.sweep = None;
                sweep.parameter.apply(&mut probe, v);
                probe.validate()?;
            }
        }
        Ok(())
    }

    /// Parses TOML, or JSON when `format_hint` ends in `.json`. Errors name
    /// the offending field path.
    pub fn parse(text: &str, format_hint: &Path) -> Result<SimConfig> {
        let is_json = format_hint.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config: SimConfig = if is_json {
            let value: serde_json::Value = serde_json::from_str(text)?;
            serde_path_to_error::deserialize(value).map_err(|e| schema_error(e.path(), e.inner()))?
        } else {
            let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
            serde_path_to_error::deserialize(toml::Value::Table(value))
                .map_err(|e| schema_error(e.path(), e.inner()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<SimConfig> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::parse(&text, path)?;
        if let TraceSource::File { path: trace } = &mut config.trace {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(config)
    }
}

fn schema_error(path: &serde_path_to_error::Path, inner: &dyn std::fmt::Display) -> Error {
    Error::config(format!("at `{path}`: {inner}"))
}
