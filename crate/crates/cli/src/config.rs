//! Experiment configuration: JSON with a strict schema (unknown keys are
//! rejected) and Table-style presets for the two connectivity scenarios.

use anyhow::{bail, Context, Result};
use dcaa_core::{ChannelParams, ElementPattern};
use serde::{Deserialize, Serialize};

/// Connectivity presets or explicit dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// M = 64, K = N_RF = 10.
    Normal,
    /// M = 128, K = N_RF = 30.
    Dense,
    Custom { m: usize, k: usize, n_rf: usize },
}

impl Scenario {
    pub fn dimensions(self) -> (usize, usize, usize) {
        match self {
            Scenario::Normal => (64, 10, 10),
            Scenario::Dense => (128, 30, 30),
            Scenario::Custom { m, k, n_rf } => (m, k, n_rf),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uplink,
    Downlink,
    Both,
}

impl Direction {
    pub fn runs_uplink(self) -> bool {
        matches!(self, Direction::Uplink | Direction::Both)
    }
    pub fn runs_downlink(self) -> bool {
        matches!(self, Direction::Downlink | Direction::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Dcaa,
    Ula,
    Both,
}

impl Architecture {
    pub fn runs_dcaa(self) -> bool {
        matches!(self, Architecture::Dcaa | Architecture::Both)
    }
    pub fn runs_ula(self) -> bool {
        matches!(self, Architecture::Ula | Architecture::Both)
    }
}

/// Channel-model overrides; defaults follow the indoor-office tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub c_asa_deg: f64,
    pub c_eas_deg: f64,
    pub n_clusters: usize,
    pub n_rays: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = ChannelParams::new(47.2e9);
        Self {
            c_asa_deg: p.c_asa_deg,
            c_eas_deg: p.c_eas_deg,
            n_clusters: p.n_clusters,
            n_rays: p.n_rays,
        }
    }
}

/// Downlink-iteration options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmConfig {
    pub t_max: usize,
    pub eps_th: f64,
    pub update_selection: bool,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            t_max: 50,
            eps_th: 0.01,
            update_selection: false,
        }
    }
}

/// Pattern-export grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternGridConfig {
    /// Azimuth step in radians over `(-pi, pi]`.
    pub phi_step_rad: f64,
    /// Zenith cut, radians.
    pub theta_rad: f64,
    /// Which sub-array ports to export individually.
    pub subarrays: SubArraySelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", untagged)]
pub enum SubArraySelection {
    All(AllTag),
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllTag {
    All,
}

impl Default for PatternGridConfig {
    fn default() -> Self {
        Self {
            phi_step_rad: 0.001,
            theta_rad: std::f64::consts::FRAC_PI_2,
            subarrays: SubArraySelection::All(AllTag::All),
        }
    }
}

/// Hardware unit prices in dollars; required by the cost command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub c_an: f64,
    pub c_ps: f64,
    pub c_sw: f64,
}

/// Top-level experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_f_c")]
    pub f_c_hz: f64,
    #[serde(default = "default_snr_grid")]
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_architecture")]
    pub architecture: Architecture,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub pattern_grid: PatternGridConfig,
    #[serde(default)]
    pub cost: Option<CostConfig>,
    /// Dump per-(trial, user) ray sets as JSON for replay.
    #[serde(default)]
    pub dump_channels: bool,
}

fn default_f_c() -> f64 {
    47.2e9
}
fn default_snr_grid() -> Vec<f64> {
    vec![0.0, 5.0, 10.0, 15.0, 20.0]
}
fn default_trials() -> usize {
    100
}
fn default_direction() -> Direction {
    Direction::Both
}
fn default_architecture() -> Architecture {
    Architecture::Both
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, k, n_rf) = self.scenario.dimensions();
        if m < 2 || k == 0 || n_rf == 0 {
            bail!("scenario dimensions must satisfy M >= 2, K >= 1, N_RF >= 1");
        }
        if k > n_rf {
            bail!("joint service requires K <= N_RF (got K={k}, N_RF={n_rf})");
        }
        if self.n_trials == 0 {
            bail!("n_trials must be at least 1");
        }
        if self.snr_grid_db.is_empty() {
            bail!("snr_grid_db must contain at least one point");
        }
        if self.f_c_hz.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            bail!("f_c_hz must be positive");
        }
        let step = self.pattern_grid.phi_step_rad;
        if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || step > 2.0 * std::f64::consts::PI
        {
            bail!("pattern_grid.phi_step_rad must define a nonempty grid");
        }
        self.channel_params().validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams {
        let mut p = ChannelParams::new(self.f_c_hz);
        p.c_asa_deg = self.channel.c_asa_deg;
        p.c_eas_deg = self.channel.c_eas_deg;
        p.n_clusters = self.channel.n_clusters;
        p.n_rays = self.channel.n_rays;
        p
    }

    pub fn element_pattern(&self) -> ElementPattern {
        ElementPattern::default()
    }
}
