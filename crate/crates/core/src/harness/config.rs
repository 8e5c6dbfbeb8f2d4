//! Experiment files.
//!
//! An experiment is a TOML document (schema version 1). Only `[scenario]`
//! with its geometry and `protocols` are required; everything else falls
//! back to the defaults in `configs/reference.toml`:
//!
//! ```toml
//! version = 1
//! protocols = ["RB", "SF", "IO"]   # beam policies, or joint names like "DBT"
//! rows = [[3, 10], [10, 10]]       # optional (N, M) sweep
//! n_seeds = 100
//! base_seed = 1
//!
//! [scenario]
//! n_transmitters = 3
//! n_receivers = 10
//! distance = 1000.0
//! group_radius = 10.0
//! channel_model = "inverse-square"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamforming::{BeamOptions, BeamPolicy, DEFAULT_ES_STEP};
use crate::error::{Error, Result};
use crate::formation::{JointOptions, JointProtocol, DEFAULT_EXHAUSTIVE_CAP};
use crate::gain::Objective;
use crate::linkbudget::LinkBudgetParams;
use crate::scenario::ScenarioConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// A protocol column: a single-stream beam policy or a joint
/// formation-plus-beamforming protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    Beam(BeamPolicy),
    Joint(JointProtocol),
}

impl Protocol {
    pub fn name(&self) -> String {
        match self {
            Protocol::Beam(b) => b.name().to_string(),
            Protocol::Joint(j) => j.name(),
        }
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, Protocol::Joint(_))
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().len() {
            2 => Ok(Protocol::Beam(s.parse()?)),
            3 => Ok(Protocol::Joint(s.parse()?)),
            _ => Err(Error::InvalidInput(format!("unknown protocol {s:?}"))),
        }
    }
}

impl Serialize for Protocol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Protocol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub es_grid_step: f64,
    pub es_max_transmitters: usize,
    pub io_max_sweeps: usize,
    pub io_tol: f64,
    pub objective: Objective,
    pub exhaustive_cap: u64,
}

impl Default for BeamSection {
    fn default() -> Self {
        let b = BeamOptions::default();
        Self {
            es_grid_step: DEFAULT_ES_STEP,
            es_max_transmitters: b.es_max_transmitters,
            io_max_sweeps: b.io_max_sweeps,
            io_tol: b.io_tol,
            objective: Objective::Min,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP as u64,
        }
    }
}

impl BeamSection {
    pub fn beam_options(&self) -> BeamOptions {
        BeamOptions {
            io_max_sweeps: self.io_max_sweeps,
            io_tol: self.io_tol,
            es_max_transmitters: self.es_max_transmitters,
        }
    }

    pub fn joint_options(&self) -> JointOptions {
        JointOptions {
            beam: self.beam_options(),
            objective: self.objective,
            exhaustive_cap: self.exhaustive_cap as u128,
        }
    }
}

/// Link-budget parameters; defaults are the reference deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetSection {
    pub transmit_power_dbm: f64,
    pub noise_figure_db: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub center_frequency_hz: f64,
    pub light_speed: f64,
    pub train_snr_db: f64,
    pub feedback_snr_db: f64,
    pub bits_per_estimate: f64,
    pub header_bits: f64,
    pub overhead_fraction: f64,
    pub group_size: usize,
}

impl Default for LinkBudgetSection {
    fn default() -> Self {
        LinkBudgetParams::default().into()
    }
}

impl From<LinkBudgetParams> for LinkBudgetSection {
    fn from(p: LinkBudgetParams) -> Self {
        Self {
            transmit_power_dbm: p.transmit_power_dbm,
            noise_figure_db: p.noise_figure_db,
            noise_density_dbm_hz: p.noise_density_dbm_hz,
            bandwidth_hz: p.bandwidth_hz,
            center_frequency_hz: p.center_frequency_hz,
            light_speed: p.light_speed,
            train_snr_db: p.train_snr_db,
            feedback_snr_db: p.feedback_snr_db,
            bits_per_estimate: p.bits_per_estimate,
            header_bits: p.header_bits,
            overhead_fraction: p.overhead_fraction,
            group_size: p.group_size,
        }
    }
}

impl From<&LinkBudgetSection> for LinkBudgetParams {
    fn from(s: &LinkBudgetSection) -> Self {
        Self {
            transmit_power_dbm: s.transmit_power_dbm,
            noise_figure_db: s.noise_figure_db,
            noise_density_dbm_hz: s.noise_density_dbm_hz,
            bandwidth_hz: s.bandwidth_hz,
            center_frequency_hz: s.center_frequency_hz,
            light_speed: s.light_speed,
            train_snr_db: s.train_snr_db,
            feedback_snr_db: s.feedback_snr_db,
            bits_per_estimate: s.bits_per_estimate,
            header_bits: s.header_bits,
            overhead_fraction: s.overhead_fraction,
            group_size: s.group_size,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv_path: Option<PathBuf>,
    pub markdown: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "schema_version")]
    pub version: u32,
    #[serde(default)]
    pub title: String,
    pub protocols: Vec<Protocol>,
    /// `(N, M)` pairs; empty means the scenario's own counts.
    #[serde(default)]
    pub rows: Vec<[usize; 2]>,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub beamforming: BeamSection,
    #[serde(default)]
    pub link_budget: LinkBudgetSection,
    #[serde(default)]
    pub outputs: Outputs,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_seeds() -> usize {
    100
}

fn default_base_seed() -> u64 {
    1
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioConfig, protocols: Vec<Protocol>) -> Self {
        Self {
            version: SCHEMA_VERSION,
            title: String::new(),
            protocols,
            rows: Vec::new(),
            n_seeds: default_seeds(),
            base_seed: default_base_seed(),
            scenario,
            beamforming: BeamSection::default(),
            link_budget: LinkBudgetSection::default(),
            outputs: Outputs::default(),
        }
    }

    /// Scenario for each row, in order.
    pub fn row_scenarios(&self) -> Vec<ScenarioConfig> {
        if self.rows.is_empty() {
            return vec![self.scenario.clone()];
        }
        self.rows
            .iter()
            .map(|&[n, m]| ScenarioConfig {
                n_transmitters: n,
                n_receivers: m,
                ..self.scenario.clone()
            })
            .collect()
    }

    /// ES step from the config applied to every ES column.
    pub fn resolved_protocols(&self) -> Vec<Protocol> {
        self.protocols
            .iter()
            .map(|p| match p {
                Protocol::Beam(BeamPolicy::Es { .. }) => Protocol::Beam(BeamPolicy::Es {
                    grid_step: self.beamforming.es_grid_step,
                }),
                other => *other,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.version != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.version));
        }
        if self.protocols.is_empty() {
            return bad("protocol list is empty".into());
        }
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1".into());
        }
        let b = &self.beamforming;
        if !(b.es_grid_step > 0.0) || !(b.io_tol > 0.0) || b.io_max_sweeps == 0 {
            return bad("beamforming: es_grid_step and io_tol must be positive, io_max_sweeps >= 1".into());
        }
        LinkBudgetParams::from(&self.link_budget).validate()?;
        for row in self.row_scenarios() {
            row.validate()?;
            let k = row.n_streams;
            for p in &self.protocols {
                match p {
                    Protocol::Beam(_) if k != 1 => {
                        return bad(format!("protocol {p} is single-stream but n_streams = {k}"))
                    }
                    Protocol::Joint(_) if k < 2 => {
                        return bad(format!("joint protocol {p} needs n_streams >= 2, got {k}"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Read, parse and validate an experiment file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    ExperimentSpec::from_toml(&text).map_err(|e| match e {
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
        other => other,
    })
}
