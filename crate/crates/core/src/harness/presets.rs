//! Built-in experiment presets.
//!
//! `t1` is the inverse-square baseline with a 10 m group radius. `t3`..`t6`
//! are the single-stream realistic-channel tables and `t7`..`t10` the
//! two-stream joint tables, all with a 100 m radius.

use super::config::{ExperimentSpec, Protocol};
use crate::beamforming::BeamPolicy;
use crate::error::{Error, Result};
use crate::formation::JointProtocol;
use crate::scenario::{ChannelModel, ScenarioConfig};

pub const PRESET_NAMES: [&str; 9] = ["t1", "t3", "t4", "t5", "t6", "t7", "t8", "t9", "t10"];

fn beam_protocols() -> Vec<Protocol> {
    BeamPolicy::all_default().into_iter().map(Protocol::Beam).collect()
}

fn joint_protocols() -> Vec<Protocol> {
    JointProtocol::standard_six().into_iter().map(Protocol::Joint).collect()
}

fn realistic(model: ChannelModel, distance: f64, streams: usize) -> (ScenarioConfig, Vec<Protocol>, String) {
    let scenario = ScenarioConfig::new(10, 10, distance, 100.0, model).with_streams(streams);
    let protocols = if streams > 1 { joint_protocols() } else { beam_protocols() };
    let title = format!(
        "{} channel, D={} m, r=100 m{}",
        model.label(),
        distance,
        if streams > 1 { ", K=2" } else { "" }
    );
    (scenario, protocols, title)
}

/// The named preset with `n_seeds` seeds starting at `base_seed`.
pub fn preset(name: &str, n_seeds: usize, base_seed: u64) -> Result<ExperimentSpec> {
    let (scenario, protocols, title, rows) = match name.trim().to_ascii_lowercase().as_str() {
        "t1" => (
            ScenarioConfig::new(3, 10, 1000.0, 10.0, ChannelModel::InverseSquare),
            beam_protocols(),
            "inverse-square channel, D=1000 m, r=10 m".to_string(),
            vec![[1, 1], [1, 10], [3, 1], [3, 10], [10, 10]],
        ),
        other => {
            let (model, distance, streams) = match other {
                "t3" => (ChannelModel::FreeSpace, 1000.0, 1),
                "t4" => (ChannelModel::TwoRay, 1000.0, 1),
                "t5" => (ChannelModel::FreeSpace, 10000.0, 1),
                "t6" => (ChannelModel::TwoRay, 10000.0, 1),
                "t7" => (ChannelModel::FreeSpace, 1000.0, 2),
                "t8" => (ChannelModel::TwoRay, 1000.0, 2),
                "t9" => (ChannelModel::FreeSpace, 10000.0, 2),
                "t10" => (ChannelModel::TwoRay, 10000.0, 2),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "unknown preset {name:?}; expected one of {}",
                        PRESET_NAMES.join(", ")
                    )))
                }
            };
            let (s, p, t) = realistic(model, distance, streams);
            (s, p, t, vec![[3, 10], [10, 10]])
        }
    };
    let mut spec = ExperimentSpec::new(scenario, protocols);
    spec.title = title;
    spec.rows = rows;
    spec.n_seeds = n_seeds;
    spec.base_seed = base_seed;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            let spec = preset(name, 100, 1).unwrap();
            assert_eq!(spec.protocols.len(), 6, "{name}");
        }
    }

    #[test]
    fn joint_presets_use_two_streams() {
        for name in ["t7", "t8", "t9", "t10"] {
            let spec = preset(name, 1, 1).unwrap();
            assert_eq!(spec.scenario.n_streams, 2);
            assert!(spec.protocols.iter().all(Protocol::is_joint));
        }
        assert!(preset("t2", 1, 1).is_err());
    }
}
