//! Seeded experiment execution.
//!
//! Seed `s` runs `base_seed + i` for `i in 0..n_seeds`. Each seed places its
//! nodes from the placement substream and gives every protocol fresh
//! generators from the other substreams, so each protocol sees the same
//! geometry and adding a column never changes the others. Per-seed values are
//! collected by seed index before any reduction, so the output does not
//! depend on how seeds are spread across threads.

use rayon::prelude::*;

use super::config::{ExperimentSpec, Protocol};
use super::table::{ResultTable, Row, RowKey, Stats};
use crate::beamforming::{run_policy, BeamPolicy, ProtocolRng};
use crate::error::{Error, Result};
use crate::formation::run_joint;
use crate::gain::{coherent_gain, AmplitudeVector};
use crate::rng::{SeedStreams, Substream};
use crate::scenario::{build_channels, place_nodes, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Whether `protocol` is run at all for this row (ES is skipped above its
/// transmitter cap, as in the reference tables).
fn applicable(spec: &ExperimentSpec, protocol: &Protocol, row: &ScenarioConfig) -> bool {
    match protocol {
        Protocol::Beam(BeamPolicy::Es { .. }) => {
            row.n_transmitters <= spec.beamforming.es_max_transmitters
        }
        _ => true,
    }
}

/// Gain (single stream) or objective (joint) of one protocol on one seed.
pub fn evaluate(
    spec: &ExperimentSpec,
    protocol: &Protocol,
    row: &ScenarioConfig,
    seed: u64,
) -> Result<f64> {
    let streams = SeedStreams::new(seed);
    let layout = place_nodes(row, &mut streams.stream(Substream::Placement))?;
    let ch = build_channels(&layout, row)?;
    let amps = AmplitudeVector::uniform(row.n_transmitters);
    match protocol {
        Protocol::Beam(policy) => {
            let mut rng = ProtocolRng::from_streams(&streams);
            let phases = run_policy(*policy, &ch, &amps, &spec.beamforming.beam_options(), &mut rng)?;
            Ok(coherent_gain(&ch, &phases, &amps)?.gain)
        }
        Protocol::Joint(joint) => {
            let opts = spec.beamforming.joint_options();
            let out = run_joint(*joint, row.n_streams, &ch, &layout, &amps, &opts, &streams)?;
            Ok(out.report.objective)
        }
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    run_experiment_with(spec, Execution::Parallel)
}

pub fn run_experiment_with(spec: &ExperimentSpec, exec: Execution) -> Result<ResultTable> {
    spec.validate()?;
    let protocols = spec.resolved_protocols();
    let seeds: Vec<u64> = (0..spec.n_seeds as u64)
        .map(|i| spec.base_seed.wrapping_add(i))
        .collect();

    let mut rows = Vec::new();
    for row in spec.row_scenarios() {
        let active: Vec<bool> = protocols.iter().map(|p| applicable(spec, p, &row)).collect();
        let per_seed = |seed: u64| -> Result<Vec<Option<f64>>> {
            protocols
                .iter()
                .zip(&active)
                .map(|(p, &on)| on.then(|| evaluate(spec, p, &row, seed)).transpose())
                .collect()
        };
        let values: Vec<Vec<Option<f64>>> = match exec {
            Execution::Sequential => seeds.iter().map(|&s| per_seed(s)).collect::<Result<_>>()?,
            Execution::Parallel => seeds.par_iter().map(|&s| per_seed(s)).collect::<Result<_>>()?,
        };
        let cells = (0..protocols.len())
            .map(|j| {
                let column: Vec<f64> = values.iter().filter_map(|v| v[j]).collect();
                Stats::from_values(&column)
            })
            .collect();
        rows.push(Row {
            key: RowKey {
                n_tx: row.n_transmitters,
                n_rx: row.n_receivers,
                n_streams: row.n_streams,
            },
            cells,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidConfig("experiment has no rows".into()));
    }
    Ok(ResultTable {
        title: spec.title.clone(),
        protocols: protocols.iter().map(Protocol::name).collect(),
        rows,
    })
}
