//! Network formation for multiple streams.
//!
//! Stream `k` has source transmitter `k` and destination receiver `k`. The
//! remaining nodes are split among the streams by a formation policy, and each
//! stream then picks its transmit phases within its own groups. Interference
//! between streams is an incoherent power sum, so one stream's phases never
//! change another stream's SIR denominator and the streams can be beamformed
//! independently.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::beamforming::{apply_policy, BeamOptions, BeamPolicy, ProtocolRng, RtTarget, Scope};
use crate::error::{Error, Result};
use crate::gain::{sir_report, AmplitudeVector, Objective, PhaseVector, SirReport, Stream, StreamAssignment};
use crate::rng::{SeedStreams, Substream};
use crate::scenario::{ChannelMatrix, NodeLayout};

/// Default ceiling on the number of assignments exhaustive formation visits.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormationPolicy {
    Random,
    DistanceBased,
    Exhaustive,
}

impl FormationPolicy {
    fn prefix(&self) -> char {
        match self {
            FormationPolicy::Random => 'R',
            FormationPolicy::DistanceBased => 'D',
            FormationPolicy::Exhaustive => 'E',
        }
    }
}

/// A formation policy paired with the beamforming policy used inside each
/// stream, named by formation letter plus beam policy (`DBT`, `RRB`, ...).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointProtocol {
    pub formation: FormationPolicy,
    pub beam: BeamPolicy,
}

impl JointProtocol {
    pub const fn new(formation: FormationPolicy, beam: BeamPolicy) -> Self {
        Self { formation, beam }
    }

    /// RRB, RRT, RBT, DRB, DRT, DBT.
    pub fn standard_six() -> [JointProtocol; 6] {
        use BeamPolicy::{Bt, Rb, Rt};
        use FormationPolicy::{DistanceBased, Random};
        [
            Self::new(Random, Rb),
            Self::new(Random, Rt(RtTarget::Random)),
            Self::new(Random, Bt),
            Self::new(DistanceBased, Rb),
            Self::new(DistanceBased, Rt(RtTarget::Random)),
            Self::new(DistanceBased, Bt),
        ]
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.formation.prefix(), self.beam.name())
    }
}

impl fmt::Display for JointProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for JointProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_uppercase();
        let mut chars = s.chars();
        let formation = match chars.next() {
            Some('R') => FormationPolicy::Random,
            Some('D') => FormationPolicy::DistanceBased,
            Some('E') => FormationPolicy::Exhaustive,
            _ => return Err(Error::InvalidInput(format!("unknown joint protocol {s:?}"))),
        };
        let beam: BeamPolicy = chars.as_str().parse()?;
        if s.len() != 3 || matches!(beam, BeamPolicy::Es { .. }) {
            return Err(Error::InvalidInput(format!("unknown joint protocol {s:?}")));
        }
        Ok(Self::new(formation, beam))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions {
    pub beam: BeamOptions,
    pub objective: Objective,
    pub exhaustive_cap: u128,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self {
            beam: BeamOptions::default(),
            objective: Objective::Min,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub assignment: StreamAssignment,
    pub phases: PhaseVector,
    pub report: SirReport,
}

fn check_heads(heads: &[usize], pool: usize, kind: &str) -> Result<()> {
    if heads.is_empty() || heads.len() > pool {
        return Err(Error::InvalidInput(format!(
            "{} {kind}s for a pool of {pool}",
            heads.len()
        )));
    }
    for (i, &h) in heads.iter().enumerate() {
        if h >= pool {
            return Err(Error::InvalidInput(format!("{kind} {h} out of range (pool {pool})")));
        }
        if heads[..i].contains(&h) {
            return Err(Error::InvalidInput(format!("{kind} {h} listed twice")));
        }
    }
    Ok(())
}

/// Builds an assignment from per-node stream labels (`None` for heads).
fn assemble(
    sources: &[usize],
    destinations: &[usize],
    tx_label: &[Option<usize>],
    rx_label: &[Option<usize>],
) -> Result<StreamAssignment> {
    let streams = (0..sources.len())
        .map(|k| {
            Stream::new(
                sources[k],
                destinations[k],
                (0..tx_label.len()).filter(|&n| tx_label[n] == Some(k)),
                (0..rx_label.len()).filter(|&m| rx_label[m] == Some(k)),
            )
        })
        .collect();
    StreamAssignment::new(streams, tx_label.len(), rx_label.len())
}

/// Each non-head node joins a uniformly random stream. Transmitters draw
/// first, in index order, then receivers.
pub fn random_formation<R: Rng + ?Sized>(
    n_tx: usize,
    n_rx: usize,
    sources: &[usize],
    destinations: &[usize],
    rng: &mut R,
) -> Result<StreamAssignment> {
    check_heads(sources, n_tx, "source")?;
    check_heads(destinations, n_rx, "destination")?;
    if sources.len() != destinations.len() {
        return Err(Error::InvalidInput("sources and destinations differ in count".into()));
    }
    let k = sources.len();
    let mut draw = |pool: usize, heads: &[usize]| -> Vec<Option<usize>> {
        (0..pool)
            .map(|i| (!heads.contains(&i)).then(|| rng.gen_range(0..k)))
            .collect()
    };
    let tx_label = draw(n_tx, sources);
    let rx_label = draw(n_rx, destinations);
    assemble(sources, destinations, &tx_label, &rx_label)
}

/// Each transmitter joins its nearest source and each receiver its nearest
/// destination; ties go to the lower stream index.
pub fn distance_formation(
    layout: &NodeLayout,
    sources: &[usize],
    destinations: &[usize],
) -> Result<StreamAssignment> {
    check_heads(sources, layout.n_tx(), "source")?;
    check_heads(destinations, layout.n_rx(), "destination")?;
    if sources.len() != destinations.len() {
        return Err(Error::InvalidInput("sources and destinations differ in count".into()));
    }
    let nearest = |nodes: &[crate::scenario::Point], heads: &[usize]| -> Vec<Option<usize>> {
        (0..nodes.len())
            .map(|i| {
                if heads.contains(&i) {
                    return None;
                }
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (k, &h) in heads.iter().enumerate() {
                    let d = nodes[i].distance(&nodes[h]);
                    if d < best_d {
                        best = k;
                        best_d = d;
                    }
                }
                Some(best)
            })
            .collect()
    };
    let tx_label = nearest(&layout.transmitters, sources);
    let rx_label = nearest(&layout.receivers, destinations);
    assemble(sources, destinations, &tx_label, &rx_label)
}

fn beamform_streams(
    beam: BeamPolicy,
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    assignment: &StreamAssignment,
    opts: &JointOptions,
    rng: &mut ProtocolRng,
) -> Result<PhaseVector> {
    if matches!(beam, BeamPolicy::Es { .. }) {
        return Err(Error::Unsupported("ES is not available inside joint protocols".into()));
    }
    let mut phases = PhaseVector::zeros(ch.n_tx());
    for stream in assignment.streams() {
        apply_policy(beam, ch, amps, &Scope::from(stream), &opts.beam, rng, &mut phases)?;
    }
    Ok(phases)
}

/// Forms the groups, beamforms each stream inside its own groups, and scores
/// every stream by SIR gain. Sources are transmitters `0..K`, destinations
/// receivers `0..K`.
pub fn run_joint(
    protocol: JointProtocol,
    n_streams: usize,
    ch: &ChannelMatrix,
    layout: &NodeLayout,
    amps: &AmplitudeVector,
    opts: &JointOptions,
    streams: &SeedStreams,
) -> Result<JointOutcome> {
    if n_streams < 2 {
        return Err(Error::SingleStream(n_streams));
    }
    if layout.n_tx() != ch.n_tx() || layout.n_rx() != ch.n_rx() {
        return Err(Error::InvalidInput("layout and channel sizes differ".into()));
    }
    let heads: Vec<usize> = (0..n_streams).collect();
    let assignment = match protocol.formation {
        FormationPolicy::Random => {
            let mut rng = streams.stream(Substream::Formation);
            random_formation(ch.n_tx(), ch.n_rx(), &heads, &heads, &mut rng)?
        }
        FormationPolicy::DistanceBased => distance_formation(layout, &heads, &heads)?,
        FormationPolicy::Exhaustive => {
            return exhaustive_formation(ch, amps, n_streams, protocol.beam, opts, streams);
        }
    };
    let mut rng = ProtocolRng::from_streams(streams);
    let phases = beamform_streams(protocol.beam, ch, amps, &assignment, opts, &mut rng)?;
    let report = sir_report(ch, &phases, amps, &assignment, opts.objective)?;
    Ok(JointOutcome {
        assignment,
        phases,
        report,
    })
}

/// Number of assignments exhaustive formation would enumerate.
pub fn formation_count(n_tx: usize, n_rx: usize, n_streams: usize) -> u128 {
    let k = n_streams as u128;
    let free = (n_tx - n_streams.min(n_tx)) + (n_rx - n_streams.min(n_rx));
    k.checked_pow(free as u32).unwrap_or(u128::MAX)
}

/// Tries every assignment of non-head nodes to streams and keeps the one with
/// the best objective. Assignments are visited in lexicographic order of the
/// per-node stream labels (transmitters, then receivers) and only a strictly
/// better objective replaces the incumbent. Randomized beam policies see the
/// same draws for every candidate.
pub fn exhaustive_formation(
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    n_streams: usize,
    beam: BeamPolicy,
    opts: &JointOptions,
    streams: &SeedStreams,
) -> Result<JointOutcome> {
    if n_streams < 2 {
        return Err(Error::SingleStream(n_streams));
    }
    let (n_tx, n_rx) = (ch.n_tx(), ch.n_rx());
    if n_streams > n_tx.min(n_rx) {
        return Err(Error::InvalidInput(format!("{n_streams} streams for a {n_tx}x{n_rx} pool")));
    }
    let required = formation_count(n_tx, n_rx, n_streams);
    if required > opts.exhaustive_cap {
        return Err(Error::TooComplex {
            what: "exhaustive network formation",
            required,
            cap: opts.exhaustive_cap,
        });
    }
    let heads: Vec<usize> = (0..n_streams).collect();
    let free_tx = n_tx - n_streams;
    let mut labels = vec![0usize; free_tx + n_rx - n_streams];
    let mut best: Option<JointOutcome> = None;
    loop {
        let tx_label: Vec<Option<usize>> = (0..n_tx)
            .map(|n| (n >= n_streams).then(|| labels[n - n_streams]))
            .collect();
        let rx_label: Vec<Option<usize>> = (0..n_rx)
            .map(|m| (m >= n_streams).then(|| labels[free_tx + m - n_streams]))
            .collect();
        let assignment = assemble(&heads, &heads, &tx_label, &rx_label)?;
        let mut rng = ProtocolRng::from_streams(streams);
        let phases = beamform_streams(beam, ch, amps, &assignment, opts, &mut rng)?;
        let report = sir_report(ch, &phases, amps, &assignment, opts.objective)?;
        if best.as_ref().map_or(true, |b| report.objective > b.report.objective) {
            best = Some(JointOutcome {
                assignment,
                phases,
                report,
            });
        }

        let mut d = labels.len();
        loop {
            if d == 0 {
                return best.ok_or_else(|| Error::InvalidInput("no assignment".into()));
            }
            d -= 1;
            labels[d] += 1;
            if labels[d] < n_streams {
                break;
            }
            labels[d] = 0;
        }
    }
}
