//! Phase-selection protocols.
//!
//! Every protocol works on a [`Scope`]: a transmitter subset whose phases it
//! chooses and a receiver subset whose summed coherent power it targets. The
//! single-stream protocols use the full scope; the joint protocols reuse the
//! same code per stream.
//!
//! All the iterative protocols rely on one exact 1-D step. With the other
//! phases held fixed, the scoped power as a function of `theta_n` is
//! `const + 2 Re(e^{i theta_n} Z)` where
//! `Z = sum_m A_n h_nm e^{i theta_nm} conj(C_m)` and `C_m` is the field the
//! other transmitters produce at receiver `m`. The maximizer is
//! `theta_n = -arg Z`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gain::{contribution, scoped_power, AmplitudeVector, PhaseVector, Stream};
use crate::rng::{SeedStreams, Substream};
use crate::scenario::{wrap_phase, ChannelMatrix};

const TWO_PI: f64 = 2.0 * PI;

/// Default exhaustive-search grid step: one degree.
pub const DEFAULT_ES_STEP: f64 = TWO_PI / 360.0;

/// Receiver choice for the random-target protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtTarget {
    Fixed(usize),
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamPolicy {
    /// Independent uniform phases.
    Rb,
    /// Phase coherence at one receiver.
    Rt(RtTarget),
    /// Phase coherence at whichever receiver maximizes the total gain.
    Bt,
    /// Sequential fixing.
    Sf,
    /// Sequential fixing followed by coordinate-ascent sweeps.
    Io,
    /// Grid search with the given step in radians.
    Es { grid_step: f64 },
}

impl BeamPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            BeamPolicy::Rb => "RB",
            BeamPolicy::Rt(_) => "RT",
            BeamPolicy::Bt => "BT",
            BeamPolicy::Sf => "SF",
            BeamPolicy::Io => "IO",
            BeamPolicy::Es { .. } => "ES",
        }
    }

    pub fn all_default() -> [BeamPolicy; 6] {
        [
            BeamPolicy::Rb,
            BeamPolicy::Rt(RtTarget::Random),
            BeamPolicy::Bt,
            BeamPolicy::Sf,
            BeamPolicy::Io,
            BeamPolicy::Es {
                grid_step: DEFAULT_ES_STEP,
            },
        ]
    }
}

impl fmt::Display for BeamPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BeamPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RB" => Ok(BeamPolicy::Rb),
            "RT" => Ok(BeamPolicy::Rt(RtTarget::Random)),
            "BT" => Ok(BeamPolicy::Bt),
            "SF" => Ok(BeamPolicy::Sf),
            "IO" => Ok(BeamPolicy::Io),
            "ES" => Ok(BeamPolicy::Es {
                grid_step: DEFAULT_ES_STEP,
            }),
            other => Err(Error::InvalidInput(format!("unknown beamforming protocol {other:?}"))),
        }
    }
}

/// Tuning knobs shared by the iterative and exhaustive protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamOptions {
    pub io_max_sweeps: usize,
    /// Relative gain improvement below which a sweep counts as converged.
    pub io_tol: f64,
    pub es_max_transmitters: usize,
}

impl Default for BeamOptions {
    fn default() -> Self {
        Self {
            io_max_sweeps: 100,
            io_tol: 1e-9,
            es_max_transmitters: 3,
        }
    }
}

/// Random draws consumed by RB (phases) and RT (target receiver).
#[derive(Debug, Clone)]
pub struct ProtocolRng {
    pub phases: ChaCha8Rng,
    pub targets: ChaCha8Rng,
}

impl ProtocolRng {
    pub fn from_streams(streams: &SeedStreams) -> Self {
        Self {
            phases: streams.stream(Substream::RandomPhases),
            targets: streams.stream(Substream::TargetChoice),
        }
    }
}

/// Transmitters whose phases are chosen and receivers whose power counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub transmitters: Vec<usize>,
    pub receivers: Vec<usize>,
}

impl Scope {
    pub fn new(transmitters: Vec<usize>, receivers: Vec<usize>) -> Self {
        Self {
            transmitters,
            receivers,
        }
    }

    pub fn full(ch: &ChannelMatrix) -> Self {
        Self::new((0..ch.n_tx()).collect(), (0..ch.n_rx()).collect())
    }

    fn check(&self, ch: &ChannelMatrix) -> Result<()> {
        if self.transmitters.is_empty() || self.receivers.is_empty() {
            return Err(Error::InvalidInput("empty beamforming scope".into()));
        }
        if let Some(&n) = self.transmitters.iter().find(|&&n| n >= ch.n_tx()) {
            return Err(Error::IndexOutOfRange {
                kind: "transmitter",
                index: n,
                size: ch.n_tx(),
            });
        }
        if let Some(&m) = self.receivers.iter().find(|&&m| m >= ch.n_rx()) {
            return Err(Error::IndexOutOfRange {
                kind: "receiver",
                index: m,
                size: ch.n_rx(),
            });
        }
        Ok(())
    }
}

impl From<&Stream> for Scope {
    fn from(s: &Stream) -> Self {
        Self::new(s.transmitters.clone(), s.receivers.clone())
    }
}

/// Best `theta_n` for the scoped power with every other phase fixed.
///
/// Returns `-arg Z` (wrapped), or 0 when `Z` vanishes and the power does not
/// depend on `theta_n`. If rounding makes the candidate evaluate below the
/// current phase, the current phase is kept, so the scoped power never drops.
pub fn optimize_single_phase(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    n: usize,
    scope: &Scope,
) -> f64 {
    let mut z = Complex64::new(0.0, 0.0);
    for &m in &scope.receivers {
        let others: Complex64 = scope
            .transmitters
            .iter()
            .filter(|&&i| i != n)
            .map(|&i| contribution(ch, phases, amps, i, m))
            .sum();
        z += Complex64::from_polar(amps[n] * ch.gain(n, m), ch.phase(n, m)) * others.conj();
    }
    let candidate = if z.norm() == 0.0 { 0.0 } else { wrap_phase(-z.arg()) };

    let current = phases[n];
    if candidate == current {
        return candidate;
    }
    let mut trial = phases.clone();
    trial[n] = candidate;
    let with_candidate = scoped_power(ch, &trial, amps, &scope.transmitters, &scope.receivers);
    let with_current = scoped_power(ch, phases, amps, &scope.transmitters, &scope.receivers);
    if with_candidate >= with_current {
        candidate
    } else {
        current
    }
}

/// Uniform independent phases.
pub fn run_rb<R: Rng + ?Sized>(ch: &ChannelMatrix, rng: &mut R) -> PhaseVector {
    PhaseVector((0..ch.n_tx()).map(|_| rng.gen_range(0.0..TWO_PI)).collect())
}

fn rb_scoped<R: Rng + ?Sized>(scope: &Scope, phases: &mut PhaseVector, rng: &mut R) {
    for &n in &scope.transmitters {
        phases[n] = rng.gen_range(0.0..TWO_PI);
    }
}

/// Aligns every scoped transmitter at `target`, anchoring the first one at 0.
fn rt_scoped(ch: &ChannelMatrix, scope: &Scope, target: usize, phases: &mut PhaseVector) {
    let anchor = scope.transmitters[0];
    phases[anchor] = 0.0;
    let reference = ch.phase(anchor, target);
    for &n in &scope.transmitters[1..] {
        phases[n] = wrap_phase(reference - ch.phase(n, target));
    }
}

/// Phase coherence at receiver `target`.
pub fn run_rt(ch: &ChannelMatrix, target: usize) -> Result<PhaseVector> {
    if target >= ch.n_rx() {
        return Err(Error::IndexOutOfRange {
            kind: "receiver",
            index: target,
            size: ch.n_rx(),
        });
    }
    let mut phases = PhaseVector::zeros(ch.n_tx());
    rt_scoped(ch, &Scope::full(ch), target, &mut phases);
    Ok(phases)
}

fn bt_scoped(ch: &ChannelMatrix, amps: &AmplitudeVector, scope: &Scope, phases: &mut PhaseVector) {
    let mut best: Option<(f64, PhaseVector)> = None;
    for &target in &scope.receivers {
        let mut candidate = phases.clone();
        rt_scoped(ch, scope, target, &mut candidate);
        let power = scoped_power(ch, &candidate, amps, &scope.transmitters, &scope.receivers);
        if best.as_ref().map_or(true, |(p, _)| power > *p) {
            best = Some((power, candidate));
        }
    }
    if let Some((_, best)) = best {
        *phases = best;
    }
}

/// Tries phase coherence at each receiver and keeps the target with the
/// largest total gain (lowest index on ties).
pub fn run_bt(ch: &ChannelMatrix, amps: &AmplitudeVector) -> PhaseVector {
    let mut phases = PhaseVector::zeros(ch.n_tx());
    bt_scoped(ch, amps, &Scope::full(ch), &mut phases);
    phases
}

/// Scoped transmitters by descending received power summed over the scoped
/// receivers, ties by ascending index.
fn power_order(ch: &ChannelMatrix, amps: &AmplitudeVector, scope: &Scope) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = scope
        .transmitters
        .iter()
        .map(|&n| {
            let p: f64 = scope.receivers.iter().map(|&m| crate::gain::link_power(ch, amps, n, m)).sum();
            (p, n)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, n)| n).collect()
}

fn sf_scoped(ch: &ChannelMatrix, amps: &AmplitudeVector, scope: &Scope, phases: &mut PhaseVector) -> Vec<usize> {
    let order = power_order(ch, amps, scope);
    phases[order[0]] = 0.0;
    for i in 1..order.len() {
        let prefix = Scope::new(order[..=i].to_vec(), scope.receivers.clone());
        phases[order[i]] = optimize_single_phase(ch, phases, amps, order[i], &prefix);
    }
    order
}

/// Sequential fixing: strongest transmitter at phase 0, then each next one
/// optimally against the ones already fixed.
pub fn run_sf(ch: &ChannelMatrix, amps: &AmplitudeVector) -> PhaseVector {
    let mut phases = PhaseVector::zeros(ch.n_tx());
    sf_scoped(ch, amps, &Scope::full(ch), &mut phases);
    phases.normalized()
}

fn io_scoped(
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    scope: &Scope,
    opts: &BeamOptions,
    phases: &mut PhaseVector,
) {
    let order = sf_scoped(ch, amps, scope, phases);
    let mut power = scoped_power(ch, phases, amps, &scope.transmitters, &scope.receivers);
    for _ in 0..opts.io_max_sweeps.max(1) {
        for &n in &order {
            phases[n] = optimize_single_phase(ch, phases, amps, n, scope);
        }
        let swept = scoped_power(ch, phases, amps, &scope.transmitters, &scope.receivers);
        let improved = swept > power * (1.0 + opts.io_tol);
        power = swept;
        if !improved {
            break;
        }
    }
}

/// Sequential fixing, then full coordinate-ascent sweeps until a sweep
/// improves the gain by no more than `opts.io_tol` (relative) or
/// `opts.io_max_sweeps` is reached.
pub fn run_io(ch: &ChannelMatrix, amps: &AmplitudeVector, opts: &BeamOptions) -> Result<PhaseVector> {
    if opts.io_max_sweeps == 0 || !(opts.io_tol > 0.0) {
        return Err(Error::InvalidInput("IO needs max_sweeps >= 1 and tol > 0".into()));
    }
    let mut phases = PhaseVector::zeros(ch.n_tx());
    io_scoped(ch, amps, &Scope::full(ch), opts, &mut phases);
    Ok(phases.normalized())
}

/// Grid points `0, step, 2 step, ...` strictly below `2 pi`.
fn grid_len(step: f64) -> usize {
    (TWO_PI / step).ceil() as usize
}

/// Exhaustive grid search with the first transmitter fixed at phase 0.
/// Ties resolve to the lexicographically smallest grid point regardless of
/// how the search is split across threads.
pub fn run_es(
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    grid_step: f64,
    opts: &BeamOptions,
) -> Result<PhaseVector> {
    let n_tx = ch.n_tx();
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidInput(format!("ES grid step must be positive, got {grid_step}")));
    }
    let points = grid_len(grid_step);
    if n_tx > opts.es_max_transmitters {
        return Err(Error::TooComplex {
            what: "exhaustive phase search",
            required: (points as u128).saturating_pow(n_tx as u32 - 1),
            cap: (points as u128).saturating_pow(opts.es_max_transmitters.max(1) as u32 - 1),
        });
    }
    if n_tx == 1 {
        return Ok(PhaseVector::zeros(1));
    }
    let n_rx = ch.n_rx();
    // phasors of each link with its amplitude, at transmit phase 0
    let base: Vec<Vec<Complex64>> = (0..n_tx)
        .map(|n| (0..n_rx).map(|m| amps[n] * ch.phasor(n, m)).collect())
        .collect();
    let rot: Vec<Complex64> = (0..points)
        .map(|g| Complex64::from_polar(1.0, g as f64 * grid_step))
        .collect();
    let free = n_tx - 1;

    // best point within the slice whose first free coordinate is `g0`
    let search = |g0: usize| -> (f64, Vec<usize>) {
        let mut idx = vec![0usize; free];
        idx[0] = g0;
        let mut best = (f64::NEG_INFINITY, idx.clone());
        loop {
            let mut power = 0.0;
            for m in 0..n_rx {
                let mut field = base[0][m];
                for (j, &g) in idx.iter().enumerate() {
                    field += base[j + 1][m] * rot[g];
                }
                power += field.norm_sqr();
            }
            if power > best.0 {
                best = (power, idx.clone());
            }
            // odometer over coordinates 1.., last one fastest
            let mut d = free;
            loop {
                if d == 1 {
                    return best;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < points {
                    break;
                }
                idx[d] = 0;
            }
        }
    };
    let per_slice: Vec<(f64, Vec<usize>)> = (0..points).into_par_iter().map(search).collect();
    let mut best = &per_slice[0];
    for cand in &per_slice[1..] {
        if cand.0 > best.0 {
            best = cand;
        }
    }
    let mut phases = PhaseVector::zeros(n_tx);
    for (j, &g) in best.1.iter().enumerate() {
        phases[j + 1] = g as f64 * grid_step;
    }
    Ok(phases.normalized())
}

/// Fills the scoped transmitters' entries of `phases` according to `policy`.
/// Entries outside the scope are left untouched.
pub fn apply_policy(
    policy: BeamPolicy,
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    scope: &Scope,
    opts: &BeamOptions,
    rng: &mut ProtocolRng,
    phases: &mut PhaseVector,
) -> Result<()> {
    scope.check(ch)?;
    match policy {
        BeamPolicy::Rb => rb_scoped(scope, phases, &mut rng.phases),
        BeamPolicy::Rt(target) => {
            let m = match target {
                RtTarget::Fixed(m) => {
                    if !scope.receivers.contains(&m) {
                        return Err(Error::InvalidInput(format!("RT target {m} is not in scope")));
                    }
                    m
                }
                RtTarget::Random => scope.receivers[rng.targets.gen_range(0..scope.receivers.len())],
            };
            rt_scoped(ch, scope, m, phases);
        }
        BeamPolicy::Bt => bt_scoped(ch, amps, scope, phases),
        BeamPolicy::Sf => {
            sf_scoped(ch, amps, scope, phases);
        }
        BeamPolicy::Io => io_scoped(ch, amps, scope, opts, phases),
        BeamPolicy::Es { grid_step } => {
            if scope.transmitters.len() != ch.n_tx() || scope.receivers.len() != ch.n_rx() {
                return Err(Error::Unsupported("ES runs on the full scope only".into()));
            }
            *phases = run_es(ch, amps, grid_step, opts)?;
        }
    }
    for &n in &scope.transmitters {
        phases[n] = wrap_phase(phases[n]);
    }
    Ok(())
}

/// Runs a single-stream protocol over all nodes.
pub fn run_policy(
    policy: BeamPolicy,
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    opts: &BeamOptions,
    rng: &mut ProtocolRng,
) -> Result<PhaseVector> {
    let mut phases = PhaseVector::zeros(ch.n_tx());
    apply_policy(policy, ch, amps, &Scope::full(ch), opts, rng, &mut phases)?;
    Ok(phases)
}
