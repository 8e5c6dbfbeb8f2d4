//! Coherent power gain and SIR gain.
//!
//! The received field at receiver `m` is the phasor sum
//! `sum_n A_n h_nm e^{i(theta_n + theta_nm)}`. Its squared modulus is the
//! per-receiver factor `beta_m`, and the power gain of a single stream is
//! `sum_m beta_m / (A_0^2 h_00^2)`: the energy collected by the whole
//! receiver group over the energy of the point-to-point link from
//! transmitter 0 to receiver 0. Indices are 0-based throughout; transmitter 0
//! is the source and receiver 0 the destination.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{wrap_phase, ChannelMatrix};

/// Transmit phases `theta_n`, one per transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Every entry wrapped into `[0, 2 pi)`.
    pub fn normalized(mut self) -> Self {
        self.0.iter_mut().for_each(|t| *t = wrap_phase(*t));
        self
    }

    /// Adds `c` to every phase.
    pub fn rotated(&self, c: f64) -> Self {
        Self(self.0.iter().map(|t| t + c).collect())
    }
}

impl std::ops::Index<usize> for PhaseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for PhaseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Per-transmitter signal amplitudes `A_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector(Vec<f64>);

impl AmplitudeVector {
    pub fn new(amps: Vec<f64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidInput("amplitude vector is empty".into()));
        }
        if let Some(a) = amps.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidInput(format!("amplitudes must be positive, got {a}")));
        }
        Ok(Self(amps))
    }

    /// Equal unit amplitudes.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|a| a * c).collect())
    }
}

impl std::ops::Index<usize> for AmplitudeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Sinusoid amplitude and period. Only the energy oracle needs these; the
/// period cancels in every gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub amplitude: f64,
    pub period: f64,
}

impl SignalParams {
    pub fn new(amplitude: f64, period: f64) -> Result<Self> {
        if !(amplitude > 0.0 && period > 0.0 && amplitude.is_finite() && period.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "signal amplitude and period must be positive, got A = {amplitude}, T = {period}"
            )));
        }
        Ok(Self { amplitude, period })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub gain: f64,
    pub per_receiver_beta: Vec<f64>,
    pub upper_bound: f64,
}

/// One stream's transmitter and receiver groups. The source is always the
/// first transmitter and the destination the first receiver; the remaining
/// members are kept in ascending index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stream {
    pub transmitters: Vec<usize>,
    pub receivers: Vec<usize>,
}

impl Stream {
    /// Builds the canonical member order from a source, a destination and
    /// any extra members.
    pub fn new(
        source: usize,
        destination: usize,
        extra_tx: impl IntoIterator<Item = usize>,
        extra_rx: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut tx: Vec<usize> = extra_tx.into_iter().filter(|&n| n != source).collect();
        tx.sort_unstable();
        tx.dedup();
        tx.insert(0, source);
        let mut rx: Vec<usize> = extra_rx.into_iter().filter(|&m| m != destination).collect();
        rx.sort_unstable();
        rx.dedup();
        rx.insert(0, destination);
        Self {
            transmitters: tx,
            receivers: rx,
        }
    }

    pub fn singleton(source: usize, destination: usize) -> Self {
        Self::new(source, destination, [], [])
    }

    pub fn source(&self) -> usize {
        self.transmitters[0]
    }

    pub fn destination(&self) -> usize {
        self.receivers[0]
    }
}

/// Disjoint per-stream groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamAssignment {
    streams: Vec<Stream>,
}

impl StreamAssignment {
    /// Checks membership and pairwise disjointness against an
    /// `n_tx x n_rx` node pool.
    pub fn new(streams: Vec<Stream>, n_tx: usize, n_rx: usize) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidAssignment(msg));
        if streams.is_empty() {
            return bad("no streams".into());
        }
        let mut tx_owner = vec![None; n_tx];
        let mut rx_owner = vec![None; n_rx];
        for (k, s) in streams.iter().enumerate() {
            if s.transmitters.is_empty() || s.receivers.is_empty() {
                return Err(Error::EmptyStream(k));
            }
            for &n in &s.transmitters {
                match tx_owner.get_mut(n) {
                    None => return bad(format!("stream {k}: transmitter {n} out of range")),
                    Some(Some(j)) => return bad(format!("transmitter {n} in streams {j} and {k}")),
                    Some(slot) => *slot = Some(k),
                }
            }
            for &m in &s.receivers {
                match rx_owner.get_mut(m) {
                    None => return bad(format!("stream {k}: receiver {m} out of range")),
                    Some(Some(j)) => return bad(format!("receiver {m} in streams {j} and {k}")),
                    Some(slot) => *slot = Some(k),
                }
            }
        }
        Ok(Self { streams })
    }

    /// A single stream containing every node, source 0 and destination 0.
    pub fn single(n_tx: usize, n_rx: usize) -> Self {
        Self {
            streams: vec![Stream::new(0, 0, 0..n_tx, 0..n_rx)],
        }
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn stream(&self, k: usize) -> Result<&Stream> {
        self.streams.get(k).ok_or(Error::IndexOutOfRange {
            kind: "stream",
            index: k,
            size: self.streams.len(),
        })
    }
}

/// How per-stream SIR gains are combined into one figure of merit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    Min,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirReport {
    pub stream_gains: Vec<f64>,
    pub rho: Vec<f64>,
    pub objective: f64,
}

/// `(A_n h_nm)^2`. Every incoherent power term goes through here so that
/// identical terms are computed bit-identically.
#[inline]
pub(crate) fn link_power(ch: &ChannelMatrix, amps: &AmplitudeVector, n: usize, m: usize) -> f64 {
    let a = amps[n] * ch.gain(n, m);
    a * a
}

/// Contribution of transmitter `n` at receiver `m`.
#[inline]
pub(crate) fn contribution(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    n: usize,
    m: usize,
) -> Complex64 {
    Complex64::from_polar(amps[n] * ch.gain(n, m), phases[n] + ch.phase(n, m))
}

/// Squared modulus of the summed field, no bounds checks.
pub(crate) fn beta_unchecked(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    m: usize,
    subset: &[usize],
) -> f64 {
    match subset {
        [n] => link_power(ch, amps, *n, m),
        _ => subset
            .iter()
            .map(|&n| contribution(ch, phases, amps, n, m))
            .sum::<Complex64>()
            .norm_sqr(),
    }
}

/// `sum_{m in rx} beta_m(tx)`.
pub(crate) fn scoped_power(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    tx: &[usize],
    rx: &[usize],
) -> f64 {
    rx.iter().map(|&m| beta_unchecked(ch, phases, amps, m, tx)).sum()
}

fn check_dims(ch: &ChannelMatrix, phases: &PhaseVector, amps: &AmplitudeVector) -> Result<()> {
    if phases.len() != ch.n_tx() || amps.len() != ch.n_tx() {
        return Err(Error::InvalidInput(format!(
            "{} transmitters but {} phases and {} amplitudes",
            ch.n_tx(),
            phases.len(),
            amps.len()
        )));
    }
    Ok(())
}

fn check_index(kind: &'static str, index: usize, size: usize) -> Result<()> {
    if index >= size {
        return Err(Error::IndexOutOfRange { kind, index, size });
    }
    Ok(())
}

/// Per-receiver coherent power factor, optionally restricted to a subset of
/// transmitters (all of them by default).
pub fn beta(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    m: usize,
    subset: Option<&[usize]>,
) -> Result<f64> {
    check_dims(ch, phases, amps)?;
    check_index("receiver", m, ch.n_rx())?;
    match subset {
        Some(s) => {
            for &n in s {
                check_index("transmitter", n, ch.n_tx())?;
            }
            Ok(beta_unchecked(ch, phases, amps, m, s))
        }
        None => {
            let all: Vec<usize> = (0..ch.n_tx()).collect();
            Ok(beta_unchecked(ch, phases, amps, m, &all))
        }
    }
}

/// Power gain of a single stream over the transmitter 0 -> receiver 0 link.
pub fn coherent_gain(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
) -> Result<GainReport> {
    check_dims(ch, phases, amps)?;
    let benchmark = link_power(ch, amps, 0, 0);
    if benchmark == 0.0 {
        return Err(Error::DegenerateBenchmark);
    }
    let all: Vec<usize> = (0..ch.n_tx()).collect();
    let per_receiver_beta: Vec<f64> = (0..ch.n_rx())
        .map(|m| beta_unchecked(ch, phases, amps, m, &all))
        .collect();
    let gain = per_receiver_beta.iter().sum::<f64>() / benchmark;
    Ok(GainReport {
        gain,
        per_receiver_beta,
        upper_bound: upper_bound(ch.n_tx(), ch.n_rx()),
    })
}

/// `N^2 M`: the gain of full coherence when every link is as strong as the
/// benchmark link.
pub fn upper_bound(n_tx: usize, n_rx: usize) -> f64 {
    (n_tx * n_tx * n_rx) as f64
}

/// Triangle-inequality bound `sum_m (sum_n A_n h_nm)^2 / (A_0 h_00)^2`, which
/// holds for every phase vector.
pub fn amplitude_bound(ch: &ChannelMatrix, amps: &AmplitudeVector) -> f64 {
    let total: f64 = (0..ch.n_rx())
        .map(|m| {
            let s: f64 = (0..ch.n_tx()).map(|n| amps[n] * ch.gain(n, m)).sum();
            s * s
        })
        .sum();
    total / link_power(ch, amps, 0, 0)
}

/// Energy received at `m` over one period, by composite Simpson integration
/// of the summed sinusoids. Equals `(A^2 T / 2) beta_m` analytically.
pub fn period_energy_numeric(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    signal: SignalParams,
    m: usize,
    steps: usize,
) -> Result<f64> {
    if phases.len() != ch.n_tx() {
        return Err(Error::InvalidInput("phase vector length mismatch".into()));
    }
    check_index("receiver", m, ch.n_rx())?;
    if steps < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 steps, got {steps}")));
    }
    let steps = steps + steps % 2;
    let SignalParams { amplitude, period } = signal;
    let omega = 2.0 * PI / period;
    let field = |t: f64| -> f64 {
        (0..ch.n_tx())
            .map(|n| amplitude * ch.gain(n, m) * (omega * t + phases[n] + ch.phase(n, m)).sin())
            .sum()
    };
    let power = |t: f64| field(t).powi(2);
    let h = period / steps as f64;
    let mut acc = power(0.0) + power(period);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * power(i as f64 * h);
    }
    Ok(acc * h / 3.0)
}

/// Coherent numerator of stream `k`: `sum_{m in R_k} beta_m(T_k)`.
pub fn rho(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    assignment: &StreamAssignment,
    k: usize,
) -> Result<f64> {
    check_dims(ch, phases, amps)?;
    let s = assignment.stream(k)?;
    if s.transmitters.is_empty() || s.receivers.is_empty() {
        return Err(Error::EmptyStream(k));
    }
    Ok(scoped_power(ch, phases, amps, &s.transmitters, &s.receivers))
}

/// Interference energy at stream `k`'s receivers from all other streams'
/// transmitters. Independent of the phases.
pub(crate) fn interference(
    ch: &ChannelMatrix,
    amps: &AmplitudeVector,
    assignment: &StreamAssignment,
    k: usize,
) -> f64 {
    let own = &assignment.streams[k];
    let mut total = 0.0;
    for &m in &own.receivers {
        for (l, other) in assignment.streams.iter().enumerate() {
            if l == k {
                continue;
            }
            for &n in &other.transmitters {
                total += link_power(ch, amps, n, m);
            }
        }
    }
    total
}

/// SIR gain of stream `k`: its SIR with group beamforming over its SIR when
/// every stream is a bare source -> destination link.
pub fn sir_gain(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    assignment: &StreamAssignment,
    k: usize,
) -> Result<f64> {
    let k_total = assignment.n_streams();
    if k_total < 2 {
        return Err(Error::SingleStream(k_total));
    }
    let coherent = rho(ch, phases, amps, assignment, k)?;
    let d_k = assignment.streams[k].destination();
    let s_k = assignment.streams[k].source();
    let baseline_interference: f64 = assignment
        .streams
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != k)
        .map(|(_, s)| link_power(ch, amps, s.source(), d_k))
        .sum();
    let group_interference = interference(ch, amps, assignment, k);
    let den = link_power(ch, amps, s_k, d_k) * group_interference;
    if den == 0.0 {
        return Err(Error::ZeroInterference(k));
    }
    Ok(baseline_interference * coherent / den)
}

/// Combine per-stream gains.
pub fn objective(gains: &[f64], kind: Objective) -> Result<f64> {
    if gains.is_empty() {
        return Err(Error::InvalidInput("objective of an empty gain list".into()));
    }
    Ok(match kind {
        Objective::Min => gains.iter().copied().fold(f64::INFINITY, f64::min),
        Objective::Mean => gains.iter().sum::<f64>() / gains.len() as f64,
    })
}

/// Every stream's SIR gain, its coherent numerator, and the objective.
pub fn sir_report(
    ch: &ChannelMatrix,
    phases: &PhaseVector,
    amps: &AmplitudeVector,
    assignment: &StreamAssignment,
    kind: Objective,
) -> Result<SirReport> {
    let k_total = assignment.n_streams();
    let mut stream_gains = Vec::with_capacity(k_total);
    let mut rhos = Vec::with_capacity(k_total);
    for k in 0..k_total {
        stream_gains.push(sir_gain(ch, phases, amps, assignment, k)?);
        rhos.push(rho(ch, phases, amps, assignment, k)?);
    }
    let objective = objective(&stream_gains, kind)?;
    Ok(SirReport {
        stream_gains,
        rho: rhos,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = 2.0 * PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn random_channel(n: usize, m: usize, rng: &mut impl Rng) -> ChannelMatrix {
        let gains = (0..n * m).map(|_| rng.gen_range(0.1..2.0)).collect();
        let phases = (0..n * m).map(|_| rng.gen_range(0.0..TWO_PI)).collect();
        ChannelMatrix::new(n, m, gains, phases).unwrap()
    }

    fn random_phases(n: usize, rng: &mut impl Rng) -> PhaseVector {
        PhaseVector((0..n).map(|_| rng.gen_range(0.0..TWO_PI)).collect())
    }

    fn random_amps(n: usize, rng: &mut impl Rng) -> AmplitudeVector {
        AmplitudeVector::new((0..n).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap()
    }

    /// cos/sin reference form, kept separate from the phasor path.
    fn beta_trig(ch: &ChannelMatrix, th: &PhaseVector, a: &AmplitudeVector, m: usize, s: &[usize]) -> f64 {
        let c: f64 = s.iter().map(|&n| a[n] * ch.gain(n, m) * (th[n] + ch.phase(n, m)).cos()).sum();
        let si: f64 = s.iter().map(|&n| a[n] * ch.gain(n, m) * (th[n] + ch.phase(n, m)).sin()).sum();
        c * c + si * si
    }

    #[test]
    fn beta_single_transmitter_is_link_power() {
        let ch = ChannelMatrix::new(1, 2, vec![0.3, 0.7], vec![1.0, 2.0]).unwrap();
        let a = AmplitudeVector::uniform(1);
        for theta in [0.0, 1.0, 4.0] {
            let p = PhaseVector(vec![theta]);
            assert_eq!(beta(&ch, &p, &a, 1, None).unwrap(), 0.7 * 0.7);
        }
    }

    #[test]
    fn beta_constructive_and_destructive() {
        let ch = ChannelMatrix::uniform_gain(2, 1, 1.0, vec![0.3, 1.1]).unwrap();
        let a = AmplitudeVector::uniform(2);
        let aligned = PhaseVector(vec![0.8, 0.0]);
        assert!((beta(&ch, &aligned, &a, 0, None).unwrap() - 4.0).abs() < 1e-12);
        let opposed = PhaseVector(vec![0.8 + PI, 0.0]);
        assert!(beta(&ch, &opposed, &a, 0, None).unwrap().abs() < 1e-12);
    }

    #[test]
    fn beta_rejects_bad_indices() {
        let ch = ChannelMatrix::uniform_gain(2, 1, 1.0, vec![0.0, 0.0]).unwrap();
        let a = AmplitudeVector::uniform(2);
        let p = PhaseVector::zeros(2);
        assert!(matches!(beta(&ch, &p, &a, 1, None), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(beta(&ch, &p, &a, 0, Some(&[2])), Err(Error::IndexOutOfRange { .. })));
        assert!(beta(&ch, &PhaseVector::zeros(3), &a, 0, None).is_err());
    }

    #[test]
    fn phasor_and_trig_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let ch = random_channel(4, 3, &mut rng);
            let th = random_phases(4, &mut rng);
            let a = random_amps(4, &mut rng);
            for m in 0..3 {
                let b = beta(&ch, &th, &a, m, None).unwrap();
                assert!(rel(b, beta_trig(&ch, &th, &a, m, &[0, 1, 2, 3])) < 1e-12);
            }
        }
    }

    #[test]
    fn point_to_point_gain_is_one() {
        let ch = ChannelMatrix::new(1, 1, vec![0.01], vec![2.0]).unwrap();
        for theta in [0.0, 3.0] {
            let r = coherent_gain(&ch, &PhaseVector(vec![theta]), &AmplitudeVector::uniform(1)).unwrap();
            assert_eq!(r.gain, 1.0);
            assert_eq!(r.upper_bound, 1.0);
        }
    }

    #[test]
    fn equal_gains_with_full_coherence_reach_the_bound() {
        // theta_nm = c_m for all n: zero phases are coherent at every receiver
        let (n, m) = (4, 3);
        let phases: Vec<f64> = (0..n).flat_map(|_| [0.2, 1.7, 4.0]).collect();
        let ch = ChannelMatrix::uniform_gain(n, m, 0.25, phases).unwrap();
        let r = coherent_gain(&ch, &PhaseVector::zeros(n), &AmplitudeVector::uniform(n)).unwrap();
        assert!(rel(r.gain, 48.0) < 1e-12);
        assert_eq!(r.upper_bound, 48.0);
    }

    #[test]
    fn upper_bound_values() {
        assert_eq!(upper_bound(1, 1), 1.0);
        assert_eq!(upper_bound(3, 10), 90.0);
        assert_eq!(upper_bound(10, 10), 1000.0);
    }

    #[test]
    fn report_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = random_channel(3, 5, &mut rng);
        let th = random_phases(3, &mut rng);
        let a = random_amps(3, &mut rng);
        let r = coherent_gain(&ch, &th, &a).unwrap();
        let expect = r.per_receiver_beta.iter().sum::<f64>() / (a[0] * ch.gain(0, 0)).powi(2);
        assert_eq!(r.gain, expect);
        assert!(r.per_receiver_beta.iter().all(|b| *b >= 0.0));
    }

    #[test]
    fn energy_oracle_reference_values() {
        let sig = SignalParams::new(1.0, 1.0).unwrap();
        let one = ChannelMatrix::new(1, 1, vec![1.0], vec![0.4]).unwrap();
        let e = period_energy_numeric(&one, &PhaseVector(vec![1.3]), sig, 0, 2000).unwrap();
        assert!((e - 0.5).abs() < 1e-6);

        let two = ChannelMatrix::uniform_gain(2, 1, 1.0, vec![0.5, 0.2]).unwrap();
        let e = period_energy_numeric(&two, &PhaseVector(vec![0.0, 0.3]), sig, 0, 2000).unwrap();
        assert!((e - 2.0).abs() < 1e-6);

        assert!(period_energy_numeric(&two, &PhaseVector::zeros(2), sig, 0, 999).is_err());
    }

    #[test]
    fn energy_oracle_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let ch = random_channel(3, 1, &mut rng);
            let th = random_phases(3, &mut rng);
            let sig = SignalParams::new(rng.gen_range(0.5..3.0), rng.gen_range(1e-3..2.0)).unwrap();
            let e = period_energy_numeric(&ch, &th, sig, 0, 4000).unwrap();
            let b = beta(&ch, &th, &AmplitudeVector::uniform(3), 0, None).unwrap();
            let closed = sig.amplitude.powi(2) * sig.period / 2.0 * b;
            assert!(rel(e, closed) < 1e-6, "{e} vs {closed}");
        }
    }

    #[test]
    fn rho_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ch = random_channel(4, 4, &mut rng);
        let th = random_phases(4, &mut rng);
        let a = AmplitudeVector::uniform(4);

        let singles = StreamAssignment::new(
            vec![Stream::singleton(0, 0), Stream::singleton(1, 1)],
            4,
            4,
        )
        .unwrap();
        assert_eq!(rho(&ch, &th, &a, &singles, 1).unwrap(), ch.power_gain(1, 1));

        let all = StreamAssignment::single(4, 4);
        let total: f64 = (0..4).map(|m| beta(&ch, &th, &a, m, None).unwrap()).sum();
        assert!(rel(rho(&ch, &th, &a, &all, 0).unwrap(), total) < 1e-14);
        assert!(rho(&ch, &th, &a, &all, 1).is_err());
    }

    #[test]
    fn rho_matches_termwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let ch = random_channel(5, 5, &mut rng);
        let th = random_phases(5, &mut rng);
        let a = random_amps(5, &mut rng);
        let asg = StreamAssignment::new(
            vec![Stream::new(0, 0, [2, 4], [3]), Stream::new(1, 1, [3], [2, 4])],
            5,
            5,
        )
        .unwrap();
        for (k, s) in asg.streams().iter().enumerate() {
            let direct: f64 = s.receivers.iter().map(|&m| beta_trig(&ch, &th, &a, m, &s.transmitters)).sum();
            assert!(rel(rho(&ch, &th, &a, &asg, k).unwrap(), direct) < 1e-12);
        }
    }

    #[test]
    fn singleton_streams_have_unit_sir_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let ch = random_channel(3, 3, &mut rng);
            let th = random_phases(3, &mut rng);
            let a = random_amps(3, &mut rng);
            let asg = StreamAssignment::new((0..3).map(|k| Stream::singleton(k, k)).collect(), 3, 3).unwrap();
            let rep = sir_report(&ch, &th, &a, &asg, Objective::Min).unwrap();
            assert!(rep.stream_gains.iter().all(|g| *g == 1.0), "{:?}", rep.stream_gains);
            assert_eq!(rep.objective, 1.0);
        }
    }

    #[test]
    fn single_stream_sir_is_rejected() {
        let ch = ChannelMatrix::uniform_gain(2, 2, 1.0, vec![0.0; 4]).unwrap();
        let asg = StreamAssignment::single(2, 2);
        assert_eq!(
            sir_gain(&ch, &PhaseVector::zeros(2), &AmplitudeVector::uniform(2), &asg, 0),
            Err(Error::SingleStream(1))
        );
    }

    /// Signal energy, interference energy, both SIRs and their ratio, each
    /// computed from scratch.
    fn sir_gain_from_energies(
        ch: &ChannelMatrix,
        th: &PhaseVector,
        a: &AmplitudeVector,
        streams: &[Stream],
        k: usize,
    ) -> f64 {
        let (amp, period) = (1.0, 1.0);
        let energy = |b: f64| amp * amp * period / 2.0 * b;
        let own = &streams[k];
        let signal: f64 = own.receivers.iter().map(|&m| energy(beta_trig(ch, th, a, m, &own.transmitters))).sum();
        let mut interf = 0.0;
        for &m in &own.receivers {
            for (l, s) in streams.iter().enumerate() {
                if l != k {
                    for &n in &s.transmitters {
                        interf += energy((a[n] * ch.gain(n, m)).powi(2));
                    }
                }
            }
        }
        let sir_group = signal / interf;
        let d = own.receivers[0];
        let p2p_signal = energy((a[own.transmitters[0]] * ch.gain(own.transmitters[0], d)).powi(2));
        let p2p_interf: f64 = streams
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, s)| energy((a[s.transmitters[0]] * ch.gain(s.transmitters[0], d)).powi(2)))
            .sum();
        sir_group / (p2p_signal / p2p_interf)
    }

    #[test]
    fn sir_gain_matches_energy_derivation() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let ch = random_channel(4, 4, &mut rng);
            let th = random_phases(4, &mut rng);
            let a = random_amps(4, &mut rng);
            let streams = vec![Stream::new(0, 0, [2], [3]), Stream::new(1, 1, [3], [2])];
            let asg = StreamAssignment::new(streams.clone(), 4, 4).unwrap();
            for k in 0..2 {
                let g = sir_gain(&ch, &th, &a, &asg, k).unwrap();
                assert!(rel(g, sir_gain_from_energies(&ch, &th, &a, &streams, k)) < 1e-12);
            }
        }
    }

    #[test]
    fn common_amplitude_scale_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ch = random_channel(4, 4, &mut rng);
        let th = random_phases(4, &mut rng);
        let a = random_amps(4, &mut rng);
        let asg = StreamAssignment::new(vec![Stream::new(0, 0, [2], [2]), Stream::new(1, 1, [3], [3])], 4, 4).unwrap();
        for k in 0..2 {
            let g = sir_gain(&ch, &th, &a, &asg, k).unwrap();
            let scaled = sir_gain(&ch, &th, &a.scaled(3.7).unwrap(), &asg, k).unwrap();
            assert!(rel(g, scaled) < 1e-12);
        }
    }

    #[test]
    fn objective_variants() {
        assert_eq!(objective(&[2.5, 8.0], Objective::Min).unwrap(), 2.5);
        assert_eq!(objective(&[7.0], Objective::Min).unwrap(), 7.0);
        assert_eq!(objective(&[2.0, 8.0], Objective::Mean).unwrap(), 5.0);
        assert!(objective(&[], Objective::Min).is_err());
    }

    #[test]
    fn assignment_validation() {
        assert!(StreamAssignment::new(vec![Stream::singleton(0, 0), Stream::singleton(0, 1)], 2, 2).is_err());
        assert!(StreamAssignment::new(vec![Stream::singleton(0, 0), Stream::singleton(1, 0)], 2, 2).is_err());
        assert!(StreamAssignment::new(vec![Stream::singleton(0, 5)], 2, 2).is_err());
        let s = Stream::new(3, 1, [5, 3, 0], [1, 4, 2]);
        assert_eq!(s.transmitters, vec![3, 0, 5]);
        assert_eq!(s.receivers, vec![1, 2, 4]);
    }

    proptest! {
        #[test]
        fn global_phase_rotation_is_invisible(seed in any::<u64>(), c in -20.0f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = random_channel(4, 5, &mut rng);
            let th = random_phases(4, &mut rng);
            let a = random_amps(4, &mut rng);
            let g0 = coherent_gain(&ch, &th, &a).unwrap().gain;
            let g1 = coherent_gain(&ch, &th.rotated(c), &a).unwrap().gain;
            prop_assert!(rel(g0, g1) < 1e-12);
        }

        #[test]
        fn gain_never_exceeds_amplitude_bound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = random_channel(5, 4, &mut rng);
            let th = random_phases(5, &mut rng);
            let a = random_amps(5, &mut rng);
            let g = coherent_gain(&ch, &th, &a).unwrap().gain;
            prop_assert!(g <= amplitude_bound(&ch, &a) * (1.0 + 1e-12));
        }

        #[test]
        fn stream_gain_ignores_other_streams_phases(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = random_channel(5, 5, &mut rng);
            let a = random_amps(5, &mut rng);
            let asg = StreamAssignment::new(vec![Stream::new(0, 0, [2, 4], [3]), Stream::new(1, 1, [3], [2, 4])], 5, 5).unwrap();
            let th = random_phases(5, &mut rng);
            let mut moved = th.clone();
            for n in [1, 3] {
                moved[n] = rng.gen_range(0.0..2.0 * PI);
            }
            prop_assert_eq!(sir_gain(&ch, &th, &a, &asg, 0).unwrap(), sir_gain(&ch, &moved, &a, &asg, 0).unwrap());
            prop_assert_ne!(interference(&ch, &a, &asg, 0), 0.0);
        }
    }
}
