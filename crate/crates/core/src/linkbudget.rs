//! Overhead and link-budget models.
//!
//! Three pieces: the chain that turns training and feedback overhead into a
//! minimum coherence time and a tolerable Doppler spread, the linear
//! time-multiplexed training cost, and a throughput comparison between a
//! coherent group link and a single point-to-point link.
//!
//! Powers are in dBm, ratios (noise figure, SNRs, processing gains) in dB.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudgetParams {
    pub transmit_power_dbm: f64,
    pub noise_figure_db: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub center_frequency_hz: f64,
    pub light_speed: f64,
    /// SNR needed for a usable channel estimate.
    pub train_snr_db: f64,
    /// SNR needed for feedback to reach the transmitter group.
    pub feedback_snr_db: f64,
    pub bits_per_estimate: f64,
    pub header_bits: f64,
    /// Share of the coherence time spent on overhead, in `(0, 1]`.
    pub overhead_fraction: f64,
    pub group_size: usize,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            transmit_power_dbm: 10.0,
            noise_figure_db: 3.0,
            noise_density_dbm_hz: -174.0,
            bandwidth_hz: 1e6,
            center_frequency_hz: 2.4e9,
            light_speed: 3e8,
            train_snr_db: 20.0,
            feedback_snr_db: 10.0,
            bits_per_estimate: 16.0,
            header_bits: 10.0,
            overhead_fraction: 0.1,
            group_size: 10,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.bandwidth_hz > 0.0) || !(self.center_frequency_hz > 0.0) || !(self.light_speed > 0.0) {
            return bad("bandwidth, center frequency and light speed must be positive".into());
        }
        if !(self.overhead_fraction > 0.0 && self.overhead_fraction <= 1.0) {
            return bad(format!("overhead fraction must be in (0, 1], got {}", self.overhead_fraction));
        }
        if self.group_size == 0 {
            return bad("group size must be positive".into());
        }
        if self.bits_per_estimate < 0.0 || self.header_bits < 0.0 {
            return bad("bit counts must be nonnegative".into());
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.light_speed / self.center_frequency_hz
    }

    /// Free-space received power at distance `d`, dBm.
    pub fn received_power_dbm(&self, d: f64) -> f64 {
        self.transmit_power_dbm + 20.0 * (self.wavelength() / (4.0 * PI * d)).log10()
    }

    /// Point-to-point SNR at distance `d`, dB.
    pub fn snr_db(&self, d: f64) -> f64 {
        self.received_power_dbm(d)
            - 10.0 * self.bandwidth_hz.log10()
            - self.noise_figure_db
            - self.noise_density_dbm_hz
    }
}

/// Whether bit counts stay continuous or are rounded up to whole bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitRounding {
    #[default]
    Continuous,
    Ceil,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerReport {
    pub wavelength: f64,
    pub received_power_dbm: f64,
    pub snr_db: f64,
    pub train_gain_db: f64,
    pub feedback_gain_db: f64,
    pub training_bits: f64,
    pub feedback_bits: f64,
    pub overhead_bits: f64,
    pub overhead_time: f64,
    pub coherence_time: f64,
    pub doppler_spread: f64,
}

fn check_distance(d: f64) -> Result<()> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidInput(format!("distance must be positive, got {d}")));
    }
    Ok(())
}

/// Doppler spread the overhead budget tolerates at group distance `d`.
pub fn doppler_tolerance(params: &LinkBudgetParams, d: f64) -> Result<DopplerReport> {
    doppler_tolerance_with(params, d, BitRounding::Continuous)
}

pub fn doppler_tolerance_with(params: &LinkBudgetParams, d: f64, rounding: BitRounding) -> Result<DopplerReport> {
    params.validate()?;
    check_distance(d)?;
    let round = |x: f64| match rounding {
        BitRounding::Continuous => x,
        BitRounding::Ceil => x.ceil(),
    };
    let n = params.group_size as f64;
    let wavelength = params.wavelength();
    let received_power_dbm = params.received_power_dbm(d);
    let snr_db = params.snr_db(d);
    let train_gain_db = params.train_snr_db - snr_db;
    let feedback_gain_db = params.feedback_snr_db - snr_db;
    let training_bits = round(10f64.powf(train_gain_db / 10.0).max(n));
    let feedback_bits = round(
        10f64.powf(feedback_gain_db / 10.0).max(1.0) * n * params.bits_per_estimate + params.header_bits * n,
    );
    let overhead_bits = training_bits + feedback_bits;
    // pilot, feedback and data each cross the inter-group distance once
    let overhead_time = overhead_bits / params.bandwidth_hz + 3.0 * d / params.light_speed;
    let coherence_time = overhead_time / params.overhead_fraction;
    Ok(DopplerReport {
        wavelength,
        received_power_dbm,
        snr_db,
        train_gain_db,
        feedback_gain_db,
        training_bits,
        feedback_bits,
        overhead_bits,
        overhead_time,
        coherence_time,
        doppler_spread: 1.0 / coherence_time,
    })
}

/// Time-multiplexed training slots and their guard periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadParams {
    pub training_time: f64,
    pub guard_time: f64,
}

impl OverheadParams {
    pub fn new(training_time: f64, guard_time: f64) -> Result<Self> {
        if !(training_time >= 0.0 && guard_time >= 0.0) {
            return Err(Error::InvalidInput("training and guard times must be nonnegative".into()));
        }
        Ok(Self {
            training_time,
            guard_time,
        })
    }

    /// Guard long enough to cover a propagation delay over `distance`.
    pub fn propagation_delay(distance: f64, light_speed: f64) -> f64 {
        distance / light_speed
    }
}

/// `N (T_t + T_g)`.
pub fn training_overhead(n: usize, overhead: &OverheadParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("group size must be positive".into()));
    }
    Ok(n as f64 * (overhead.training_time + overhead.guard_time))
}

/// Assumptions of the throughput comparison. These are modelling choices,
/// not measured data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub coherence_time: f64,
    pub training: OverheadParams,
    /// Radius of each group. When set, the source first hands the data to its
    /// group and the destination then collects it from its group, each over a
    /// free-space hop of this length that shares time with the coherent link.
    pub exchange_radius: Option<f64>,
}

impl RateModel {
    pub fn new(coherence_time: f64) -> Self {
        Self {
            coherence_time,
            training: OverheadParams {
                training_time: 100e-6,
                guard_time: 20e-6,
            },
            exchange_radius: Some(100.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub distance: f64,
    pub coherent_rate: f64,
    pub p2p_rate: f64,
    /// Overhead time over coherence time.
    pub overhead_share: f64,
    /// The overhead alone fills the coherence time; no coherent data flows.
    pub overhead_saturated: bool,
}

fn shannon(bandwidth: f64, snr_linear: f64) -> f64 {
    bandwidth * (1.0 + snr_linear).log2()
}

/// Coherent group throughput against point-to-point throughput at distance
/// `d`, with `n` nodes in each group. The coherent link gets an `n^3` SNR
/// multiplier and loses the overhead share of every coherence interval.
pub fn rate_comparison(params: &LinkBudgetParams, d: f64, n: usize, model: &RateModel) -> Result<RatePoint> {
    check_distance(d)?;
    if n == 0 {
        return Err(Error::InvalidInput("group size must be positive".into()));
    }
    if !(model.coherence_time > 0.0) {
        return Err(Error::InvalidInput("coherence time must be positive".into()));
    }
    let params = LinkBudgetParams {
        group_size: n,
        ..*params
    };
    let w = params.bandwidth_hz;
    let snr = 10f64.powf(params.snr_db(d) / 10.0);
    let p2p_rate = shannon(w, snr);

    let overhead = if n == 1 {
        0.0
    } else {
        doppler_tolerance(&params, d)?.overhead_time + training_overhead(n, &model.training)?
    };
    let overhead_share = overhead / model.coherence_time;
    let gain = (n as f64).powi(3);
    let mut coherent = shannon(w, gain * snr);
    if let (Some(r), true) = (model.exchange_radius, n > 1) {
        check_distance(r)?;
        let intra = shannon(w, 10f64.powf(params.snr_db(r) / 10.0));
        // one hop into the transmitter group and one out of the receiver group
        coherent = 1.0 / (1.0 / coherent + 2.0 / intra);
    }
    let overhead_saturated = overhead_share >= 1.0;
    let coherent_rate = if overhead_saturated {
        0.0
    } else {
        (1.0 - overhead_share) * coherent
    };
    Ok(RatePoint {
        distance: d,
        coherent_rate,
        p2p_rate,
        overhead_share,
        overhead_saturated,
    })
}

/// `steps` points from `d_min` to `d_max` inclusive, evenly spaced.
pub fn distance_grid(d_min: f64, d_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(d_min > 0.0 && d_max >= d_min) || steps < 2 {
        return Err(Error::InvalidInput(format!(
            "need 0 < d_min <= d_max and at least 2 steps, got [{d_min}, {d_max}] x {steps}"
        )));
    }
    Ok((0..steps)
        .map(|i| d_min + (d_max - d_min) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Distances where `coherent - p2p` changes sign, by linear interpolation
/// between neighbouring samples. The flag is true where coherent overtakes.
pub fn crossovers(points: &[RatePoint]) -> Vec<(f64, bool)> {
    let diff = |p: &RatePoint| p.coherent_rate - p.p2p_rate;
    points
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (diff(&w[0]), diff(&w[1]));
            if (a < 0.0) == (b < 0.0) {
                return None;
            }
            let t = a / (a - b);
            Some((w[0].distance + t * (w[1].distance - w[0].distance), b >= 0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn doppler_chain_reference_point() {
        let r = doppler_tolerance(&LinkBudgetParams::default(), 1000.0).unwrap();
        assert!(rel(r.wavelength, 0.125) < 1e-15);
        assert_eq!(r.training_bits, 10.0);
        assert_eq!(r.feedback_bits, 260.0);
        assert_eq!(r.overhead_bits, 270.0);
        assert!(rel(r.overhead_time, 2.8e-4) < 1e-9);
        assert!(rel(r.doppler_spread, 1.0 / 2.8e-3) < 1e-9);
    }

    #[test]
    fn doppler_identities() {
        for d in [1000.0, 3500.0, 10_000.0, 40_000.0] {
            let p = LinkBudgetParams::default();
            let r = doppler_tolerance(&p, d).unwrap();
            assert!((r.doppler_spread * r.coherence_time - 1.0).abs() < 1e-12);
            assert!(rel(r.coherence_time * p.overhead_fraction, r.overhead_time) < 1e-12);
            assert_eq!(r.overhead_bits, r.training_bits + r.feedback_bits);
        }
    }

    #[test]
    fn full_overhead_fraction_scales_spread() {
        let tenth = doppler_tolerance(&LinkBudgetParams::default(), 2500.0).unwrap();
        let full = LinkBudgetParams {
            overhead_fraction: 1.0,
            ..Default::default()
        };
        let full = doppler_tolerance(&full, 2500.0).unwrap();
        assert!(rel(full.doppler_spread, 10.0 * tenth.doppler_spread) < 1e-12);
    }

    #[test]
    fn doppler_monotonicity() {
        let p = LinkBudgetParams::default();
        let grid = distance_grid(1000.0, 10_000.0, 200).unwrap();
        let s: Vec<f64> = grid.iter().map(|&d| doppler_tolerance(&p, d).unwrap().doppler_spread).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));

        let bigger = LinkBudgetParams { group_size: 20, ..p };
        let half = LinkBudgetParams { overhead_fraction: 0.5, ..p };
        for d in [1000.0, 5000.0, 10_000.0] {
            let base = doppler_tolerance(&p, d).unwrap().doppler_spread;
            assert!(doppler_tolerance(&bigger, d).unwrap().doppler_spread < base);
            assert!(doppler_tolerance(&half, d).unwrap().doppler_spread > base);
        }
    }

    #[test]
    fn ceil_rounding_variant() {
        let p = LinkBudgetParams::default();
        let c = doppler_tolerance_with(&p, 5000.0, BitRounding::Ceil).unwrap();
        assert_eq!(c.training_bits, c.training_bits.ceil());
        assert_eq!(c.feedback_bits, c.feedback_bits.ceil());
        let x = doppler_tolerance(&p, 5000.0).unwrap();
        assert!(c.overhead_bits >= x.overhead_bits);
    }

    #[test]
    fn doppler_rejects_bad_inputs() {
        let p = LinkBudgetParams::default();
        assert!(doppler_tolerance(&p, 0.0).is_err());
        assert!(doppler_tolerance(&LinkBudgetParams { overhead_fraction: 0.0, ..p }, 1000.0).is_err());
        assert!(doppler_tolerance(&LinkBudgetParams { bandwidth_hz: 0.0, ..p }, 1000.0).is_err());
    }

    #[test]
    fn training_overhead_is_linear() {
        let one = OverheadParams::new(1e-3, 0.0).unwrap();
        assert_eq!(training_overhead(1, &one).unwrap(), 1e-3);
        let o = OverheadParams::new(100e-6, 20e-6).unwrap();
        assert!(rel(training_overhead(10, &o).unwrap(), 1.2e-3) < 1e-12);
        assert_eq!(training_overhead(8, &o).unwrap(), 2.0 * training_overhead(4, &o).unwrap());
        assert!(training_overhead(0, &o).is_err());
        assert!(OverheadParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn single_node_rates_coincide() {
        let p = LinkBudgetParams::default();
        let model = RateModel::new(0.1);
        for d in [1000.0, 20_000.0] {
            let r = rate_comparison(&p, d, 1, &model).unwrap();
            assert_eq!(r.coherent_rate, r.p2p_rate);
            assert_eq!(r.overhead_share, 0.0);
        }
    }

    #[test]
    fn saturated_overhead_gives_zero_rate() {
        let p = LinkBudgetParams::default();
        let model = RateModel::new(1e-4);
        let r = rate_comparison(&p, 1000.0, 10, &model).unwrap();
        assert!(r.overhead_saturated);
        assert_eq!(r.coherent_rate, 0.0);
    }

    #[test]
    fn coherent_overtakes_point_to_point_with_distance() {
        let p = LinkBudgetParams::default();
        let model = RateModel::new(0.1);
        let grid = distance_grid(1000.0, 100_000.0, 991).unwrap();
        let pts: Vec<RatePoint> = grid.iter().map(|&d| rate_comparison(&p, d, 10, &model).unwrap()).collect();
        assert!(pts[0].coherent_rate < pts[0].p2p_rate);
        let x = crossovers(&pts);
        let (d_star, up) = x[0];
        assert!(up, "first crossing must be coherent overtaking: {x:?}");
        assert!((1000.0..100_000.0).contains(&d_star));
    }

    #[test]
    fn crossover_interpolation() {
        let pt = |d: f64, c: f64| RatePoint {
            distance: d,
            coherent_rate: c,
            p2p_rate: 0.0,
            overhead_share: 0.0,
            overhead_saturated: false,
        };
        let x = crossovers(&[pt(0.0, -1.0), pt(10.0, 3.0), pt(20.0, 1.0)]);
        assert_eq!(x, vec![(2.5, true)]);
    }
}
