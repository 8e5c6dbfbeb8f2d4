//! Node geometry and channel construction.
//!
//! Transmitter 0 sits at the origin and receiver 0 at `(D, 0)`. The other
//! nodes of each group are drawn uniformly over the disk of radius `r`
//! around their group's anchor. Channels are built per transmitter/receiver
//! pair from one of three propagation models, with the phase shift given by
//! the fractional number of wavelengths along the path.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    /// `h^2 = d^-2`.
    InverseSquare,
    /// Friis free-space loss.
    FreeSpace,
    /// Free space up to the crossover distance, fourth-power decay beyond.
    TwoRay,
}

impl ChannelModel {
    pub fn label(&self) -> &'static str {
        match self {
            ChannelModel::InverseSquare => "inverse-square",
            ChannelModel::FreeSpace => "free-space",
            ChannelModel::TwoRay => "two-ray",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_transmitters: usize,
    pub n_receivers: usize,
    #[serde(default = "defaults::streams")]
    pub n_streams: usize,
    /// Distance between transmitter 0 and receiver 0, meters.
    pub distance: f64,
    pub group_radius: f64,
    #[serde(default = "defaults::wavelength")]
    pub wavelength: f64,
    pub channel_model: ChannelModel,
    #[serde(default = "defaults::unit")]
    pub tx_antenna_gain: f64,
    #[serde(default = "defaults::unit")]
    pub rx_antenna_gain: f64,
    #[serde(default = "defaults::antenna_height")]
    pub tx_antenna_height: f64,
    #[serde(default = "defaults::antenna_height")]
    pub rx_antenna_height: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn streams() -> usize {
        1
    }
    pub fn wavelength() -> f64 {
        0.125
    }
    pub fn unit() -> f64 {
        1.0
    }
    pub fn antenna_height() -> f64 {
        0.5
    }
}

impl ScenarioConfig {
    /// Single-stream scenario with unit antenna gains, 0.5 m antennas and a
    /// 0.125 m wavelength.
    pub fn new(
        n_transmitters: usize,
        n_receivers: usize,
        distance: f64,
        group_radius: f64,
        channel_model: ChannelModel,
    ) -> Self {
        Self {
            n_transmitters,
            n_receivers,
            n_streams: 1,
            distance,
            group_radius,
            wavelength: defaults::wavelength(),
            channel_model,
            tx_antenna_gain: 1.0,
            rx_antenna_gain: 1.0,
            tx_antenna_height: defaults::antenna_height(),
            rx_antenna_height: defaults::antenna_height(),
            seed: 0,
        }
    }

    pub fn with_streams(mut self, k: usize) -> Self {
        self.n_streams = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_transmitters == 0 || self.n_receivers == 0 || self.n_streams == 0 {
            return bad("node and stream counts must be positive".into());
        }
        if self.n_streams > self.n_transmitters.min(self.n_receivers) {
            return bad(format!(
                "n_streams = {} exceeds min(n_transmitters, n_receivers) = {}",
                self.n_streams,
                self.n_transmitters.min(self.n_receivers)
            ));
        }
        let positive = [
            ("distance", self.distance),
            ("group_radius", self.group_radius),
            ("wavelength", self.wavelength),
            ("tx_antenna_gain", self.tx_antenna_gain),
            ("rx_antenna_gain", self.rx_antenna_gain),
            ("tx_antenna_height", self.tx_antenna_height),
            ("rx_antenna_height", self.rx_antenna_height),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Two-ray crossover distance `4 pi h_t h_r / lambda`.
    pub fn crossover_distance(&self) -> f64 {
        4.0 * PI * self.tx_antenna_height * self.rx_antenna_height / self.wavelength
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeLayout {
    pub transmitters: Vec<Point>,
    pub receivers: Vec<Point>,
}

impl NodeLayout {
    pub fn n_tx(&self) -> usize {
        self.transmitters.len()
    }

    pub fn n_rx(&self) -> usize {
        self.receivers.len()
    }

    pub fn link_distance(&self, tx: usize, rx: usize) -> f64 {
        self.transmitters[tx].distance(&self.receivers[rx])
    }
}

/// Uniform draw over a disk: radius `r * sqrt(u)`, angle `2 pi v`.
fn sample_disk<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let rho = radius * u.sqrt();
    let phi = TWO_PI * v;
    Point::new(center.x + rho * phi.cos(), center.y + rho * phi.sin())
}

/// Place both groups. Transmitters are drawn first, then receivers, from the
/// same generator.
pub fn place_nodes<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<NodeLayout> {
    config.validate()?;
    let tx_anchor = Point::new(0.0, 0.0);
    let rx_anchor = Point::new(config.distance, 0.0);

    let mut transmitters = Vec::with_capacity(config.n_transmitters);
    transmitters.push(tx_anchor);
    for _ in 1..config.n_transmitters {
        transmitters.push(sample_disk(tx_anchor, config.group_radius, rng));
    }
    let mut receivers = Vec::with_capacity(config.n_receivers);
    receivers.push(rx_anchor);
    for _ in 1..config.n_receivers {
        receivers.push(sample_disk(rx_anchor, config.group_radius, rng));
    }
    Ok(NodeLayout {
        transmitters,
        receivers,
    })
}

/// Power gain `h^2` of a link of length `d` under the configured model.
pub fn channel_gain(d: f64, config: &ScenarioConfig) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidInput(format!("link distance must be positive, got {d}")));
    }
    let free_space = |d: f64| {
        let lambda = config.wavelength;
        config.tx_antenna_gain * config.rx_antenna_gain * lambda * lambda
            / (4.0 * PI * d).powi(2)
    };
    let gain = match config.channel_model {
        ChannelModel::InverseSquare => 1.0 / (d * d),
        ChannelModel::FreeSpace => free_space(d),
        ChannelModel::TwoRay => {
            if d < config.crossover_distance() {
                free_space(d)
            } else {
                let hh = config.tx_antenna_height * config.rx_antenna_height;
                config.tx_antenna_gain * config.rx_antenna_gain * hh * hh / d.powi(4)
            }
        }
    };
    Ok(gain)
}

/// `2 pi * frac(d / lambda)`, always in `[0, 2 pi)`.
pub fn phase_shift(d: f64, wavelength: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0 && wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidInput(format!(
            "distance and wavelength must be positive, got d = {d}, lambda = {wavelength}"
        )));
    }
    let cycles = d / wavelength;
    Ok(wrap_phase(TWO_PI * (cycles - cycles.floor())))
}

/// Reduce an angle into `[0, 2 pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2 pi for tiny negative inputs
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Per-link amplitude gains `h_nm` and observed phase shifts `theta_nm`,
/// stored row-major by transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_tx: usize,
    n_rx: usize,
    gains: Vec<f64>,
    phases: Vec<f64>,
}

impl ChannelMatrix {
    /// `gains` and `phases` are row-major `n_tx x n_rx`. Phases are wrapped
    /// into `[0, 2 pi)`.
    pub fn new(n_tx: usize, n_rx: usize, gains: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::InvalidInput("channel matrix must be non-empty".into()));
        }
        if gains.len() != n_tx * n_rx || phases.len() != n_tx * n_rx {
            return Err(Error::InvalidInput(format!(
                "expected {} entries, got {} gains and {} phases",
                n_tx * n_rx,
                gains.len(),
                phases.len()
            )));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidInput(format!("channel gains must be finite and positive, got {g}")));
        }
        if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("channel phase is not finite: {p}")));
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self {
            n_tx,
            n_rx,
            gains,
            phases,
        })
    }

    /// All amplitudes equal to `gain`, phases as given.
    pub fn uniform_gain(n_tx: usize, n_rx: usize, gain: f64, phases: Vec<f64>) -> Result<Self> {
        Self::new(n_tx, n_rx, vec![gain; n_tx * n_rx], phases)
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    #[inline]
    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        self.gains[tx * self.n_rx + rx]
    }

    #[inline]
    pub fn power_gain(&self, tx: usize, rx: usize) -> f64 {
        let h = self.gain(tx, rx);
        h * h
    }

    #[inline]
    pub fn phase(&self, tx: usize, rx: usize) -> f64 {
        self.phases[tx * self.n_rx + rx]
    }

    /// `h_nm * e^{i theta_nm}`.
    #[inline]
    pub fn phasor(&self, tx: usize, rx: usize) -> Complex64 {
        Complex64::from_polar(self.gain(tx, rx), self.phase(tx, rx))
    }

    /// Same channel with `offsets[m]` added to every phase toward receiver
    /// `m`, as a receiver clock offset would.
    pub fn with_receiver_offsets(&self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.n_rx {
            return Err(Error::InvalidInput(format!(
                "expected {} receiver offsets, got {}",
                self.n_rx,
                offsets.len()
            )));
        }
        let phases = (0..self.n_tx)
            .flat_map(|n| (0..self.n_rx).map(move |m| (n, m)))
            .map(|(n, m)| self.phase(n, m) + offsets[m])
            .collect();
        Self::new(self.n_tx, self.n_rx, self.gains.clone(), phases)
    }
}

/// Build every link of `layout` under `config`'s propagation model.
pub fn build_channels(layout: &NodeLayout, config: &ScenarioConfig) -> Result<ChannelMatrix> {
    config.validate()?;
    let (n_tx, n_rx) = (layout.n_tx(), layout.n_rx());
    if n_tx != config.n_transmitters || n_rx != config.n_receivers {
        return Err(Error::InvalidInput(format!(
            "layout is {n_tx}x{n_rx} but config expects {}x{}",
            config.n_transmitters, config.n_receivers
        )));
    }
    let mut gains = Vec::with_capacity(n_tx * n_rx);
    let mut phases = Vec::with_capacity(n_tx * n_rx);
    for n in 0..n_tx {
        for m in 0..n_rx {
            let d = layout.link_distance(n, m);
            if d == 0.0 {
                return Err(Error::CoincidentNodes { tx: n, rx: m });
            }
            gains.push(channel_gain(d, config)?.sqrt());
            phases.push(phase_shift(d, config.wavelength)?);
        }
    }
    ChannelMatrix::new(n_tx, n_rx, gains, phases)
}
