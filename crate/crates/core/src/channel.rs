//! Far-field geometric multipath channel seen by a receive antenna that can
//! move inside a square region.
//!
//! Positions are expressed in wavelength units. The wavelength is kept on the
//! channel so that `2π/λ` appears only in the phase terms; with the default
//! `λ = 1` a region side of `4.0` means four wavelengths.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{stream_rng, Stream};

/// One propagation path: complex gain plus elevation/azimuth angles of arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    pub elevation: f64,
    pub azimuth: f64,
}

impl PathComponent {
    pub fn new(gain: Complex64, elevation: f64, azimuth: f64) -> Result<Self> {
        let in_range = |a: f64| (-FRAC_PI_2..=FRAC_PI_2).contains(&a);
        if !in_range(elevation) || !in_range(azimuth) {
            return Err(invalid(format!(
                "angles must lie in [-pi/2, pi/2], got elevation={elevation}, azimuth={azimuth}"
            )));
        }
        if !gain.re.is_finite() || !gain.im.is_finite() {
            return Err(invalid("path gain must be finite"));
        }
        Ok(Self {
            gain,
            elevation,
            azimuth,
        })
    }

    pub fn magnitude(&self) -> f64 {
        self.gain.norm()
    }

    /// Phase of the gain in `(-π, π]`.
    pub fn phase(&self) -> f64 {
        let p = self.gain.arg();
        if p <= -PI {
            PI
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    paths: Vec<PathComponent>,
    wavelength: f64,
}

impl ChannelRealization {
    pub fn new(paths: Vec<PathComponent>, wavelength: f64) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid("a channel needs at least one path"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self { paths, wavelength })
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Wavenumber `2π/λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Same channel with every gain multiplied by `factor`.
    pub fn scaled_gains(&self, factor: Complex64) -> Self {
        Self {
            paths: self
                .paths
                .iter()
                .map(|p| PathComponent {
                    gain: p.gain * factor,
                    ..*p
                })
                .collect(),
            wavelength: self.wavelength,
        }
    }
}

/// Antenna coordinate in wavelength units. The reference position is the zero value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, rhs: Position) -> Position {
        Position::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, rhs: Position) -> Position {
        Position::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Position {
    type Output = Position;
    fn mul(self, rhs: f64) -> Position {
        Position::new(self.x * rhs, self.y * rhs)
    }
}

/// Centered square `[-A/2, A/2]²` the antenna may occupy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    side: f64,
}

impl Region {
    pub fn new(side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid(format!("region side must be positive, got {side}")));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.side
    }

    pub fn contains(&self, p: Position) -> bool {
        let h = self.half_side();
        p.x.abs() <= h && p.y.abs() <= h
    }

    /// Uniform draw over the region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let h = self.half_side();
        Position::new(rng.random_range(-h..=h), rng.random_range(-h..=h))
    }

    /// Grid coordinates along one axis: `-A/2 + i·resolution` for
    /// `i = 0..=⌊A/resolution⌋`, clamped so the last one never leaves the region.
    pub fn grid_axis(&self, resolution: f64) -> Result<Vec<f64>> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(invalid(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        let h = self.half_side();
        // A/res is often an integer up to rounding (4 / 0.05)
        let steps = (self.side / resolution + 1e-9).floor() as usize;
        Ok((0..=steps)
            .map(|i| (-h + i as f64 * resolution).min(h))
            .collect())
    }

    /// Row-major grid (rows along `y`, columns along `x`).
    pub fn grid(&self, resolution: f64) -> Result<Vec<Position>> {
        let axis = self.grid_axis(resolution)?;
        Ok(axis
            .iter()
            .flat_map(|&y| axis.iter().map(move |&x| Position::new(x, y)))
            .collect())
    }
}

/// Draws `num_paths` i.i.d. paths with `CN(0, 1/L)` gains and uniform angles.
pub fn sample_channel(seed: u64, num_paths: usize, wavelength: f64) -> Result<ChannelRealization> {
    let mut rng = stream_rng(seed, 0, Stream::Channel);
    sample_channel_with(&mut rng, num_paths, wavelength)
}

pub fn sample_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    num_paths: usize,
    wavelength: f64,
) -> Result<ChannelRealization> {
    if num_paths == 0 {
        return Err(invalid("number of paths must be at least 1"));
    }
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let sd = (0.5 / num_paths as f64).sqrt();
    let paths = (0..num_paths)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            PathComponent {
                gain: Complex64::new(sd * re, sd * im),
                elevation: rng.random_range(-FRAC_PI_2..=FRAC_PI_2),
                azimuth: rng.random_range(-FRAC_PI_2..=FRAC_PI_2),
            }
        })
        .collect();
    ChannelRealization::new(paths, wavelength)
}

/// Change in propagation distance of a path when the antenna moves from the
/// reference point to `position`: `x cosθ sinφ + y sinθ`.
pub fn path_length_delta(position: Position, elevation: f64, azimuth: f64) -> f64 {
    position.x * elevation.cos() * azimuth.sin() + position.y * elevation.sin()
}

/// Receiver field response: entry `l` is `exp(j·2π/λ·ρ_l(position))`.
pub fn field_response(channel: &ChannelRealization, position: Position) -> Vec<Complex64> {
    let k = channel.wavenumber();
    channel
        .paths
        .iter()
        .map(|p| Complex64::cis(k * path_length_delta(position, p.elevation, p.azimuth)))
        .collect()
}

/// `h(r) = Σ_l b_l exp(-j·2π/λ·ρ_l(r))`, summed in path order.
pub fn channel_response(channel: &ChannelRealization, position: Position) -> Complex64 {
    let k = channel.wavenumber();
    channel
        .paths
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, p| {
            acc + p.gain * Complex64::cis(-k * path_length_delta(position, p.elevation, p.azimuth))
        })
}

/// `|h(r)|²` written as the double sum over path pairs
/// `Σ_m Σ_n α_m α_n cos(2π/λ·(ρ_m − ρ_n) + δ_n − δ_m)`.
pub fn channel_power_expansion(channel: &ChannelRealization, position: Position) -> f64 {
    let k = channel.wavenumber();
    let terms: Vec<(f64, f64, f64)> = channel
        .paths
        .iter()
        .map(|p| {
            (
                p.magnitude(),
                p.phase(),
                path_length_delta(position, p.elevation, p.azimuth),
            )
        })
        .collect();
    let mut total = 0.0;
    for &(alpha_m, delta_m, rho_m) in &terms {
        for &(alpha_n, delta_n, rho_n) in &terms {
            let path_diff = rho_m - rho_n;
            let phase_offset = delta_n - delta_m;
            total += alpha_m * alpha_n * (k * path_diff + phase_offset).cos();
        }
    }
    total.max(0.0)
}

/// Receive SNR `|h(r)|²·P/σ²` in dB.
pub fn receive_snr(
    channel: &ChannelRealization,
    position: Position,
    transmit_power: f64,
    noise_variance: f64,
) -> Result<f64> {
    if transmit_power.is_nan() || transmit_power <= 0.0 {
        return Err(invalid(format!(
            "transmit power must be positive, got {transmit_power}"
        )));
    }
    if noise_variance.is_nan() || noise_variance <= 0.0 {
        return Err(invalid(format!(
            "SNR is undefined for noise variance {noise_variance}"
        )));
    }
    let gain = channel_response(channel, position).norm_sqr();
    Ok(linear_to_db(gain * transmit_power / noise_variance))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Index of the largest value, first occurrence winning. Values within a
/// relative `1e-12` of the running best count as ties, so rounding noise on a
/// flat surface does not move the answer.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] + 1e-12 * values[best].abs() {
            best = i;
        }
    }
    best
}

/// Anything that returns a received sample at a commanded antenna position.
///
/// The optimizer only ever sees the channel through this trait, which is what
/// makes it CSI-free.
pub trait Probe {
    fn measure(&mut self, position: Position) -> Complex64;

    /// Number of measurements taken so far.
    fn measurement_count(&self) -> u64;
}

/// Simulated receiver: `y(r) = √P·h(r)·s + n`, `n ~ CN(0, σ²)`.
#[derive(Debug, Clone)]
pub struct MeasurementOracle {
    channel: ChannelRealization,
    transmit_power: f64,
    noise_variance: f64,
    pilot: Complex64,
    rng: ChaCha8Rng,
    count: u64,
}

impl MeasurementOracle {
    pub fn new(
        channel: ChannelRealization,
        transmit_power: f64,
        noise_variance: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if !(transmit_power > 0.0 && transmit_power.is_finite()) {
            return Err(invalid(format!(
                "transmit power must be positive, got {transmit_power}"
            )));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(invalid(format!(
                "noise variance must be non-negative, got {noise_variance}"
            )));
        }
        Ok(Self {
            channel,
            transmit_power,
            noise_variance,
            pilot: Complex64::new(1.0, 0.0),
            rng,
            count: 0,
        })
    }

    pub fn with_pilot(mut self, pilot: Complex64) -> Self {
        self.pilot = pilot;
        self
    }

    pub fn channel(&self) -> &ChannelRealization {
        &self.channel
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn pilot(&self) -> Complex64 {
        self.pilot
    }
}

impl Probe for MeasurementOracle {
    fn measure(&mut self, position: Position) -> Complex64 {
        // drawn even when σ² = 0
        let sd = (0.5 * self.noise_variance).sqrt();
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        self.count += 1;
        let signal =
            self.transmit_power.sqrt() * channel_response(&self.channel, position) * self.pilot;
        signal + Complex64::new(sd * re, sd * im)
    }

    fn measurement_count(&self) -> u64 {
        self.count
    }
}
