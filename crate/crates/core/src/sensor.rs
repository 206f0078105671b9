//! Per-sensor affine force models.
//!
//! Every sensor, whether a load cell or a factory-calibrated FSR, maps a raw
//! reading `S` to a force through `F = c·S + d`. The tare/scale form
//! `F = (S − a)/b` is the same model with `a = −d/c` (no-load reading) and
//! `b = 1/c` (counts per newton).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of sensors in one foot module.
pub const SENSORS_PER_MODULE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Identifies one sensor: its 1-based index within a module and the module side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SensorId {
    side: Side,
    index: u8,
}

impl SensorId {
    pub fn new(side: Side, index: u8) -> Result<Self> {
        if !(1..=SENSORS_PER_MODULE as u8).contains(&index) {
            return Err(Error::InvalidInput(format!(
                "sensor index {index} outside 1..={SENSORS_PER_MODULE}"
            )));
        }
        Ok(SensorId { side, index })
    }

    pub fn side(self) -> Side {
        self.side
    }

    /// 1-based index within the module.
    pub fn index(self) -> u8 {
        self.index
    }

    /// 0-based slot, suitable for indexing `[_; 4]` arrays.
    pub fn slot(self) -> usize {
        usize::from(self.index - 1)
    }

    /// The four sensors of one module, in slot order.
    pub fn module(side: Side) -> [SensorId; SENSORS_PER_MODULE] {
        [1, 2, 3, 4].map(|index| SensorId { side, index })
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Left => 'L',
            Side::Right => 'R',
        };
        write!(f, "{s}{}", self.index)
    }
}

/// Affine raw-to-force model `F = c·S + d` for a single sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UncheckedAffine")]
pub struct AffineParams {
    c: f64,
    d: f64,
}

#[derive(Deserialize)]
struct UncheckedAffine {
    c: f64,
    d: f64,
}

impl TryFrom<UncheckedAffine> for AffineParams {
    type Error = Error;
    fn try_from(u: UncheckedAffine) -> Result<Self> {
        AffineParams::new(u.c, u.d)
    }
}

impl AffineParams {
    /// Unit response: raw readings already are forces in newtons. This is
    /// how factory-calibrated FSRs enter the model.
    pub const IDENTITY: AffineParams = AffineParams { c: 1.0, d: 0.0 };

    pub fn new(c: f64, d: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() && d.is_finite() {
            Ok(AffineParams { c, d })
        } else {
            Err(Error::InvalidParams { c, d })
        }
    }

    /// Builds the model from the tare form `F = (S − a)/b`.
    pub fn from_tare(noload_reading: f64, counts_per_newton: f64) -> Result<Self> {
        let c = 1.0 / counts_per_newton;
        AffineParams::new(c, -noload_reading * c)
    }

    /// Scale, newtons per raw count.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Offset, newtons.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Raw reading at zero force (`a`).
    pub fn noload_reading(&self) -> f64 {
        -self.d / self.c
    }

    /// Raw counts per newton (`b`).
    pub fn counts_per_newton(&self) -> f64 {
        1.0 / self.c
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.c * raw + self.d
    }

    /// Raw reading that maps to `force`.
    pub fn invert(&self, force: f64) -> f64 {
        (force - self.d) / self.c
    }
}

impl Default for AffineParams {
    fn default() -> Self {
        AffineParams::IDENTITY
    }
}

pub fn apply_affine(params: &AffineParams, raw: f64) -> f64 {
    params.apply(raw)
}

pub fn invert_affine(params: &AffineParams, force: f64) -> f64 {
    params.invert(force)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Single-sensor calibration from a no-load recording and a recording under
/// a known force.
///
/// The offset `a` is the mean no-load reading and the scale `b` is the mean
/// change in reading divided by the known force.
///
/// ```
/// use footcal::sensor::tare_and_scale;
///
/// let p = tare_and_scale(&[99.0, 101.0], &[600.0], 9.81).unwrap();
/// assert!((p.apply(100.0)).abs() < 1e-12);
/// assert!((p.apply(600.0) - 9.81).abs() < 1e-12);
/// ```
pub fn tare_and_scale(noload: &[f64], loaded: &[f64], known_force: f64) -> Result<AffineParams> {
    if noload.is_empty() {
        return Err(Error::EmptyInput("no-load samples"));
    }
    if loaded.is_empty() {
        return Err(Error::EmptyInput("loaded samples"));
    }
    if !(known_force > 0.0 && known_force.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "known force must be positive, got {known_force}"
        )));
    }
    if noload.iter().chain(loaded).any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite raw sample".into()));
    }
    let a = mean(noload);
    let loaded_mean = mean(loaded);
    if loaded_mean <= a {
        return Err(Error::DegenerateCalibration {
            noload: a,
            loaded: loaded_mean,
        });
    }
    let b = (loaded_mean - a) / known_force;
    AffineParams::new(1.0 / b, -a / b)
}

/// One reading of the four sensors of a module, in raw counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    values: [f64; SENSORS_PER_MODULE],
    timestamp_ms: Option<u64>,
}

impl RawSample {
    pub fn new(values: [f64; SENSORS_PER_MODULE]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite raw sample {values:?}")));
        }
        Ok(RawSample {
            values,
            timestamp_ms: None,
        })
    }

    pub fn with_timestamp(mut self, t_ms: u64) -> Self {
        self.timestamp_ms = Some(t_ms);
        self
    }

    pub fn values(&self) -> &[f64; SENSORS_PER_MODULE] {
        &self.values
    }

    pub fn timestamp_ms(&self) -> Option<u64> {
        self.timestamp_ms
    }

    /// Element-wise mean of a non-empty set of samples. The timestamp of the
    /// result is dropped.
    pub fn mean(samples: &[RawSample]) -> Result<RawSample> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("raw samples"));
        }
        let mut acc = [0.0; SENSORS_PER_MODULE];
        for s in samples {
            for (a, v) in acc.iter_mut().zip(s.values) {
                *a += v;
            }
        }
        RawSample::new(acc.map(|a| a / samples.len() as f64))
    }
}

/// The optimization variable: `[c₁, c₂, c₃, c₄, d₁, d₂, d₃, d₄]`.
///
/// Unlike [`AffineParams`], a `ParamVector` may hold non-physical values
/// while a solver is iterating; [`ParamVector::to_params`] re-validates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector(pub [f64; 2 * SENSORS_PER_MODULE]);

impl ParamVector {
    pub const LEN: usize = 2 * SENSORS_PER_MODULE;

    pub fn identity() -> Self {
        ParamVector::from_params(&[AffineParams::IDENTITY; SENSORS_PER_MODULE])
    }

    pub fn from_params(params: &[AffineParams; SENSORS_PER_MODULE]) -> Self {
        let mut z = [0.0; Self::LEN];
        for (k, p) in params.iter().enumerate() {
            z[k] = p.c;
            z[k + SENSORS_PER_MODULE] = p.d;
        }
        ParamVector(z)
    }

    pub fn to_params(&self) -> Result<[AffineParams; SENSORS_PER_MODULE]> {
        let mut out = [AffineParams::IDENTITY; SENSORS_PER_MODULE];
        for (k, slot) in out.iter_mut().enumerate() {
            let (c, d) = (self.c(k), self.d(k));
            if !(c > 0.0) {
                return Err(Error::NonPositiveScale { sensor: k + 1, value: c });
            }
            *slot = AffineParams::new(c, d)?;
        }
        Ok(out)
    }

    /// Scale of sensor slot `k` (0-based).
    pub fn c(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// Offset of sensor slot `k` (0-based).
    pub fn d(&self, k: usize) -> f64 {
        self.0[k + SENSORS_PER_MODULE]
    }

    pub fn force(&self, k: usize, raw: f64) -> f64 {
        self.c(k) * raw + self.d(k)
    }

    pub fn forces(&self, sample: &RawSample) -> [f64; SENSORS_PER_MODULE] {
        std::array::from_fn(|k| self.force(k, sample.values[k]))
    }

    pub fn as_array(&self) -> &[f64; 2 * SENSORS_PER_MODULE] {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> f64 {
        self.0
            .iter()
            .zip(other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
