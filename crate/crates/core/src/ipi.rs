//! Interpulse-interval ingestion: file parsing, R-R timestamp conversion,
//! normalization and synthetic series.
//!
//! Raw IPIs are integers in centiseconds (10 ms ticks). Physiologically
//! plausible values lie in `[20, 330]` (300 bpm down to about 18 bpm).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_RAW_IPI: u16 = 20;
pub const MAX_RAW_IPI: u16 = 330;

/// One subject's IPIs in measurement order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpiSeries {
    pub subject_id: String,
    pub values: Vec<u16>,
    pub rejected_count: usize,
}

impl IpiSeries {
    /// Builds a series, dropping and counting out-of-range values.
    pub fn from_raw<I>(subject_id: impl Into<String>, raw: I) -> Self
    where
        I: IntoIterator<Item = i64>,
    {
        let mut values = Vec::new();
        let mut rejected_count = 0;
        for v in raw {
            if in_range(v) {
                values.push(v as u16);
            } else {
                rejected_count += 1;
            }
        }
        Self {
            subject_id: subject_id.into(),
            values,
            rejected_count,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn normalized(&self) -> Vec<NormalizedIpi> {
        self.values.iter().map(|&v| NormalizedIpi(v - MIN_RAW_IPI)).collect()
    }

    /// Renders the per-subject text format read by [`parse_ipi_file`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::with_capacity(16 + self.values.len() * 4);
        let _ = writeln!(out, "# subject: {}", self.subject_id);
        for v in &self.values {
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

fn in_range(raw: i64) -> bool {
    (MIN_RAW_IPI as i64..=MAX_RAW_IPI as i64).contains(&raw)
}

/// Parses a per-subject IPI file.
///
/// The first non-blank line must be `# subject: <id>`. Every other line is
/// either a `#` comment, blank, or a single integer. Lines that are not
/// integers or fall outside `[20, 330]` are counted in `rejected_count`.
pub fn parse_ipi_file(content: &str) -> Result<IpiSeries> {
    let mut lines = content.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("missing `# subject:` line".into()))?;
    let subject_id = header
        .strip_prefix('#')
        .map(str::trim_start)
        .and_then(|h| h.strip_prefix("subject:"))
        .map(str::trim)
        .filter(|id| !id.is_empty())
        .ok_or_else(|| Error::MalformedHeader(header.to_string()))?;

    let mut values = Vec::new();
    let mut rejected_count = 0;
    for line in lines {
        if line.starts_with('#') {
            continue;
        }
        match line.parse::<i64>() {
            Ok(v) if in_range(v) => values.push(v as u16),
            _ => rejected_count += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(IpiSeries {
        subject_id: subject_id.to_string(),
        values,
        rejected_count,
    })
}

/// Result of converting R-peak timestamps to raw IPIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrConversion {
    pub values: Vec<u16>,
    pub dropped: usize,
}

/// Converts strictly increasing R-peak timestamps (seconds) into raw IPIs:
/// `round_half_up(100 * (t[i+1] - t[i]))`, dropping out-of-range results.
pub fn rr_times_to_ipi(timestamps: &[f64]) -> Result<RrConversion> {
    if timestamps.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two timestamps".into(),
        ));
    }
    let mut values = Vec::with_capacity(timestamps.len() - 1);
    let mut dropped = 0;
    for (i, pair) in timestamps.windows(2).enumerate() {
        if !(pair[1] > pair[0]) || !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(Error::NonMonotone(i + 1));
        }
        let raw = round_half_up(100.0 * (pair[1] - pair[0]));
        if in_range(raw) {
            values.push(raw as u16);
        } else {
            dropped += 1;
        }
    }
    Ok(RrConversion { values, dropped })
}

/// Rounds to the nearest integer, ties upward. Differences like
/// `0.205 - 0.0` land a hair below the tie in binary, so values within
/// 1e-9 of a half are treated as the tie.
fn round_half_up(x: f64) -> i64 {
    let shifted = x + 0.5;
    let nearest = shifted.round();
    if (shifted - nearest).abs() < 1e-9 {
        nearest as i64
    } else {
        shifted.floor() as i64
    }
}

/// An IPI shifted down by 20 so it starts at zero; valid range `[0, 310]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NormalizedIpi(u16);

impl NormalizedIpi {
    pub fn from_value(value: u16) -> Result<Self> {
        if value > MAX_RAW_IPI - MIN_RAW_IPI {
            return Err(Error::Range(value as i64 + MIN_RAW_IPI as i64));
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    /// The 8-bit representation; the ninth bit of the value is dropped.
    #[inline]
    pub fn bits8(self) -> u8 {
        (self.0 % 256) as u8
    }

    /// The `k` least significant bits of the value.
    #[inline]
    pub fn k_lsb(self, k: u32) -> Result<u8> {
        if !(1..=8).contains(&k) {
            return Err(Error::BadK(k));
        }
        Ok((self.0 & ((1u16 << k) - 1)) as u8)
    }
}

/// `raw - 20` for a raw IPI in `[20, 330]`.
pub fn normalize(raw: i64) -> Result<NormalizedIpi> {
    if !in_range(raw) {
        return Err(Error::Range(raw));
    }
    Ok(NormalizedIpi(raw as u16 - MIN_RAW_IPI))
}

/// Free-function form of [`NormalizedIpi::k_lsb`].
pub fn k_lsb(norm: NormalizedIpi, k: u32) -> Result<u8> {
    norm.k_lsb(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Gaussian coarse level with two i.i.d. uniform low bits.
    IidUniformBits,
    /// I.i.d. draws from a rounded Gaussian around `mean`.
    IidHistogram,
    /// First-order autoregressive series around `mean`.
    Ar1,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid-uniform-bits" => Ok(SynthKind::IidUniformBits),
            "iid-histogram" => Ok(SynthKind::IidHistogram),
            "ar1" => Ok(SynthKind::Ar1),
            other => Err(Error::Config(format!("unknown synthetic model {other:?}"))),
        }
    }
}

/// Parameters of a synthetic IPI generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthModel {
    pub kind: SynthKind,
    /// Centre of the series, centiseconds.
    pub mean: f64,
    pub ar_coefficient: f64,
    /// Gaussian noise scale, centiseconds.
    pub noise_sd: f64,
    pub seed: u64,
}

impl SynthModel {
    /// Resting-heart-rate defaults: 80 cs (75 bpm) with 10 cs spread.
    pub fn new(kind: SynthKind, seed: u64) -> Self {
        Self {
            kind,
            mean: 80.0,
            ar_coefficient: 0.0,
            noise_sd: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite()
            || self.mean < MIN_RAW_IPI as f64
            || self.mean > MAX_RAW_IPI as f64
        {
            return Err(Error::Config(format!(
                "mean {} outside [20, 330]",
                self.mean
            )));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::Config(format!(
                "ar_coefficient {} outside [0, 1)",
                self.ar_coefficient
            )));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::Config(format!(
                "noise_sd {} must be finite and non-negative",
                self.noise_sd
            )));
        }
        Ok(())
    }

    /// An endless iterator of raw IPIs.
    pub fn iter(&self) -> Result<SynthIter> {
        self.validate()?;
        Ok(SynthIter {
            model: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            noise: Normal::new(0.0, self.noise_sd).expect("validated noise_sd"),
            previous: self.mean,
        })
    }
}

/// Iterator form of [`synth_generate`].
pub struct SynthIter {
    model: SynthModel,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    previous: f64,
}

impl Iterator for SynthIter {
    type Item = u16;

    fn next(&mut self) -> Option<u16> {
        let raw = match self.model.kind {
            SynthKind::IidUniformBits => {
                // coarse level in steps of 4 over normalized [0, 308]
                let level = (self.model.mean + self.noise.sample(&mut self.rng)
                    - MIN_RAW_IPI as f64)
                    / 4.0;
                let level = level.round().clamp(0.0, 77.0) as u16;
                let low: u16 = self.rng.gen_range(0..4);
                MIN_RAW_IPI + level * 4 + low
            }
            SynthKind::IidHistogram => {
                clamp_raw(self.model.mean + self.noise.sample(&mut self.rng))
            }
            SynthKind::Ar1 => {
                let next = self.model.mean
                    + self.model.ar_coefficient * (self.previous - self.model.mean)
                    + self.noise.sample(&mut self.rng);
                let raw = clamp_raw(next);
                self.previous = raw as f64;
                raw
            }
        };
        Some(raw)
    }
}

fn clamp_raw(x: f64) -> u16 {
    x.round().clamp(MIN_RAW_IPI as f64, MAX_RAW_IPI as f64) as u16
}

/// Generates `n` raw IPIs from `model`; deterministic in `model.seed`.
pub fn synth_generate(model: &SynthModel, n: usize) -> Result<IpiSeries> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let values = model.iter()?.take(n).collect();
    Ok(IpiSeries {
        subject_id: format!("synth-{}", model.seed),
        values,
        rejected_count: 0,
    })
}
