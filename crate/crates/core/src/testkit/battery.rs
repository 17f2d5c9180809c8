//! Five closed-form tests from the SP 800-22 family and the proportion
//! check applied over many sequences.
//!
//! Defaults: block frequency uses 128-bit blocks, the serial test uses
//! 4-bit patterns.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bitstream::BitStream;
use crate::error::{Error, Result};

/// Minimum sequence length accepted by every test.
pub const MIN_TEST_BITS: usize = 100;
pub const DEFAULT_BLOCK_SIZE: usize = 128;
pub const DEFAULT_SERIAL_M: u32 = 4;

fn require(bits: &BitStream, needed: usize) -> Result<()> {
    if bits.len() < needed {
        return Err(Error::InsufficientBits {
            needed,
            have: bits.len(),
        });
    }
    Ok(())
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper regularized incomplete gamma, with the `x = 0` edge pinned to 1.
fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

/// Frequency (monobit) p-value from a count of ones in `len` bits.
pub fn monobit_p_value(ones: usize, len: usize) -> f64 {
    let sum = 2.0 * ones as f64 - len as f64;
    let s_obs = sum.abs() / (len as f64).sqrt();
    clamp_p(erfc(s_obs / std::f64::consts::SQRT_2))
}

pub fn monobit_test(bits: &BitStream) -> Result<f64> {
    require(bits, MIN_TEST_BITS)?;
    Ok(monobit_p_value(bits.count_ones(), bits.len()))
}

fn block_frequency_p(bits: &BitStream, block_size: usize) -> f64 {
    let blocks = bits.len() / block_size;
    let chi_sq: f64 = (0..blocks)
        .map(|b| {
            let ones = (b * block_size..(b + 1) * block_size)
                .filter(|&i| bits.get(i))
                .count();
            let pi = ones as f64 / block_size as f64;
            (pi - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * block_size as f64;
    clamp_p(igamc(blocks as f64 / 2.0, chi_sq / 2.0))
}

pub fn block_frequency_test(bits: &BitStream, block_size: usize) -> Result<f64> {
    if block_size == 0 {
        return Err(Error::Config("block size must be positive".into()));
    }
    require(bits, MIN_TEST_BITS.max(block_size))?;
    Ok(block_frequency_p(bits, block_size))
}

fn runs_p(bits: &BitStream) -> f64 {
    let n = bits.len() as f64;
    let pi = bits.count_ones() as f64 / n;
    // frequency prerequisite
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let mut runs = 1u64;
    let mut prev = bits.get(0);
    for bit in bits.iter().skip(1) {
        if bit != prev {
            runs += 1;
        }
        prev = bit;
    }
    let expected = 2.0 * n * pi * (1.0 - pi);
    let num = (runs as f64 - expected).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    clamp_p(erfc(num / den))
}

pub fn runs_test(bits: &BitStream) -> Result<f64> {
    require(bits, MIN_TEST_BITS)?;
    Ok(runs_p(bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CusumDirection {
    Forward,
    Backward,
}

fn cusum_p(bits: &BitStream, direction: CusumDirection) -> f64 {
    let n = bits.len();
    let step = |i: usize| if bits.get(i) { 1i64 } else { -1 };
    let mut sum = 0i64;
    let mut z = 0i64;
    for j in 0..n {
        let i = match direction {
            CusumDirection::Forward => j,
            CusumDirection::Backward => n - 1 - j,
        };
        sum += step(i);
        z = z.max(sum.abs());
    }
    let n_f = n as f64;
    let z_f = z as f64;
    let sqrt_n = n_f.sqrt();
    let n_over_z = (n as i64) / z;

    let mut first = 0.0;
    let mut k = (-n_over_z + 1) / 4;
    while k <= (n_over_z - 1) / 4 {
        let kf = k as f64;
        first += normal_cdf((4.0 * kf + 1.0) * z_f / sqrt_n)
            - normal_cdf((4.0 * kf - 1.0) * z_f / sqrt_n);
        k += 1;
    }
    let mut second = 0.0;
    let mut k = (-n_over_z - 3) / 4;
    while k <= (n_over_z - 1) / 4 {
        let kf = k as f64;
        second += normal_cdf((4.0 * kf + 3.0) * z_f / sqrt_n)
            - normal_cdf((4.0 * kf + 1.0) * z_f / sqrt_n);
        k += 1;
    }
    clamp_p(1.0 - first + second)
}

pub fn cusum_test(bits: &BitStream, direction: CusumDirection) -> Result<f64> {
    require(bits, MIN_TEST_BITS)?;
    Ok(cusum_p(bits, direction))
}

/// `psi^2_m` over overlapping m-bit patterns of the stream extended
/// cyclically by its first `m - 1` bits.
fn psi_sq(bits: &BitStream, m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len();
    let mask = (1u64 << m) - 1;
    let mut counts = vec![0u64; 1usize << m];
    let mut window = bits.read_word(0, m - 1);
    for bit in bits.iter().skip(m as usize - 1).chain(bits.iter().take(m as usize - 1)) {
        window = ((window << 1) | bit as u64) & mask;
        counts[window as usize] += 1;
    }
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64).powi(2)).sum();
    sum_sq * (1u64 << m) as f64 / n as f64 - n as f64
}

fn serial_p(bits: &BitStream, m: u32) -> (f64, f64) {
    let psi_m = psi_sq(bits, m);
    let psi_m1 = psi_sq(bits, m - 1);
    let psi_m2 = psi_sq(bits, m.saturating_sub(2));
    let del1 = psi_m - psi_m1;
    let del2 = psi_m - 2.0 * psi_m1 + psi_m2;
    let p1 = igamc(2f64.powi(m as i32 - 2), del1 / 2.0);
    let p2 = igamc(2f64.powi(m as i32 - 3), del2 / 2.0);
    (clamp_p(p1), clamp_p(p2))
}

/// Serial test p-values `(p1, p2)` for pattern length `m` (at least 3).
pub fn serial_test(bits: &BitStream, m: u32) -> Result<(f64, f64)> {
    if !(3..=16).contains(&m) {
        return Err(Error::Config(format!("serial pattern length {m} outside 3..=16")));
    }
    require(bits, MIN_TEST_BITS.max(m as usize))?;
    Ok(serial_p(bits, m))
}

/// Names of the p-value streams produced per sequence, in report order.
pub const TEST_NAMES: [&str; 7] = [
    "monobit",
    "block_frequency",
    "runs",
    "cusum_forward",
    "cusum_backward",
    "serial_1",
    "serial_2",
];

fn all_p_values(seq: &BitStream) -> Result<[f64; 7]> {
    let (s1, s2) = serial_test(seq, DEFAULT_SERIAL_M)?;
    Ok([
        monobit_test(seq)?,
        block_frequency_test(seq, DEFAULT_BLOCK_SIZE)?,
        runs_test(seq)?,
        cusum_test(seq, CusumDirection::Forward)?,
        cusum_test(seq, CusumDirection::Backward)?,
        s1,
        s2,
    ])
}

/// Confidence interval for the proportion of sequences passing at level
/// `alpha`: `p_hat ± 3 sqrt(p_hat (1 - p_hat) / m)` with `p_hat = 1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionCheck {
    pub m: usize,
    pub pass_count: usize,
    pub alpha: f64,
    pub proportion: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The observed proportion is not below `ci_low`.
    pub proportion_pass: bool,
}

impl ProportionCheck {
    pub fn new(pass_count: usize, m: usize, alpha: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InsufficientData("no sequences".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha {alpha} outside (0, 1)")));
        }
        let p_hat = 1.0 - alpha;
        let half_width = 3.0 * (p_hat * (1.0 - p_hat) / m as f64).sqrt();
        let proportion = pass_count as f64 / m as f64;
        let ci_low = p_hat - half_width;
        Ok(Self {
            m,
            pass_count,
            alpha,
            proportion,
            ci_low,
            ci_high: p_hat + half_width,
            proportion_pass: proportion >= ci_low,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub p_values: Vec<f64>,
    #[serde(flatten)]
    pub proportion: ProportionCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub seq_len: usize,
    pub m: usize,
    pub alpha: f64,
    pub tests: Vec<TestOutcome>,
}

impl BatteryReport {
    pub fn all_pass(&self) -> bool {
        self.tests.iter().all(|t| t.proportion.proportion_pass)
    }

    pub fn test(&self, name: &str) -> Option<&TestOutcome> {
        self.tests.iter().find(|t| t.name == name)
    }

    /// Re-scores the same p-values at another significance level.
    pub fn at_alpha(&self, alpha: f64) -> Result<BatteryReport> {
        let tests = self
            .tests
            .iter()
            .map(|t| {
                let passed = t.p_values.iter().filter(|&&p| p >= alpha).count();
                Ok(TestOutcome {
                    name: t.name.clone(),
                    p_values: t.p_values.clone(),
                    proportion: ProportionCheck::new(passed, self.m, alpha)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(BatteryReport {
            seq_len: self.seq_len,
            m: self.m,
            alpha,
            tests,
        })
    }

    pub const CSV_HEADER: &'static str =
        "test,alpha,m,pass_count,proportion,ci_low,ci_high,proportion_pass";

    pub fn csv_rows(&self) -> Vec<String> {
        self.tests
            .iter()
            .map(|t| {
                let p = &t.proportion;
                format!(
                    "{},{},{},{},{},{},{},{}",
                    t.name, p.alpha, p.m, p.pass_count, p.proportion, p.ci_low, p.ci_high,
                    p.proportion_pass
                )
            })
            .collect()
    }
}

/// Splits `bits` into `floor(len / seq_len)` sequences and runs every test
/// on each.
pub fn run_battery(bits: &BitStream, seq_len: usize, alpha: f64) -> Result<BatteryReport> {
    if seq_len < MIN_TEST_BITS {
        return Err(Error::Config(format!(
            "sequence length {seq_len} below {MIN_TEST_BITS}"
        )));
    }
    let m = bits.len() / seq_len;
    if m == 0 {
        return Err(Error::InsufficientData(format!(
            "{} bits cannot fill one sequence of {seq_len}",
            bits.len()
        )));
    }
    let mut p_values: Vec<Vec<f64>> = vec![Vec::with_capacity(m); TEST_NAMES.len()];
    for i in 0..m {
        let seq = bits.slice(i * seq_len, seq_len);
        for (column, p) in p_values.iter_mut().zip(all_p_values(&seq)?) {
            column.push(p);
        }
    }
    let tests = TEST_NAMES
        .iter()
        .zip(p_values)
        .map(|(name, p_values)| {
            let passed = p_values.iter().filter(|&&p| p >= alpha).count();
            Ok(TestOutcome {
                name: name.to_string(),
                p_values,
                proportion: ProportionCheck::new(passed, m, alpha)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BatteryReport {
        seq_len,
        m,
        alpha,
        tests,
    })
}
