//! Information-secrecy measures over an n-gram distribution.
//!
//! Every entropy is computed in bits and reported as a per-bit rate
//! (`H / n`) so curves for different word lengths share one axis.

use serde::{Deserialize, Serialize};

use crate::bitstream::{circular_ngram_distribution, BitStream, NgramDistribution, MAX_NGRAM};
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

fn check(p: &[f64], n: u32) -> Result<()> {
    if n == 0 || n > MAX_NGRAM {
        return Err(Error::BadWordLength(n));
    }
    if p.len() != 1usize << n {
        return Err(Error::InvalidDistribution(format!(
            "{} probabilities for n = {n}",
            p.len()
        )));
    }
    if let Some(bad) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!("probability {bad}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

/// Bits per symbol to bits per bit; folds `-0.0` into `0.0`.
fn rate(bits: f64, n: u32) -> f64 {
    bits / n as f64 + 0.0
}

/// Shannon entropy rate, `-sum p log2 p / n` with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64], n: u32) -> Result<f64> {
    check(p, n)?;
    let h: f64 = p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum();
    Ok(rate(h, n))
}

/// Rényi order-2 (collision) entropy rate, `-log2(sum p^2) / n`.
pub fn collision_entropy(p: &[f64], n: u32) -> Result<f64> {
    check(p, n)?;
    let sum_sq: f64 = p.iter().map(|x| x * x).sum();
    Ok(rate(-sum_sq.log2(), n))
}

/// Guessing entropy and its per-bit guessing probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guessing {
    /// Expected number of guesses when trying patterns in decreasing
    /// probability order.
    pub expected_guesses: f64,
    /// Per-bit guessing probability `2^{-(1 + log2 G) / n}`.
    pub p_guess: f64,
    /// `p_guess - 0.5`.
    pub gap: f64,
}

pub fn guessing_entropy(p: &[f64], n: u32) -> Result<Guessing> {
    check(p, n)?;
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let expected_guesses: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i + 1) as f64 * x)
        .sum();
    let p_guess = (-(1.0 + expected_guesses.log2()) / n as f64).exp2();
    Ok(Guessing {
        expected_guesses,
        p_guess,
        gap: p_guess - 0.5,
    })
}

/// Min-entropy rate, `-log2(max p) / n`.
pub fn min_entropy(p: &[f64], n: u32) -> Result<f64> {
    check(p, n)?;
    let max = p.iter().copied().fold(0.0, f64::max);
    Ok(rate(-max.log2(), n))
}

/// L1 distance to the uniform distribution over `2^n` patterns.
pub fn l1_uniform_distance(p: &[f64], n: u32) -> Result<f64> {
    check(p, n)?;
    let uniform = (-(n as f64)).exp2();
    Ok(p.iter().map(|x| (x - uniform).abs()).sum())
}

/// All five measures for one word length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub n: u32,
    pub shannon_rate: f64,
    pub collision_rate: f64,
    pub guessing_gap: f64,
    pub min_entropy_rate: f64,
    pub l1_distance: f64,
}

impl EntropyReport {
    pub fn from_distribution(d: &NgramDistribution) -> Result<Self> {
        let p = d.probabilities()?;
        Ok(Self {
            n: d.n,
            shannon_rate: shannon_entropy(&p, d.n)?,
            collision_rate: collision_entropy(&p, d.n)?,
            guessing_gap: guessing_entropy(&p, d.n)?.gap,
            min_entropy_rate: min_entropy(&p, d.n)?,
            l1_distance: l1_uniform_distance(&p, d.n)?,
        })
    }

    pub const CSV_HEADER: &'static str = "n,shannon,collision,guessing_gap,min_entropy,l1";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.shannon_rate,
            self.collision_rate,
            self.guessing_gap,
            self.min_entropy_rate,
            self.l1_distance
        )
    }
}

/// One report per word length `1..=n_max` over the circular distributions
/// of `z`.
pub fn full_report(z: &BitStream, n_max: u32) -> Result<Vec<EntropyReport>> {
    if n_max == 0 || n_max > MAX_NGRAM {
        return Err(Error::BadWordLength(n_max));
    }
    if z.len() < n_max as usize {
        return Err(Error::TooShort {
            needed: n_max as usize,
            have: z.len(),
        });
    }
    (1..=n_max)
        .map(|n| EntropyReport::from_distribution(&circular_ngram_distribution(z, n)?))
        .collect()
}
