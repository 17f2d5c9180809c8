//! Santha-Vazirani bias of an empirical distribution.
//!
//! A source with bias δ satisfies `p(x) / p(y) <= (1 + δ) / (1 - δ)` for
//! every pair of outcomes. Inverting the bound at the extreme ratio
//! `r = p_max / p_min` gives `δ = (r - 1) / (r + 1)`.

use serde::{Deserialize, Serialize};

use crate::bitstream::{circular_ngram_distribution, BitStream, NgramDistribution, MAX_NGRAM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvDeltaReport {
    pub n: u32,
    pub p_max: f64,
    pub p_min: f64,
    pub delta: f64,
    /// Patterns with zero count; any unseen pattern forces `delta = 1`.
    pub unseen_patterns: usize,
}

impl SvDeltaReport {
    pub const CSV_HEADER: &'static str = "n,p_max,p_min,delta,unseen";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.n, self.p_max, self.p_min, self.delta, self.unseen_patterns
        )
    }
}

pub fn sv_delta(d: &NgramDistribution) -> Result<SvDeltaReport> {
    if d.total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let max = *d.counts.iter().max().expect("2^n >= 2 counts");
    let min = *d.counts.iter().min().expect("2^n >= 2 counts");
    let total = d.total as f64;
    let unseen_patterns = d.unseen();
    // counts are integers, so the ratio is formed from them directly
    let delta = if min == 0 {
        1.0
    } else {
        (max - min) as f64 / (max + min) as f64
    };
    Ok(SvDeltaReport {
        n: d.n,
        p_max: max as f64 / total,
        p_min: min as f64 / total,
        delta,
        unseen_patterns,
    })
}

/// One report per word length `1..=n_max`.
pub fn sv_curve(z: &BitStream, n_max: u32) -> Result<Vec<SvDeltaReport>> {
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
        .map(|n| sv_delta(&circular_ngram_distribution(z, n)?))
        .collect()
}
