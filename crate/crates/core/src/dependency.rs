//! Cross-subject dependency: `e_indp = H(X) + H(Y) - H(X,Y)` over
//! time-aligned n-bit blocks of two bitstreams, and the random-pair
//! sampling experiment built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitstream::{concat_series, BitStream, MAX_NGRAM};
use crate::error::{Error, Result};
use crate::ipi::IpiSeries;

/// Default minimum series length for [`pair_sampling`].
pub const DEFAULT_MIN_LENGTH: usize = 100_000;

/// Bits per IPI used by the pair-sampling experiment.
pub const PAIR_SAMPLING_K: u32 = 2;

/// Largest `n` for which joint counts are kept in a dense table.
const DENSE_JOINT_MAX_N: u32 = 10;

/// Joint and marginal block counts of two streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    pub n: u32,
    /// Non-zero cells as `(x_pattern, y_pattern, count)`, sorted by pattern.
    pub cells: Vec<(u32, u32, u64)>,
    pub x_counts: Vec<u64>,
    pub y_counts: Vec<u64>,
    pub total: u64,
}

impl JointDistribution {
    pub fn count(&self, x: u32, y: u32) -> u64 {
        self.cells
            .binary_search_by_key(&(x, y), |&(a, b, _)| (a, b))
            .map(|i| self.cells[i].2)
            .unwrap_or(0)
    }
}

/// Pairs block `i` of `x` with block `i` of `y` (single offset, no wrap).
///
/// Both streams are truncated to `n * floor(min(|x|, |y|) / n)` bits.
pub fn joint_distribution(x: &BitStream, y: &BitStream, n: u32) -> Result<JointDistribution> {
    if n == 0 || n > MAX_NGRAM {
        return Err(Error::BadWordLength(n));
    }
    let shortest = x.len().min(y.len());
    if shortest < n as usize {
        return Err(Error::TooShort {
            needed: n as usize,
            have: shortest,
        });
    }
    let blocks = shortest / n as usize;
    let size = 1usize << n;
    let mut x_counts = vec![0u64; size];
    let mut y_counts = vec![0u64; size];
    let pairs = (0..blocks).map(|b| {
        let start = b * n as usize;
        (x.read_word(start, n) as u32, y.read_word(start, n) as u32)
    });

    let cells = if n <= DENSE_JOINT_MAX_N {
        let mut dense = vec![0u64; size * size];
        for (a, b) in pairs {
            x_counts[a as usize] += 1;
            y_counts[b as usize] += 1;
            dense[((a as usize) << n) | b as usize] += 1;
        }
        dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| ((i >> n) as u32, (i & (size - 1)) as u32, c))
            .collect()
    } else {
        let mut keys: Vec<u64> = Vec::with_capacity(blocks);
        for (a, b) in pairs {
            x_counts[a as usize] += 1;
            y_counts[b as usize] += 1;
            keys.push(((a as u64) << n) | b as u64);
        }
        keys.sort_unstable();
        let mut cells: Vec<(u32, u32, u64)> = Vec::new();
        for key in keys {
            let (a, b) = ((key >> n) as u32, (key & (size as u64 - 1)) as u32);
            match cells.last_mut() {
                Some(last) if (last.0, last.1) == (a, b) => last.2 += 1,
                _ => cells.push((a, b, 1)),
            }
        }
        cells
    };

    Ok(JointDistribution {
        n,
        cells,
        x_counts,
        y_counts,
        total: blocks as u64,
    })
}

/// Plug-in Shannon entropy in bits of a count vector.
///
/// Terms are summed over the counts in ascending order, so the result
/// depends only on the multiset of counts. That makes `H(X, Y) == H(Y, X)`
/// and `H(X, X) == H(X)` hold bit-for-bit.
fn entropy_bits(counts: impl Iterator<Item = u64>) -> f64 {
    let mut sorted: Vec<u64> = counts.filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    let total: u64 = sorted.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    h + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub n: u32,
    pub h_x: f64,
    pub h_y: f64,
    pub h_xy: f64,
    /// Mutual information `h_x + h_y - h_xy`, in bits.
    pub e_indp: f64,
}

pub fn e_indp(x: &BitStream, y: &BitStream, n: u32) -> Result<DependencyReport> {
    let joint = joint_distribution(x, y, n)?;
    let h_x = entropy_bits(joint.x_counts.iter().copied());
    let h_y = entropy_bits(joint.y_counts.iter().copied());
    let h_xy = entropy_bits(joint.cells.iter().map(|c| c.2));
    Ok(DependencyReport {
        n,
        h_x,
        h_y,
        h_xy,
        e_indp: h_x + h_y - h_xy,
    })
}

/// Box-plot summary of `e_indp` over random subject pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSampleSummary {
    pub trials: usize,
    pub n: u32,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Values beyond 1.5 IQR from the quartiles.
    pub outliers: Vec<f64>,
    /// Per-trial records in trial order.
    pub samples: Vec<PairSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub trial: usize,
    pub subject_a: String,
    pub subject_b: String,
    pub e_indp: f64,
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (`h = (len - 1) * q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Repeatedly picks two distinct eligible subjects uniformly at random and
/// measures `e_indp` between their 2-LSB bitstreams.
pub fn pair_sampling(
    subjects: &[IpiSeries],
    trials: usize,
    min_length: usize,
    n: u32,
    seed: u64,
) -> Result<PairSampleSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if n == 0 || n > MAX_NGRAM {
        return Err(Error::BadWordLength(n));
    }
    let eligible: Vec<&IpiSeries> = subjects
        .iter()
        .filter(|s| !s.is_empty() && s.len() >= min_length)
        .collect();
    if eligible.len() < 2 {
        return Err(Error::InsufficientSubjects {
            eligible: eligible.len(),
        });
    }
    let streams: Vec<BitStream> = eligible
        .iter()
        .map(|s| concat_series(&s.normalized(), PAIR_SAMPLING_K))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    for trial in 0..trials {
        let a = rng.gen_range(0..eligible.len());
        let mut b = rng.gen_range(0..eligible.len() - 1);
        if b >= a {
            b += 1;
        }
        let report = e_indp(&streams[a], &streams[b], n)?;
        samples.push(PairSample {
            trial,
            subject_a: eligible[a].subject_id.clone(),
            subject_b: eligible[b].subject_id.clone(),
            e_indp: report.e_indp,
        });
    }

    let mut sorted: Vec<f64> = samples.iter().map(|s| s.e_indp).collect();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let outliers = samples
        .iter()
        .map(|s| s.e_indp)
        .filter(|&v| v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr)
        .collect();
    Ok(PairSampleSummary {
        trials,
        n,
        min: sorted[0],
        q1,
        median: quantile_sorted(&sorted, 0.5),
        q3,
        max: sorted[sorted.len() - 1],
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        outliers,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipi::{synth_generate, SynthKind, SynthModel};
    use proptest::prelude::*;
    use rand::Rng;

    fn bits(s: &str) -> BitStream {
        BitStream::from_ascii(s).unwrap()
    }

    fn random_stream(seed: u64, len: usize) -> BitStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen::<bool>()).collect()
    }

    #[test]
    fn joint_examples() {
        let x = bits("0101");
        let j = joint_distribution(&x, &x, 2).unwrap();
        assert_eq!(j.cells, vec![(0b01, 0b01, 2)]);

        let j = joint_distribution(&bits("0000"), &bits("1111"), 1).unwrap();
        assert_eq!(j.cells, vec![(0, 1, 4)]);
        assert_eq!(j.count(0, 1), 4);
        assert_eq!(j.count(1, 0), 0);

        // the longer stream is cut to the shorter, then to a multiple of n
        let j = joint_distribution(&bits("0110111"), &bits("01101"), 2).unwrap();
        assert_eq!(j.total, 2);

        assert!(matches!(
            joint_distribution(&bits("0"), &bits("01"), 2),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn joint_cells_are_near_uniform_for_independent_streams() {
        let x = random_stream(1, 1_000_000);
        let y = random_stream(2, 1_000_000);
        let j = joint_distribution(&x, &y, 4).unwrap();
        let total = j.total as f64;
        let p = 1.0 / 256.0;
        let sigma = (p * (1.0 - p) / total).sqrt();
        assert_eq!(j.cells.len(), 256);
        for &(_, _, c) in &j.cells {
            assert!((c as f64 / total - p).abs() < 3.0 * sigma * 1.5);
        }
    }

    #[test]
    fn sparse_and_dense_paths_agree() {
        let x = random_stream(3, 24_000);
        let y = random_stream(4, 24_000);
        for n in [10, 11, 12] {
            let j = joint_distribution(&x, &y, n).unwrap();
            assert_eq!(j.cells.iter().map(|c| c.2).sum::<u64>(), j.total);
            let mut sorted = j.cells.clone();
            sorted.sort();
            assert_eq!(sorted, j.cells);
        }
        // same stream twice: both paths give a diagonal
        let j = joint_distribution(&x, &x, 12).unwrap();
        assert!(j.cells.iter().all(|&(a, b, _)| a == b));
    }

    #[test]
    fn identity_and_complement_give_full_information() {
        let x = random_stream(5, 5_000);
        let r = e_indp(&x, &x, 6).unwrap();
        assert!(r.h_x > 0.0);
        assert_eq!(r.e_indp, r.h_x);
        let r = e_indp(&x, &x.complement(), 6).unwrap();
        assert_eq!(r.e_indp, r.h_x);
    }

    #[test]
    fn independent_streams_have_small_dependency() {
        // plug-in bias at n = 8 is about 255^2 / (2 N ln 2) bits, so the
        // streams must carry several million blocks to get under 0.01
        let x = random_stream(6, 48_000_000);
        let y = random_stream(7, 48_000_000);
        let r = e_indp(&x, &y, 8).unwrap();
        assert!(r.e_indp < 0.01, "{}", r.e_indp);
        assert!(r.e_indp >= -1e-9);
    }

    #[test]
    fn quantiles_interpolate() {
        let data = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&data, 0.0), 1.0);
        assert_eq!(quantile_sorted(&data, 0.25), 1.75);
        assert_eq!(quantile_sorted(&data, 0.5), 2.5);
        assert_eq!(quantile_sorted(&data, 1.0), 4.0);
    }

    fn subjects(count: usize, len: usize) -> Vec<IpiSeries> {
        (0..count)
            .map(|i| {
                let model = SynthModel::new(SynthKind::IidUniformBits, 100 + i as u64);
                let mut s = synth_generate(&model, len).unwrap();
                s.subject_id = format!("s{i}");
                s
            })
            .collect()
    }

    #[test]
    fn two_subjects_always_pair_together() {
        let subjects = subjects(2, 2_000);
        let summary = pair_sampling(&subjects, 5, 1_000, 4, 9).unwrap();
        assert_eq!(summary.samples.len(), 5);
        for s in &summary.samples {
            let mut pair = [s.subject_a.as_str(), s.subject_b.as_str()];
            pair.sort();
            assert_eq!(pair, ["s0", "s1"]);
        }
        assert!(summary.min <= summary.q1 && summary.q1 <= summary.median);
        assert!(summary.median <= summary.q3 && summary.q3 <= summary.max);
    }

    #[test]
    fn sampling_is_deterministic_and_validates() {
        let subjects = subjects(4, 3_000);
        let a = pair_sampling(&subjects, 20, 1_000, 4, 42).unwrap();
        let b = pair_sampling(&subjects, 20, 1_000, 4, 42).unwrap();
        assert_eq!(a, b);

        assert_eq!(
            pair_sampling(&subjects, 20, 10_000, 4, 42),
            Err(Error::InsufficientSubjects { eligible: 0 })
        );
        assert_eq!(
            pair_sampling(&subjects[..1], 20, 1, 4, 42),
            Err(Error::InsufficientSubjects { eligible: 1 })
        );
    }

    #[test]
    fn independent_subjects_median_dependency() {
        // 2e7 IPIs at k = 2 give 5e6 blocks of 8 bits, enough to push the
        // plug-in bias under 0.01 bits
        let subjects = subjects(10, 20_000_000);
        let summary = pair_sampling(&subjects, 100, 100_000, 8, 1).unwrap();
        assert!(summary.median < 0.01, "{}", summary.median);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in prop::collection::vec(any::<bool>(), 8..400), b in prop::collection::vec(any::<bool>(), 8..400), n in 1u32..5) {
            let x: BitStream = a.into_iter().collect();
            let y: BitStream = b.into_iter().collect();
            let xy = e_indp(&x, &y, n).unwrap();
            let yx = e_indp(&y, &x, n).unwrap();
            prop_assert_eq!(xy.e_indp, yx.e_indp);
            prop_assert!(xy.e_indp >= -1e-9);
            prop_assert!(xy.e_indp <= xy.h_x.min(xy.h_y) + 1e-9);
            prop_assert!(xy.h_xy <= xy.h_x + xy.h_y + 1e-9);
        }
    }
}
