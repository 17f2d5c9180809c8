//! Martingale randomness extraction from IPI bits.
//!
//! The k-LSB stream is cut into consecutive 3-bit triads. Each triad moves
//! a walk one step up (triad in group 1) or down (group 2); the two groups
//! carry roughly equal probability, so the walk is a martingale. When the
//! walk rises above `t_high` a `1` is emitted, when it falls below `t_low`
//! a `0` is emitted, and the walk restarts at zero.

use serde::{Deserialize, Serialize};

use crate::bitstream::BitStream;
use crate::error::{Error, Result};
use crate::ipi::NormalizedIpi;

/// Partition of the eight 3-bit triads into two groups of four.
///
/// Bit `s` of the mask is set when triad `s` belongs to group 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupRule {
    g1_mask: u8,
}

impl GroupRule {
    /// `G1 = {000, 011, 101, 110}`, the even-parity triads.
    pub const PARITY: GroupRule = GroupRule {
        g1_mask: (1 << 0b000) | (1 << 0b011) | (1 << 0b101) | (1 << 0b110),
    };

    pub fn from_mask(g1_mask: u8) -> Result<Self> {
        if g1_mask.count_ones() != 4 {
            return Err(Error::Config(format!(
                "group 1 must hold exactly 4 triads, mask {g1_mask:#010b} has {}",
                g1_mask.count_ones()
            )));
        }
        Ok(Self { g1_mask })
    }

    /// Builds a rule from the group-1 member triads.
    pub fn from_group1(members: &[u8]) -> Result<Self> {
        let mut mask = 0u8;
        for &s in members {
            if s > 7 {
                return Err(Error::Config(format!("triad {s} is not 3 bits")));
            }
            if mask & (1 << s) != 0 {
                return Err(Error::Config(format!("triad {s:03b} listed twice")));
            }
            mask |= 1 << s;
        }
        Self::from_mask(mask)
    }

    pub fn mask(&self) -> u8 {
        self.g1_mask
    }

    #[inline]
    pub fn in_group1(&self, triad: u8) -> bool {
        (self.g1_mask >> (triad & 7)) & 1 == 1
    }

    pub fn group1(&self) -> Vec<u8> {
        (0..8).filter(|&s| self.in_group1(s)).collect()
    }

    pub fn group2(&self) -> Vec<u8> {
        (0..8).filter(|&s| !self.in_group1(s)).collect()
    }
}

impl Default for GroupRule {
    fn default() -> Self {
        Self::PARITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    /// Bits taken from each normalized IPI.
    pub k: u32,
    pub group_rule: GroupRule,
    pub t_high: i32,
    pub t_low: i32,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            k: 2,
            group_rule: GroupRule::PARITY,
            t_high: 3,
            t_low: -3,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.k) {
            return Err(Error::BadK(self.k));
        }
        if self.t_high <= 0 {
            return Err(Error::Config(format!("t_high {} must be positive", self.t_high)));
        }
        if self.t_low >= 0 {
            return Err(Error::Config(format!("t_low {} must be negative", self.t_low)));
        }
        GroupRule::from_mask(self.group_rule.g1_mask).map(|_| ())
    }
}

/// Walk position and counters of a running extraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MartingaleState {
    pub x: i32,
    pub triads_consumed: u64,
    pub bits_emitted: u64,
}

/// `+1` for group-1 triads, `-1` otherwise.
#[inline]
pub fn classify_triad(triad: u8, cfg: &ExtractorConfig) -> i32 {
    if cfg.group_rule.in_group1(triad) {
        1
    } else {
        -1
    }
}

/// Advances the walk by one triad, returning the new state and the bit
/// emitted, if any.
#[inline]
pub fn mre_step(
    state: MartingaleState,
    triad: u8,
    cfg: &ExtractorConfig,
) -> (MartingaleState, Option<bool>) {
    let mut next = state;
    next.x += classify_triad(triad, cfg);
    next.triads_consumed += 1;
    let emitted = if next.x > cfg.t_high {
        Some(true)
    } else if next.x < cfg.t_low {
        Some(false)
    } else {
        None
    };
    if emitted.is_some() {
        next.x = 0;
        next.bits_emitted += 1;
    }
    (next, emitted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    #[serde(skip)]
    pub output: BitStream,
    pub output_bits: u64,
    pub input_bits: u64,
    pub input_triads: u64,
    pub final_x: i32,
    /// Output bits per input IPI.
    pub yield_rate: f64,
}

/// Incremental extractor. Bits may be delivered in arbitrary chunks; a
/// partial triad is held until the next chunk completes it.
#[derive(Debug, Clone)]
pub struct StreamExtractor {
    cfg: ExtractorConfig,
    state: MartingaleState,
    pending: u8,
    pending_len: u8,
    input_bits: u64,
    output: BitStream,
}

impl StreamExtractor {
    pub fn new(cfg: ExtractorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: MartingaleState::default(),
            pending: 0,
            pending_len: 0,
            input_bits: 0,
            output: BitStream::new(),
        })
    }

    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        self.input_bits += 1;
        self.pending = (self.pending << 1) | bit as u8;
        self.pending_len += 1;
        if self.pending_len == 3 {
            let (state, emitted) = mre_step(self.state, self.pending, &self.cfg);
            self.state = state;
            if let Some(bit) = emitted {
                self.output.push(bit);
            }
            self.pending = 0;
            self.pending_len = 0;
        }
    }

    pub fn push_bits(&mut self, chunk: &BitStream) {
        for bit in chunk {
            self.push_bit(bit);
        }
    }

    /// Feeds the configured `k` low bits of one IPI.
    pub fn push_ipi(&mut self, ipi: NormalizedIpi) {
        let word = ipi.k_lsb(self.cfg.k).expect("k validated at construction");
        for shift in (0..self.cfg.k).rev() {
            self.push_bit((word >> shift) & 1 == 1);
        }
    }

    pub fn state(&self) -> MartingaleState {
        self.state
    }

    pub fn output(&self) -> &BitStream {
        &self.output
    }

    /// Ends the stream; a trailing partial triad is discarded.
    pub fn finish(self) -> ExtractionResult {
        let ipis = self.input_bits as f64 / self.cfg.k as f64;
        ExtractionResult {
            output_bits: self.output.len() as u64,
            input_bits: self.input_bits,
            input_triads: self.state.triads_consumed,
            final_x: self.state.x,
            yield_rate: if ipis > 0.0 {
                self.state.bits_emitted as f64 / ipis
            } else {
                0.0
            },
            output: self.output,
        }
    }
}

/// Runs the extractor over a raw bit stream.
pub fn extract_bits(bits: &BitStream, cfg: &ExtractorConfig) -> Result<ExtractionResult> {
    let mut extractor = StreamExtractor::new(*cfg)?;
    extractor.push_bits(bits);
    Ok(extractor.finish())
}

/// Runs the extractor over the k-LSB stream of one subject's series.
pub fn extract(series: &[NormalizedIpi], cfg: &ExtractorConfig) -> Result<ExtractionResult> {
    if series.is_empty() {
        return Err(Error::Empty);
    }
    let mut extractor = StreamExtractor::new(*cfg)?;
    for &ipi in series {
        extractor.push_ipi(ipi);
    }
    Ok(extractor.finish())
}

/// Relative frequency of each triad under plain non-overlapping chunking.
pub fn triad_probabilities(bits: &BitStream) -> Result<[f64; 8]> {
    let triads = bits.len() / 3;
    if triads == 0 {
        return Err(Error::TooShort {
            needed: 3,
            have: bits.len(),
        });
    }
    let mut counts = [0u64; 8];
    for t in 0..triads {
        counts[bits.read_word(3 * t, 3) as usize] += 1;
    }
    Ok(counts.map(|c| c as f64 / triads as f64))
}

/// The 4/4 split whose group-1 probability is closest to one half. All 70
/// candidate splits are tried; ties go to the smallest mask.
pub fn optimize_grouping(probabilities: &[f64; 8]) -> GroupRule {
    let mut best = (f64::INFINITY, 0u8);
    for mask in 0u8..=255 {
        if mask.count_ones() != 4 {
            continue;
        }
        let p: f64 = (0..8)
            .filter(|&s| (mask >> s) & 1 == 1)
            .map(|s| probabilities[s])
            .sum();
        let gap = (p - 0.5).abs();
        if gap < best.0 {
            best = (gap, mask);
        }
    }
    GroupRule { g1_mask: best.1 }
}

/// Gray-code comparator: the `k` low bits of `v ^ (v >> 1)` per IPI.
pub fn gray_code_baseline(series: &[NormalizedIpi], k: u32) -> Result<BitStream> {
    if series.is_empty() {
        return Err(Error::Empty);
    }
    if !(1..=8).contains(&k) {
        return Err(Error::BadK(k));
    }
    let mask = (1u16 << k) - 1;
    let mut out = BitStream::with_capacity(series.len() * k as usize);
    for ipi in series {
        let v = ipi.value();
        out.push_word(((v ^ (v >> 1)) & mask) as u64, k);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitStream {
        BitStream::from_ascii(s).unwrap()
    }

    fn cfg() -> ExtractorConfig {
        ExtractorConfig::default()
    }

    fn random_triads(seed: u64, count: usize) -> BitStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = BitStream::with_capacity(3 * count);
        for _ in 0..count {
            out.push_word(rng.gen_range(0..8), 3);
        }
        out
    }

    #[test]
    fn classify_examples() {
        let c = cfg();
        assert_eq!(classify_triad(0b000, &c), 1);
        assert_eq!(classify_triad(0b111, &c), -1);
        assert_eq!(classify_triad(0b011, &c), 1);
        for s in 0u8..8 {
            let parity = s.count_ones() % 2;
            assert_eq!(classify_triad(s, &c) == 1, parity == 0, "triad {s:03b}");
        }
        assert_eq!(c.group_rule.group1(), vec![0b000, 0b011, 0b101, 0b110]);
        assert_eq!(c.group_rule.group2(), vec![0b001, 0b010, 0b100, 0b111]);
    }

    #[test]
    fn step_examples() {
        let c = cfg();
        let (s, out) = mre_step(MartingaleState { x: 3, ..Default::default() }, 0b000, &c);
        assert_eq!((s.x, out, s.bits_emitted), (0, Some(true), 1));

        let (s, out) = mre_step(MartingaleState { x: -3, ..Default::default() }, 0b111, &c);
        assert_eq!((s.x, out), (0, Some(false)));

        let (s, out) = mre_step(MartingaleState::default(), 0b001, &c);
        assert_eq!((s.x, out, s.triads_consumed), (-1, None, 1));
    }

    #[test]
    fn extract_examples() {
        let r = extract_bits(&bits("000000000000"), &cfg()).unwrap();
        assert_eq!(r.output.to_ascii(), "1");
        assert_eq!(r.final_x, 0);
        assert_eq!(r.input_triads, 4);

        let r = extract_bits(&bits("000100110010"), &cfg()).unwrap();
        assert!(r.output.is_empty());
        assert_eq!(r.final_x, 0);

        // trailing partial triad is dropped
        let r = extract_bits(&bits("00000000000011"), &cfg()).unwrap();
        assert_eq!((r.input_triads, r.input_bits), (4, 14));
    }

    #[test]
    fn extract_from_series() {
        let series: Vec<NormalizedIpi> = [140u16, 105, 112, 151, 128, 110]
            .iter()
            .map(|&v| NormalizedIpi::from_value(v).unwrap())
            .collect();
        let r = extract(&series, &cfg()).unwrap();
        assert!(r.output.is_empty());
        assert_eq!(r.input_triads, 4);
        assert_eq!(extract(&[], &cfg()), Err(Error::Empty));

        let zeros = vec![NormalizedIpi::from_value(0).unwrap(); 6];
        let r = extract(&zeros, &cfg()).unwrap();
        assert_eq!(r.output.to_ascii(), "1");
        assert_eq!(r.yield_rate, 1.0 / 6.0);
    }

    #[test]
    fn mean_hitting_time_is_sixteen() {
        let stream = random_triads(17, 1_000_000);
        let r = extract_bits(&stream, &cfg()).unwrap();
        let mean = r.input_triads as f64 / r.output_bits as f64;
        assert!((mean - 16.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn mean_step_is_zero() {
        let stream = random_triads(23, 1_000_000);
        let c = cfg();
        let total: i64 = (0..1_000_000)
            .map(|t| classify_triad(stream.read_word(3 * t, 3) as u8, &c) as i64)
            .sum();
        let mean = total as f64 / 1e6;
        assert!(mean.abs() < 4.0 / 1e3, "{mean}");
    }

    #[test]
    fn chunked_stream_matches_one_shot() {
        let full = bits("000000000000");
        let mut s = StreamExtractor::new(cfg()).unwrap();
        s.push_bits(&bits("00010"));
        let before = s.state();
        s.push_bits(&BitStream::new());
        assert_eq!(s.state(), before);
        s.push_bits(&bits("0110010"));
        // both halves together are the 12-bit input "000100110010"
        let chunked = s.finish();
        let one_shot = extract_bits(&bits("000100110010"), &cfg()).unwrap();
        assert_eq!(chunked, one_shot);
        assert_eq!(extract_bits(&full, &cfg()).unwrap().output.to_ascii(), "1");

        let big = random_triads(5, 1_000_000);
        let one_shot = extract_bits(&big, &cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut s = StreamExtractor::new(cfg()).unwrap();
        let mut pos = 0;
        while pos < big.len() {
            let len = rng.gen_range(0..5000).min(big.len() - pos);
            s.push_bits(&big.slice(pos, len));
            pos += len;
        }
        assert_eq!(s.finish(), one_shot);
    }

    fn run_chunked(z: &BitStream, cuts: u32) -> ExtractionResult {
        // bit i of `cuts` set => a chunk boundary after position i + 1
        let mut s = StreamExtractor::new(cfg()).unwrap();
        let mut start = 0;
        for pos in 1..=z.len() {
            if pos == z.len() || (cuts >> (pos - 1)) & 1 == 1 {
                s.push_bits(&z.slice(start, pos - start));
                start = pos;
            }
        }
        s.finish()
    }

    #[test]
    fn exhaustive_chunkings_of_short_streams() {
        for len in 1..=10usize {
            for value in 0u64..(1 << len) {
                let mut z = BitStream::new();
                z.push_word(value, len as u32);
                let expected = extract_bits(&z, &cfg()).unwrap();
                for cuts in 0u32..(1 << (len - 1)) {
                    assert_eq!(run_chunked(&z, cuts), expected);
                }
            }
        }
    }

    #[test]
    fn every_chunking_of_a_24_bit_stream() {
        let z = bits("000000000000111000111111");
        let expected = extract_bits(&z, &cfg()).unwrap();
        assert_eq!(expected.output.to_ascii(), "1");
        for cuts in 0u32..(1 << 23) {
            assert_eq!(run_chunked(&z, cuts), expected);
        }
    }

    #[test]
    fn complement_negates_the_walk() {
        let z = random_triads(8, 20_000);
        let a = extract_bits(&z, &cfg()).unwrap();
        let b = extract_bits(&z.complement(), &cfg()).unwrap();
        assert_eq!(b.output, a.output.complement());
        assert_eq!(b.final_x, -a.final_x);
    }

    #[test]
    fn config_validation() {
        let bad = ExtractorConfig { t_high: 0, ..cfg() };
        assert!(StreamExtractor::new(bad).is_err());
        let bad = ExtractorConfig { t_low: 1, ..cfg() };
        assert!(StreamExtractor::new(bad).is_err());
        let bad = ExtractorConfig { k: 9, ..cfg() };
        assert_eq!(StreamExtractor::new(bad).err(), Some(Error::BadK(9)));
        assert!(GroupRule::from_mask(0b0000_0111).is_err());
        assert!(GroupRule::from_group1(&[0, 3, 5, 5]).is_err());
        assert_eq!(
            GroupRule::from_group1(&[0b000, 0b011, 0b101, 0b110]).unwrap(),
            GroupRule::PARITY
        );
    }

    #[test]
    fn grouping_from_triad_table() {
        let table = [
            0.133567088,
            0.122682815,
            0.130448785,
            0.119522821,
            0.122658224,
            0.127181921,
            0.119505945,
            0.1244324,
        ];
        let g1: f64 = GroupRule::PARITY.group1().iter().map(|&s| table[s as usize]).sum();
        assert!((g1 - 0.499777776).abs() < 1e-8);
        // the exhaustive search finds a split slightly closer to one half
        let best = optimize_grouping(&table);
        assert_eq!(best.group1(), vec![0b000, 0b100, 0b110, 0b111]);
        let p: f64 = best.group1().iter().map(|&s| table[s as usize]).sum();
        assert!((p - 0.5).abs() < (g1 - 0.5).abs());

        let z = random_triads(3, 30_000);
        let probs = triad_probabilities(&z).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(triad_probabilities(&bits("01")).is_err());
    }

    #[test]
    fn gray_code_examples() {
        let v = |x| NormalizedIpi::from_value(x).unwrap();
        assert_eq!(gray_code_baseline(&[v(140)], 4).unwrap().to_ascii(), "1010");
        assert_eq!(gray_code_baseline(&[v(140)], 8).unwrap().to_ascii(), "11001010");
        assert_eq!(gray_code_baseline(&[v(0)], 5).unwrap().to_ascii(), "00000");
        assert_eq!(gray_code_baseline(&[v(1)], 2).unwrap().to_ascii(), "01");
        assert_eq!(gray_code_baseline(&[v(1)], 0), Err(Error::BadK(0)));
        assert_eq!(gray_code_baseline(&[], 2), Err(Error::Empty));
    }

    proptest! {
        #[test]
        fn walk_stays_between_thresholds(raw in prop::collection::vec(0u8..8, 0..500)) {
            let c = cfg();
            let mut state = MartingaleState::default();
            for t in raw {
                state = mre_step(state, t, &c).0;
                prop_assert!(state.x >= c.t_low && state.x <= c.t_high);
            }
        }
    }
}
