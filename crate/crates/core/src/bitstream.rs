//! Packed bit sequences and the circular n-gram distribution.
//!
//! Bits are stored most-significant-first inside 64-bit words, so bit 0 of
//! the stream is the top bit of word 0. That layout makes big-endian byte
//! export a straight copy of the word bytes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipi::NormalizedIpi;

const WORD_BITS: usize = 64;

/// Largest n-gram length supported by [`circular_ngram_distribution`].
pub const MAX_NGRAM: u32 = 16;

/// An ordered, immutable-by-convention sequence of bits.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(WORD_BITS)),
            len: 0,
        }
    }

    /// A stream of `len` zero bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let offset = self.len % WORD_BITS;
        if offset == 0 {
            self.words.push(0);
        }
        if bit {
            let last = self.words.len() - 1;
            self.words[last] |= 1u64 << (WORD_BITS - 1 - offset);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_word(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for shift in (0..width).rev() {
            self.push((value >> shift) & 1 == 1);
        }
    }

    /// Returns bit `index`. Panics when out of range.
    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.bit_unchecked(index)
    }

    #[inline]
    fn bit_unchecked(&self, index: usize) -> bool {
        (self.words[index / WORD_BITS] >> (WORD_BITS - 1 - index % WORD_BITS)) & 1 == 1
    }

    /// Reads `width` (at most 64) bits starting at `start` as an unsigned
    /// integer, first bit most significant.
    pub fn read_word(&self, start: usize, width: u32) -> u64 {
        assert!(width <= 64);
        assert!(start + width as usize <= self.len);
        if width == 0 {
            return 0;
        }
        let word = start / WORD_BITS;
        let offset = start % WORD_BITS;
        let mut aligned = self.words[word] << offset;
        if offset + width as usize > WORD_BITS {
            aligned |= self.words[word + 1] >> (WORD_BITS - offset);
        }
        aligned >> (WORD_BITS - width as usize)
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            stream: self,
            pos: 0,
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bitwise complement of every bit.
    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(self.len);
        }
        Self {
            words,
            len: self.len,
        }
    }

    /// Copy of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len);
        (start..start + len).map(|i| self.bit_unchecked(i)).collect()
    }

    /// Copy of the first `len` bits.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len);
        let mut words = self.words[..len.div_ceil(WORD_BITS)].to_vec();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { words, len }
    }

    /// Cyclic left rotation by `by` positions.
    pub fn rotate_left(&self, by: usize) -> Self {
        if self.len == 0 {
            return self.clone();
        }
        let by = by % self.len;
        (0..self.len)
            .map(|i| self.bit_unchecked((i + by) % self.len))
            .collect()
    }

    /// Appends every bit of `other`.
    pub fn extend_from(&mut self, other: &BitStream) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.truncate(self.len / WORD_BITS);
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for bit in other.iter() {
            self.push(bit);
        }
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn from_ascii(text: &str) -> Result<Self> {
        text.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "unexpected character {other:?} at position {i}"
                ))),
            })
            .collect()
    }

    pub fn to_ascii(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Backing words, most-significant-first; bits past `len` are zero.
    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn from_words(words: Vec<u64>, len: usize) -> Self {
        debug_assert!(words.len() == len.div_ceil(WORD_BITS));
        let mut stream = Self { words, len };
        if let Some(last) = stream.words.last_mut() {
            *last &= tail_mask(len);
        }
        stream
    }
}

fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        used => !(u64::MAX >> used),
    }
}

impl fmt::Debug for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitStream({})", self.to_ascii())
        } else {
            write!(f, "BitStream(len={})", self.len)
        }
    }
}

impl fmt::Display for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ascii())
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut stream = BitStream::with_capacity(iter.size_hint().0);
        for bit in iter {
            stream.push(bit);
        }
        stream
    }
}

impl Extend<bool> for BitStream {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        for bit in iter {
            self.push(bit);
        }
    }
}

pub struct Iter<'a> {
    stream: &'a BitStream,
    pos: usize,
}

impl Iterator for Iter<'_> {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        if self.pos >= self.stream.len {
            return None;
        }
        let bit = self.stream.bit_unchecked(self.pos);
        self.pos += 1;
        Some(bit)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.stream.len - self.pos;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Iter<'_> {}

impl<'a> IntoIterator for &'a BitStream {
    type Item = bool;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

/// Concatenates the `k` least significant bits of every normalized IPI,
/// most significant of the `k` first.
pub fn concat_series(series: &[NormalizedIpi], k: u32) -> Result<BitStream> {
    if series.is_empty() {
        return Err(Error::Empty);
    }
    let mut stream = BitStream::with_capacity(series.len() * k as usize);
    for ipi in series {
        stream.push_word(ipi.k_lsb(k)? as u64, k);
    }
    Ok(stream)
}

/// Counts of every `n`-bit pattern in a stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramDistribution {
    pub n: u32,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl NgramDistribution {
    /// Builds a distribution from raw counts; `counts.len()` must be `2^n`.
    pub fn from_counts(n: u32, counts: Vec<u64>) -> Result<Self> {
        if n == 0 || n > MAX_NGRAM {
            return Err(Error::BadWordLength(n));
        }
        if counts.len() != 1usize << n {
            return Err(Error::InvalidDistribution(format!(
                "expected {} counts for n = {n}, got {}",
                1usize << n,
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(Self { n, counts, total })
    }

    /// Empirical probability of every pattern, indexed by pattern value.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let total = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / total).collect())
    }

    /// Number of patterns that never occurred.
    pub fn unseen(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Circulation-method n-gram counts.
///
/// The stream is first truncated to `L' = n * floor(len / n)`. For every
/// offset `o` in `0..n` it is parsed into `L' / n` consecutive
/// non-overlapping blocks starting at `o`, wrapping from the end of the
/// truncated stream back to its first bit. Counts from all `n` parses are
/// summed, so `total == L'`.
///
/// The block start positions `o + j*n` over all offsets and blocks cover
/// every position of the truncated stream exactly once, so the counts are
/// gathered in a single cyclic rolling pass.
pub fn circular_ngram_distribution(z: &BitStream, n: u32) -> Result<NgramDistribution> {
    if n == 0 || n > MAX_NGRAM {
        return Err(Error::BadWordLength(n));
    }
    let width = n as usize;
    if z.len() < width {
        return Err(Error::TooShort {
            needed: width,
            have: z.len(),
        });
    }
    let truncated = width * (z.len() / width);
    let mask = (1u64 << n) - 1;
    let mut counts = vec![0u64; 1usize << n];

    let mut window = if n > 1 { z.read_word(0, n - 1) } else { 0 };
    let wrapped = z
        .iter()
        .take(truncated)
        .skip(width - 1)
        .chain(z.iter().take(width - 1));
    for bit in wrapped {
        window = ((window << 1) | bit as u64) & mask;
        counts[window as usize] += 1;
    }

    Ok(NgramDistribution {
        n,
        counts,
        total: truncated as u64,
    })
}
