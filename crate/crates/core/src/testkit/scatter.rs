//! Lag-1 scatter points in the unit square.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bitstream::BitStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSet {
    pub word_size: u32,
    pub points: Vec<(f64, f64)>,
}

/// Cuts the stream into consecutive `word_size`-bit words `w_i`, maps each
/// to `u_i = w_i / 2^word_size` and pairs successive values
/// `(u_i, u_{i+1})`.
pub fn scatter_points(bits: &BitStream, word_size: u32) -> Result<ScatterSet> {
    if !(8..=32).contains(&word_size) {
        return Err(Error::Config(format!("word size {word_size} outside 8..=32")));
    }
    let needed = 2 * word_size as usize;
    if bits.len() < needed {
        return Err(Error::TooShort {
            needed,
            have: bits.len(),
        });
    }
    let scale = (word_size as f64).exp2();
    let values: Vec<f64> = (0..bits.len() / word_size as usize)
        .map(|i| bits.read_word(i * word_size as usize, word_size) as f64 / scale)
        .collect();
    let points = values.windows(2).map(|w| (w[0], w[1])).collect();
    Ok(ScatterSet { word_size, points })
}

impl ScatterSet {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v\n");
        for (u, v) in &self.points {
            let _ = writeln!(out, "{u},{v}");
        }
        out
    }

    /// Points only, drawn in a 512-pixel unit square.
    pub fn to_svg(&self) -> String {
        const SIZE: f64 = 512.0;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        for (u, v) in &self.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="0.8"/>"#,
                u * SIZE,
                (1.0 - v) * SIZE
            );
        }
        out.push_str("</svg>\n");
        out
    }

    /// Pearson chi-square statistic of point counts over a `cells x cells`
    /// grid against a uniform expectation.
    pub fn grid_chi_square(&self, cells: usize) -> f64 {
        let mut counts = vec![0u64; cells * cells];
        for (u, v) in &self.points {
            let i = ((u * cells as f64) as usize).min(cells - 1);
            let j = ((v * cells as f64) as usize).min(cells - 1);
            counts[i * cells + j] += 1;
        }
        let expected = self.points.len() as f64 / (cells * cells) as f64;
        counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = scatter_points(&BitStream::zeros(16), 8).unwrap();
        assert_eq!(s.points, vec![(0.0, 0.0)]);

        let mut bits = BitStream::new();
        for w in [64u64, 192, 128] {
            bits.push_word(w, 8);
        }
        let s = scatter_points(&bits, 8).unwrap();
        assert_eq!(s.points, vec![(0.25, 0.75), (0.75, 0.5)]);
        assert_eq!(s.to_csv(), "u,v\n0.25,0.75\n0.75,0.5\n");
        assert!(s.to_svg().starts_with("<svg"));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            scatter_points(&BitStream::zeros(15), 8),
            Err(Error::TooShort { needed: 16, have: 15 })
        ));
        assert!(scatter_points(&BitStream::zeros(100), 7).is_err());
        assert!(scatter_points(&BitStream::zeros(100), 33).is_err());
    }

    #[test]
    fn coordinates_in_unit_interval() {
        let ones: BitStream = std::iter::repeat_n(true, 32 * 5).collect();
        let s = scatter_points(&ones, 32).unwrap();
        assert!(s.points.iter().all(|&(u, v)| u < 1.0 && v < 1.0));
    }
}
