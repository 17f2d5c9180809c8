//! Bit-exact export for external test suites.
//!
//! `packed`: big-endian bytes, the first stream bit is the most significant
//! bit of byte 0, and the last partial byte is zero-padded in its low bits.
//! The true bit length travels alongside the bytes. `ascii`: one `'0'` or
//! `'1'` per bit with no separators.

use serde::{Deserialize, Serialize};

use crate::bitstream::BitStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Packed,
    Ascii,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExport {
    pub bytes: Vec<u8>,
    pub bit_len: usize,
}

pub fn export_raw(bits: &BitStream, format: ExportFormat) -> RawExport {
    let bytes = match format {
        ExportFormat::Packed => bits
            .words()
            .iter()
            .flat_map(|w| w.to_be_bytes())
            .take(bits.len().div_ceil(8))
            .collect(),
        ExportFormat::Ascii => bits.to_ascii().into_bytes(),
    };
    RawExport {
        bytes,
        bit_len: bits.len(),
    }
}

/// Inverse of the packed export. Padding bits must be zero.
pub fn import_packed(bytes: &[u8], bit_len: usize) -> Result<BitStream> {
    if bytes.len() != bit_len.div_ceil(8) {
        return Err(Error::Parse(format!(
            "{} bytes cannot hold exactly {bit_len} bits",
            bytes.len()
        )));
    }
    if !bit_len.is_multiple_of(8) {
        let pad = 8 - bit_len % 8;
        if bytes[bytes.len() - 1] & ((1u8 << pad) - 1) != 0 {
            return Err(Error::Parse("non-zero padding bits".into()));
        }
    }
    let words = bytes
        .chunks(8)
        .map(|chunk| {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            u64::from_be_bytes(buf)
        })
        .collect();
    Ok(BitStream::from_words(words, bit_len))
}

/// Inverse of the ascii export; a single trailing newline is tolerated.
pub fn import_ascii(text: &str) -> Result<BitStream> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    let text = text.strip_suffix('\r').unwrap_or(text);
    BitStream::from_ascii(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packed_examples() {
        let e = export_raw(&BitStream::from_ascii("10000001").unwrap(), ExportFormat::Packed);
        assert_eq!(e.bytes, vec![0x81]);
        assert_eq!(e.bit_len, 8);

        let e = export_raw(&BitStream::from_ascii("1").unwrap(), ExportFormat::Packed);
        assert_eq!(e.bytes, vec![0x80]);
        assert_eq!(e.bit_len, 1);

        let e = export_raw(&BitStream::new(), ExportFormat::Packed);
        assert!(e.bytes.is_empty());
    }

    #[test]
    fn ascii_example() {
        let e = export_raw(&BitStream::from_ascii("0110").unwrap(), ExportFormat::Ascii);
        assert_eq!(e.bytes, b"0110");
        assert_eq!(import_ascii("0110\n").unwrap().to_ascii(), "0110");
    }

    #[test]
    fn import_rejects_bad_input() {
        assert!(import_packed(&[0x80, 0x00], 1).is_err());
        assert!(import_packed(&[0x81], 1).is_err());
        assert!(import_ascii("01a").is_err());
    }

    proptest! {
        #[test]
        fn round_trips(bits in prop::collection::vec(any::<bool>(), 0..3000)) {
            let stream: BitStream = bits.into_iter().collect();
            let packed = export_raw(&stream, ExportFormat::Packed);
            prop_assert_eq!(import_packed(&packed.bytes, packed.bit_len).unwrap(), stream.clone());
            let ascii = export_raw(&stream, ExportFormat::Ascii);
            let text = String::from_utf8(ascii.bytes).unwrap();
            prop_assert_eq!(import_ascii(&text).unwrap(), stream);
        }
    }
}
