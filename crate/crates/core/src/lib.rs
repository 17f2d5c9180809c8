//! Randomness analysis of heartbeat interpulse intervals (IPIs) and the
//! MRE-IPI martingale randomness extractor.
//!
//! The pipeline runs from raw IPI integers to bitstreams ([`ipi`],
//! [`bitstream`]), through the source-quality measures ([`secrecy`],
//! [`sv_delta`], [`dependency`]), into the extractor ([`extractor`]) and
//! the statistical battery and export formats ([`testkit`]).

pub mod bitstream;
pub mod dependency;
pub mod error;
pub mod extractor;
pub mod ipi;
pub mod secrecy;
pub mod sv_delta;
pub mod testkit;

pub use bitstream::{circular_ngram_distribution, concat_series, BitStream, NgramDistribution};
pub use error::{Error, Result};
pub use extractor::{ExtractionResult, ExtractorConfig, GroupRule, StreamExtractor};
pub use ipi::{IpiSeries, NormalizedIpi, SynthKind, SynthModel};
