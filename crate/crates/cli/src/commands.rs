//! One function per subcommand. Each validates, computes everything in
//! memory, then hands the finished files to [`Outputs::write_all`].

use std::path::Path;

use serde::Serialize;

use mreipi_core::bitstream::MAX_NGRAM;
use mreipi_core::dependency::pair_sampling;
use mreipi_core::extractor;
use mreipi_core::ipi::{parse_ipi_file, synth_generate};
use mreipi_core::secrecy::EntropyReport;
use mreipi_core::sv_delta::{sv_delta, SvDeltaReport};
use mreipi_core::testkit::{
    export_raw, import_ascii, import_packed, run_battery, scatter_points, BatteryReport,
    ExportFormat,
};
use mreipi_core::{
    circular_ngram_distribution, concat_series, BitStream, Error, ExtractionResult,
    ExtractorConfig, GroupRule, IpiSeries, SynthModel,
};

use crate::output::{csv_report, json_report, Outputs};
use crate::{
    AnalyzeArgs, BatteryArgs, BitsInput, CliError, CommonArgs, ExtractArgs, Format, PairdepArgs,
    ScatterArgs, SourceArgs, SynthArgs,
};

/// Seed of the `index`-th synthetic subject.
pub fn subject_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Loads every subject named by `--input`, or generates them from `--synth`.
/// Directory entries are read in file-name order.
fn load_subjects(source: &SourceArgs, seed: u64) -> Result<Vec<IpiSeries>, CliError> {
    match (&source.input, source.synth) {
        (Some(path), _) => {
            let meta = std::fs::metadata(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let files = if meta.is_dir() {
                let mut files: Vec<_> = std::fs::read_dir(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
                    .filter_map(|entry| entry.ok().map(|e| e.path()))
                    .filter(|p| {
                        p.is_file()
                            && !p
                                .file_name()
                                .and_then(|n| n.to_str())
                                .is_some_and(|n| n.starts_with('.'))
                    })
                    .collect();
                files.sort();
                files
            } else {
                vec![path.clone()]
            };
            if files.is_empty() {
                return Err(CliError::Io(format!("{}: no IPI files", path.display())));
            }
            files
                .iter()
                .map(|f| {
                    parse_ipi_file(&read_file(f)?).map_err(|e| match e {
                        Error::MalformedHeader(_) | Error::Parse(_) => {
                            CliError::Io(format!("{}: {e}", f.display()))
                        }
                        other => CliError::Analysis(other),
                    })
                })
                .collect()
        }
        (None, Some(kind)) => {
            if source.subjects == 0 {
                return Err(CliError::Usage("--subjects must be at least 1".into()));
            }
            (0..source.subjects)
                .map(|i| {
                    let model = SynthModel {
                        kind,
                        mean: source.mean,
                        ar_coefficient: source.ar_coefficient,
                        noise_sd: source.noise_sd,
                        seed: subject_seed(seed, i),
                    };
                    synth_generate(&model, source.count).map_err(CliError::from)
                })
                .collect()
        }
        (None, None) => Err(CliError::Usage("one of --input or --synth is required".into())),
    }
}

fn wants(common: &CommonArgs, format: Format) -> bool {
    common.format.contains(&format)
}

#[derive(Serialize)]
struct NgramEntry {
    n: u32,
    total: u64,
    counts: Vec<u64>,
    #[serde(flatten)]
    measures: EntropyReport,
}

#[derive(Serialize)]
struct EntropyDataset {
    k: u32,
    bits: usize,
    ngrams: Vec<NgramEntry>,
}

#[derive(Serialize)]
struct SvDataset {
    k: u32,
    bits: usize,
    curve: Vec<SvDeltaReport>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    for &k in &args.k {
        if !(1..=8).contains(&k) {
            return Err(Error::BadK(k).into());
        }
    }
    if args.n_max == 0 || args.n_max > MAX_NGRAM {
        return Err(Error::BadWordLength(args.n_max).into());
    }
    let subjects = load_subjects(&args.source, args.common.seed)?;

    let mut entropy = Vec::new();
    let mut sv = Vec::new();
    for &k in &args.k {
        // the k-LSB dataset pools every subject in input order
        let mut pooled = BitStream::new();
        for s in &subjects {
            if !s.is_empty() {
                pooled.extend_from(&concat_series(&s.normalized(), k)?);
            }
        }
        if pooled.len() < args.n_max as usize {
            return Err(Error::TooShort {
                needed: args.n_max as usize,
                have: pooled.len(),
            }
            .into());
        }
        let mut ngrams = Vec::new();
        let mut curve = Vec::new();
        for n in 1..=args.n_max {
            let d = circular_ngram_distribution(&pooled, n)?;
            curve.push(sv_delta(&d)?);
            ngrams.push(NgramEntry {
                n,
                total: d.total,
                measures: EntropyReport::from_distribution(&d)?,
                counts: d.counts,
            });
        }
        entropy.push(EntropyDataset {
            k,
            bits: pooled.len(),
            ngrams,
        });
        sv.push(SvDataset {
            k,
            bits: pooled.len(),
            curve,
        });
    }

    let mut out = Outputs::default();
    if wants(&args.common, Format::Json) {
        out.add("entropy.json", json_report("analyze", args, &entropy)?);
        out.add("sv.json", json_report("analyze", args, &sv)?);
    }
    if wants(&args.common, Format::Csv) {
        let rows = entropy
            .iter()
            .flat_map(|d| d.ngrams.iter().map(move |e| format!("{},{}", d.k, e.measures.csv_row())));
        out.add(
            "entropy.csv",
            csv_report(
                "analyze",
                args,
                &format!("k,{}", EntropyReport::CSV_HEADER),
                rows,
            ),
        );
        let rows = sv
            .iter()
            .flat_map(|d| d.curve.iter().map(move |r| format!("{},{}", d.k, r.csv_row())));
        out.add(
            "sv.csv",
            csv_report("analyze", args, &format!("k,{}", SvDeltaReport::CSV_HEADER), rows),
        );
    }
    out.write_all(&args.common.out)
}

fn parse_group1(members: &[String]) -> Result<GroupRule, CliError> {
    let triads = members
        .iter()
        .map(|m| {
            let m = m.trim();
            if m.len() != 3 {
                return Err(CliError::Usage(format!("group-1 triad {m:?} is not 3 bits")));
            }
            u8::from_str_radix(m, 2)
                .map_err(|_| CliError::Usage(format!("group-1 triad {m:?} is not binary")))
        })
        .collect::<Result<Vec<u8>, _>>()?;
    GroupRule::from_group1(&triads).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize)]
struct SubjectYield {
    subject_id: String,
    ipis: usize,
    #[serde(flatten)]
    result: ExtractionResult,
}

#[derive(Serialize)]
struct YieldReport {
    config: ExtractorConfig,
    subjects: Vec<SubjectYield>,
    total_output_bits: u64,
    total_input_ipis: u64,
    yield_rate: f64,
}

fn extract_cmd(args: &ExtractArgs) -> Result<(BitStream, Vec<u8>), CliError> {
    let cfg = ExtractorConfig {
        k: args.k,
        group_rule: parse_group1(&args.group1)?,
        t_high: args.t_high,
        t_low: args.t_low,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let subjects = load_subjects(&args.source, args.common.seed)?;

    // each subject runs through its own extractor; outputs are joined after
    let mut output = BitStream::new();
    let mut per_subject = Vec::new();
    let mut total_ipis = 0u64;
    for s in subjects.iter().filter(|s| !s.is_empty()) {
        let result = extractor::extract(&s.normalized(), &cfg)?;
        output.extend_from(&result.output);
        total_ipis += s.len() as u64;
        per_subject.push(SubjectYield {
            subject_id: s.subject_id.clone(),
            ipis: s.len(),
            result,
        });
    }
    if per_subject.is_empty() {
        return Err(Error::Empty.into());
    }
    let report = YieldReport {
        config: cfg,
        total_output_bits: output.len() as u64,
        total_input_ipis: total_ipis,
        yield_rate: output.len() as f64 / total_ipis as f64,
        subjects: per_subject,
    };
    let json = json_report("extract", args, &report)?;
    Ok((output, json))
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let (output, yield_json) = extract_cmd(args)?;
    let mut out = Outputs::default();
    out.add("bits.bin", export_raw(&output, ExportFormat::Packed).bytes);
    out.add("bits.txt", export_raw(&output, ExportFormat::Ascii).bytes);
    out.add("yield.json", yield_json);
    out.write_all(&args.common.out)
}

/// Reads an exported bitstream. Files ending in `.txt` are ascii; anything
/// else is packed, with `--bit-len` giving the true length.
fn load_bits(input: &BitsInput) -> Result<BitStream, CliError> {
    let path = &input.input;
    let is_ascii = path.extension().and_then(|e| e.to_str()) == Some("txt");
    if is_ascii {
        let text = read_file(path)?;
        import_ascii(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    } else {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let bit_len = input.bit_len.unwrap_or(bytes.len() * 8);
        import_packed(&bytes, bit_len).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn battery(args: &BatteryArgs) -> Result<(), CliError> {
    if args.alpha.is_empty() {
        return Err(CliError::Usage("--alpha needs at least one level".into()));
    }
    for &a in &args.alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(CliError::Usage(format!("alpha {a} outside (0, 1)")));
        }
    }
    if args.seq_len < mreipi_core::testkit::battery::MIN_TEST_BITS {
        return Err(CliError::Usage(format!(
            "--seq-len {} below {}",
            args.seq_len,
            mreipi_core::testkit::battery::MIN_TEST_BITS
        )));
    }
    let bits = load_bits(&args.bits)?;
    let base = run_battery(&bits, args.seq_len, args.alpha[0])?;
    let reports: Vec<BatteryReport> = args
        .alpha
        .iter()
        .map(|&a| base.at_alpha(a))
        .collect::<Result<_, _>>()?;

    let mut out = Outputs::default();
    if wants(&args.common, Format::Json) {
        out.add("battery.json", json_report("battery", args, &reports)?);
    }
    if wants(&args.common, Format::Csv) {
        let rows = reports.iter().flat_map(|r| r.csv_rows());
        out.add(
            "battery.csv",
            csv_report("battery", args, BatteryReport::CSV_HEADER, rows),
        );
    }
    out.write_all(&args.common.out)
}

pub fn scatter(args: &ScatterArgs) -> Result<(), CliError> {
    if !(8..=32).contains(&args.word_size) {
        return Err(CliError::Usage(format!(
            "--word-size {} outside 8..=32",
            args.word_size
        )));
    }
    let bits = load_bits(&args.bits)?;
    let set = scatter_points(&bits, args.word_size)?;
    let mut out = Outputs::default();
    out.add("scatter.csv", set.to_csv());
    if args.svg {
        out.add("scatter.svg", set.to_svg());
    }
    out.write_all(&args.common.out)
}

pub fn pairdep(args: &PairdepArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if args.n == 0 || args.n > MAX_NGRAM {
        return Err(CliError::Usage(format!("--n {} outside 1..=16", args.n)));
    }
    let subjects = load_subjects(&args.source, args.common.seed)?;
    let summary = pair_sampling(
        &subjects,
        args.trials,
        args.min_length,
        args.n,
        args.common.seed,
    )?;
    let mut out = Outputs::default();
    if wants(&args.common, Format::Json) {
        out.add("pairdep.json", json_report("pairdep", args, &summary)?);
    }
    if wants(&args.common, Format::Csv) {
        let rows = summary.samples.iter().map(|s| {
            format!("{},{},{},{}", s.trial, s.subject_a, s.subject_b, s.e_indp)
        });
        out.add(
            "pairdep_trials.csv",
            csv_report("pairdep", args, "trial,subject_a,subject_b,e_indp", rows),
        );
    }
    out.write_all(&args.common.out)
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.source.input.is_some() {
        return Err(CliError::Usage("synth takes --synth, not --input".into()));
    }
    let subjects = load_subjects(&args.source, args.common.seed)?;
    let mut out = Outputs::default();
    for s in &subjects {
        out.add(format!("{}.ipi", s.subject_id), s.to_file_string());
    }
    out.write_all(&args.common.out)
}
