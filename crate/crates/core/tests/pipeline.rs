use mreipi_core::extractor::{extract, optimize_grouping, triad_probabilities};
use mreipi_core::ipi::{parse_ipi_file, rr_times_to_ipi, synth_generate};
use mreipi_core::secrecy::full_report;
use mreipi_core::sv_delta::sv_curve;
use mreipi_core::testkit::{export_raw, import_packed, run_battery, scatter_points, ExportFormat};
use mreipi_core::{concat_series, ExtractorConfig, IpiSeries, SynthKind, SynthModel};

#[test]
fn timestamps_to_extractor_output() {
    // R-peaks every ~0.8 s with jitter, in seconds
    let mut t = 0.0;
    let mut stamps = vec![t];
    for i in 0..30_000u32 {
        t += 0.8 + 0.03 * ((i * 7919 % 113) as f64 / 113.0 - 0.5);
        stamps.push(t);
    }
    let rr = rr_times_to_ipi(&stamps).unwrap();
    assert_eq!(rr.dropped, 0);
    let series = IpiSeries::from_raw("rr", rr.values.iter().map(|&v| v as i64));
    let text = series.to_file_string();
    assert_eq!(parse_ipi_file(&text).unwrap(), series);

    let z = concat_series(&series.normalized(), 2).unwrap();
    assert_eq!(z.len(), 2 * 30_000);
    let entropy = full_report(&z, 8).unwrap();
    let sv = sv_curve(&z, 8).unwrap();
    assert_eq!(entropy.len(), 8);
    assert_eq!(sv.len(), 8);
    for (e, s) in entropy.iter().zip(&sv) {
        assert!(e.min_entropy_rate <= e.shannon_rate + 1e-12);
        assert!((0.0..=1.0).contains(&s.delta));
    }

    let result = extract(&series.normalized(), &ExtractorConfig::default()).unwrap();
    assert_eq!(result.input_bits, 60_000);
    let packed = export_raw(&result.output, ExportFormat::Packed);
    assert_eq!(import_packed(&packed.bytes, packed.bit_len).unwrap(), result.output);
}

#[test]
fn synthetic_source_through_battery_and_scatter() {
    let model = SynthModel::new(SynthKind::IidUniformBits, 11);
    let series = synth_generate(&model, 2_000_000).unwrap();
    let raw = concat_series(&series.normalized(), 2).unwrap();

    // tuning the grouping on a fair source keeps it balanced
    let probs = triad_probabilities(&raw).unwrap();
    let rule = optimize_grouping(&probs);
    let p1: f64 = rule.group1().iter().map(|&t| probs[t as usize]).sum();
    assert!((p1 - 0.5).abs() < 0.002);

    let out = extract(&series.normalized(), &ExtractorConfig::default()).unwrap();
    assert!((out.yield_rate - 2.0 / 3.0 / 16.0).abs() < 0.002, "{}", out.yield_rate);
    let battery = run_battery(&out.output, 10_000, 0.01).unwrap();
    assert_eq!(battery.m, out.output.len() / 10_000);
    assert!(battery.all_pass(), "{:?}", battery.csv_rows());

    let points = scatter_points(&out.output, 8).unwrap();
    // 16x16 grid, 255 degrees of freedom; 0.1% critical value about 330
    assert!(points.grid_chi_square(16) < 330.0);
}
