//! Statistical battery, scatter-plot points and raw export formats.

pub mod battery;
pub mod export;
pub mod scatter;

pub use battery::{
    block_frequency_test, cusum_test, monobit_test, run_battery, runs_test, serial_test,
    BatteryReport, CusumDirection, ProportionCheck, TestOutcome,
};
pub use export::{export_raw, import_ascii, import_packed, ExportFormat, RawExport};
pub use scatter::{scatter_points, ScatterSet};
