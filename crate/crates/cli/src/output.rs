//! Report assembly and atomic file output.
//!
//! Commands render every file into memory first; nothing touches the output
//! directory until all computation has succeeded. Each file is then written
//! to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const TOOL: &str = "mreipi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files produced by one command, in write order.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| CliError::Io(format!("temp file in {}: {e}", dir.display())))?;
            tmp.write_all(bytes)
                .and_then(|_| tmp.flush())
                .and_then(|_| readable(tmp.as_file()))
                .map_err(|e| CliError::Io(format!("writing {}: {e}", target.display())))?;
            tmp.persist(&target)
                .map_err(|e| CliError::Io(format!("renaming to {}: {e}", target.display())))?;
        }
        Ok(())
    }
}

/// Temp files start owner-only; reports should read like ordinary files.
#[cfg(unix)]
fn readable(file: &std::fs::File) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    file.set_permissions(std::fs::Permissions::from_mode(0o644))
}

#[cfg(not(unix))]
fn readable(_file: &std::fs::File) -> std::io::Result<()> {
    Ok(())
}

/// Provenance block embedded in every report.
pub fn provenance<C: Serialize>(command: &str, config: &C) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config": config,
    })
}

pub fn json_report<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    report: R,
) -> Result<Vec<u8>, CliError> {
    let doc = json!({
        "provenance": provenance(command, config),
        "report": report,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV text with `#` provenance lines ahead of the column header.
pub fn csv_report<C: Serialize>(
    command: &str,
    config: &C,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Vec<u8> {
    let config = serde_json::to_string(config).unwrap_or_default();
    let mut out = format!("# tool: {TOOL} {VERSION}\n# command: {command}\n# config: {config}\n");
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out.into_bytes()
}
