//! Run-log CSV encoding and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::env::RunLog;
use crate::error::{DrroError, Result};

/// Column order of every run-log CSV.
pub const RUNLOG_COLUMNS: [&str; 9] =
    ["step", "method", "seed", "kl_seq", "proxy_raw", "gold_raw", "proxy_improvement", "gold_improvement", "budget"];

/// 17 significant digits, which round-trips every finite `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn runlog_csv(logs: &[RunLog]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUNLOG_COLUMNS)?;
    for l in logs {
        w.write_record([
            l.step.to_string(),
            l.method.clone(),
            l.seed.to_string(),
            format_float(l.kl_seq),
            format_float(l.proxy_raw),
            format_float(l.gold_raw),
            format_float(l.proxy_improvement),
            format_float(l.gold_improvement),
            format_float(l.budget),
        ])?;
    }
    w.into_inner().map_err(|e| DrroError::Io(e.to_string()))
}

/// Parses a run-log CSV, rejecting any header other than [`RUNLOG_COLUMNS`].
pub fn parse_runlog_csv(bytes: &[u8]) -> Result<Vec<RunLog>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RUNLOG_COLUMNS {
        return Err(DrroError::Config(format!(
            "run-log header mismatch: expected {}, got {}",
            RUNLOG_COLUMNS.join(","),
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(DrroError::from)).collect()
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().ok_or_else(|| DrroError::Io(format!("not a file path: {}", path.display())))?;
    let mut tmp = PathBuf::from(path);
    tmp.set_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
