//! File formats: CSV with shortest round-trip floats, atomic replacement of
//! outputs, and the observation reader.

use std::fs;
use std::io::Write;
use std::path::Path;

use harvest_core::{Observation, ObservationSet};
use serde::Deserialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// Shortest string that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `path` through a temporary file in the same directory, renamed
/// into place only after `fill` succeeds.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(|e| CliError::io(path, e))?;
        buf.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// CSV file with a header row; each record is written as it is produced.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    fill: impl FnOnce(&mut csv::Writer<&mut dyn Write>) -> csv::Result<()>,
) -> Result<()> {
    write_atomic(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    })
}

#[derive(Deserialize)]
struct ObservationRow {
    t: f64,
    w: f64,
}

/// Reads `t,w` rows (days, grams) with a header.
pub fn read_observations(path: &Path) -> Result<ObservationSet> {
    if !path.exists() {
        return Err(CliError::MissingInput(format!(
            "observation file {} not found",
            path.display()
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for row in reader.deserialize::<ObservationRow>() {
        let row = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        records.push(Observation { t: row.t, w: row.w });
    }
    Ok(ObservationSet::new(records)?)
}
