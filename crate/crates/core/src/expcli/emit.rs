use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expcli::run::ExperimentResult;
use crate::json::{format_real, to_string_sorted};

pub const RESULT_FILE: &str = "result.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: [&str; 5] = ["k", "mean_clean_loss", "ci_halfwidth", "trials", "seed"];

/// The result as written to `result.json`: keys sorted, reals with 17
/// significant digits.
pub fn result_json(result: &ExperimentResult) -> Result<String> {
    to_string_sorted(result)
}

/// The sweep rows as CSV, or `None` when there are none.
pub fn sweep_csv(result: &ExperimentResult) -> Result<Option<String>> {
    if result.sweep_rows.is_empty() {
        return Ok(None);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for row in &result.sweep_rows {
        w.write_record([
            row.k.to_string(),
            format_real(row.mean_clean_loss),
            format_real(row.ci_halfwidth),
            row.trials.to_string(),
            row.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(Some(String::from_utf8(bytes).expect("csv of ASCII fields")))
}

/// Write `result.json` (and `sweep.csv` when there are sweep rows) into
/// `dir`, creating it if needed. Returns the paths written.
pub fn emit(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join(RESULT_FILE);
    fs::write(&path, result_json(result)?).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    if let Some(csv) = sweep_csv(result)? {
        let path = dir.join(SWEEP_FILE);
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
