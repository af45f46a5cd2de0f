//! Artifact writing. Every run leaves three files in the output
//! directory:
//!
//! - result.json: the summary, or an error object on failure
//! - data.csv: header plus rows; header only when the run failed
//! - meta.json: config echo, seed, workers, versions, wall time
//!
//! meta.json is written even when the experiment fails, so a crashed
//! directory still says what was attempted.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::Value;

pub fn write_artifacts(
    dir: &Path,
    header: &str,
    rows: &[String],
    result: &Value,
    meta: &Value,
) -> io::Result<()> {
    let mut csv = String::with_capacity(rows.len() * 32 + header.len() + 1);
    csv.push_str(header);
    csv.push('\n');
    for row in rows {
        csv.push_str(row);
        csv.push('\n');
    }
    fs::write(dir.join("meta.json"), pretty(meta))?;
    fs::write(dir.join("result.json"), pretty(result))?;
    fs::write(dir.join("data.csv"), csv)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON summaries serialize");
    s.push('\n');
    s
}
