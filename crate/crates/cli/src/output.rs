use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gradquad::branch::BranchRecord;

use crate::CliError;

pub const CSV_HEADER: &str = "lambda,sup_norm,h1_norm,lq_norm_eu,mu1,converged,monotone_iters";

/// Fixed-precision scientific notation, so reruns are byte-identical.
pub fn num(x: f64, precision: usize) -> String {
    format!("{x:.precision$e}")
}

pub fn branch_csv(records: &[BranchRecord], precision: usize) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(r.lambda, precision),
            num(r.sup_norm, precision),
            num(r.h1_norm, precision),
            num(r.lq_norm_eu, precision),
            num(r.mu1, precision),
            r.converged,
            r.monotone_iters
        );
    }
    out
}

pub fn resolve(out: &Path, configured: Option<&str>, default: &str) -> PathBuf {
    out.join(configured.unwrap_or(default))
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write(path, &text)
}
