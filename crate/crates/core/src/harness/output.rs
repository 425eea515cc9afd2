//! CSV records, summary statistics and CDF point files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::Algorithm;
use super::run::TrialRecord;
use crate::error::Result;
use crate::metrics::{cdf, mean, percentile};

pub const CSV_HEADER: &str = "trial,seed,algorithm,min_se,sum_se,runtime_ms,elim_iters,bisect_iters,max_rank_final,status";

pub fn write_records<W: Write>(out: &mut W, records: &[TrialRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{:.3},{},{},{},{}",
            r.trial,
            r.seed,
            r.algorithm,
            r.min_se,
            r.sum_se,
            r.runtime_ms,
            r.elim_iters,
            r.bisect_iters,
            r.max_rank_final,
            r.status.name()
        )?;
    }
    Ok(())
}

/// Statistics over the successful records of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub records: usize,
    pub ok: usize,
    pub mean_min_se: f64,
    pub p10_min_se: f64,
    pub p50_min_se: f64,
    pub p90_min_se: f64,
    pub mean_sum_se: f64,
    pub mean_runtime_ms: f64,
}

fn ok_min_se(records: &[TrialRecord], alg: Algorithm) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.algorithm == alg && !r.status.is_fatal())
        .map(|r| r.min_se)
        .collect()
}

impl Summary {
    pub fn from_records(algorithms: &[Algorithm], records: &[TrialRecord]) -> Vec<Summary> {
        algorithms
            .iter()
            .map(|&alg| {
                let all: Vec<&TrialRecord> = records.iter().filter(|r| r.algorithm == alg).collect();
                let ok: Vec<&TrialRecord> = all.iter().copied().filter(|r| !r.status.is_fatal()).collect();
                let min_se = ok_min_se(records, alg);
                let sum_se: Vec<f64> = ok.iter().map(|r| r.sum_se).collect();
                let rt: Vec<f64> = ok.iter().map(|r| r.runtime_ms).collect();
                let or_nan = |v: Result<f64>| v.unwrap_or(f64::NAN);
                Summary {
                    algorithm: alg,
                    records: all.len(),
                    ok: ok.len(),
                    mean_min_se: or_nan(mean(&min_se)),
                    p10_min_se: or_nan(percentile(&min_se, 10.0)),
                    p50_min_se: or_nan(percentile(&min_se, 50.0)),
                    p90_min_se: or_nan(percentile(&min_se, 90.0)),
                    mean_sum_se: or_nan(mean(&sum_se)),
                    mean_runtime_ms: or_nan(mean(&rt)),
                }
            })
            .collect()
    }
}

pub fn write_summary<W: Write>(out: &mut W, summary: &[Summary]) -> Result<()> {
    writeln!(
        out,
        "algorithm,records,ok,mean_min_se,p10_min_se,p50_min_se,p90_min_se,mean_sum_se,mean_runtime_ms"
    )?;
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            s.algorithm,
            s.records,
            s.ok,
            s.mean_min_se,
            s.p10_min_se,
            s.p50_min_se,
            s.p90_min_se,
            s.mean_sum_se,
            s.mean_runtime_ms
        )?;
    }
    Ok(())
}

pub fn cdf_path(dir: &Path, alg: Algorithm) -> PathBuf {
    dir.join(format!("cdf_{}.txt", alg.name()))
}

/// Two-column `min_se probability` files, one per algorithm with at least
/// one successful record; others are skipped with a warning.
pub fn emit_plotdata(dir: &Path, algorithms: &[Algorithm], records: &[TrialRecord]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for &alg in algorithms {
        let samples = ok_min_se(records, alg);
        let Ok(points) = cdf(&samples) else {
            log::warn!("no successful records for {alg}; CDF skipped");
            continue;
        };
        let path = cdf_path(dir, alg);
        let mut f = BufWriter::new(File::create(&path)?);
        for (x, p) in points {
            writeln!(f, "{x} {p}")?;
        }
        f.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a CDF file back as `(value, probability)` pairs.
pub fn read_cdf(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(p))) => Ok((x, p)),
                _ => Err(crate::error::Error::Domain(format!("malformed CDF line `{l}`"))),
            }
        })
        .collect()
}
