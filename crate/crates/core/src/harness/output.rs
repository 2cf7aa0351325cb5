//! Summary and transcript CSV files.
//!
//! Summary columns, in order:
//! `model,pi1,theta_alt,epsilon,s,procedure,trials,mean_fdr,se_fdr,mean_power,se_power,mfdr`.
//! Reals use 17 significant digits; `epsilon` and `s` are empty for
//! procedures that ignore them, and undefined means are written as `NaN`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::run::ResultRow;
use crate::error::{Error, Result};
use crate::procedures::StepRecord;

pub const SUMMARY_HEADER: [&str; 12] = [
    "model",
    "pi1",
    "theta_alt",
    "epsilon",
    "s",
    "procedure",
    "trials",
    "mean_fdr",
    "se_fdr",
    "mean_power",
    "se_power",
    "mfdr",
];

/// One summary CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub model: String,
    pub pi1: f64,
    pub theta_alt: f64,
    pub epsilon: Option<f64>,
    pub s: Option<f64>,
    pub procedure: String,
    pub trials: usize,
    pub mean_fdr: f64,
    pub se_fdr: f64,
    pub mean_power: f64,
    pub se_power: f64,
    pub mfdr: f64,
}

impl From<&ResultRow> for SummaryRecord {
    fn from(r: &ResultRow) -> Self {
        SummaryRecord {
            model: r.model.clone(),
            pi1: r.pi1,
            theta_alt: r.theta_alt,
            epsilon: r.epsilon,
            s: r.s,
            procedure: r.procedure.as_str().to_string(),
            trials: r.summary.trials,
            mean_fdr: r.summary.mean_fdr,
            se_fdr: r.summary.se_fdr,
            mean_power: r.summary.mean_power,
            se_power: r.summary.se_power,
            mfdr: r.summary.mfdr,
        }
    }
}

/// 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn write_summary<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.model.clone(),
            real(r.pi1),
            real(r.theta_alt),
            opt_real(r.epsilon),
            opt_real(r.s),
            r.procedure.as_str().to_string(),
            s.trials.to_string(),
            real(s.mean_fdr),
            real(s.se_fdr),
            real(s.mean_power),
            real(s.se_power),
            real(s.mfdr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    write_summary(rows, BufWriter::new(file)).map_err(|source| Error::Csv { path: path.to_path_buf(), source })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::CsvRow {
            path: path.to_path_buf(),
            row: 0,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

pub fn read_summary<R: Read>(input: R, path: &Path) -> Result<Vec<SummaryRecord>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_reader(input);
    check_header(path, reader.headers().map_err(csv_err)?, &SUMMARY_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        let bad = |message: String| Error::CsvRow { path: path.to_path_buf(), row, message };
        let f = |j: usize| {
            rec[j].parse::<f64>().map_err(|_| bad(format!("{}: cannot parse `{}`", SUMMARY_HEADER[j], &rec[j])))
        };
        let of = |j: usize| if rec[j].is_empty() { Ok(None) } else { f(j).map(Some) };
        out.push(SummaryRecord {
            model: rec[0].to_string(),
            pi1: f(1)?,
            theta_alt: f(2)?,
            epsilon: of(3)?,
            s: of(4)?,
            procedure: rec[5].to_string(),
            trials: rec[6].parse().map_err(|_| bad(format!("trials: cannot parse `{}`", &rec[6])))?,
            mean_fdr: f(7)?,
            se_fdr: f(8)?,
            mean_power: f(9)?,
            se_power: f(10)?,
            mfdr: f(11)?,
        });
    }
    Ok(out)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRecord>> {
    read_summary(open(path)?, path)
}

pub const TRANSCRIPT_HEADER: [&str; 7] =
    ["t", "lambda_t", "candidate", "alpha_t", "rejected", "noise_zt", "noise_zalpha"];

pub fn read_transcript<R: Read>(input: R, path: &Path) -> Result<Vec<StepRecord>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_reader(input);
    check_header(path, reader.headers().map_err(csv_err)?, &TRANSCRIPT_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |j: usize| Error::CsvRow {
            path: path.to_path_buf(),
            row: i + 1,
            message: format!("{}: cannot parse `{}`", TRANSCRIPT_HEADER[j], &rec[j]),
        };
        let f = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(j));
        let b = |j: usize| match &rec[j] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(j)),
        };
        out.push(StepRecord {
            t: rec[0].parse().map_err(|_| bad(0))?,
            lambda_t: f(1)?,
            candidate: b(2)?,
            alpha_t: f(3)?,
            rejected: b(4)?,
            noise_zt: f(5)?,
            noise_zalpha: f(6)?,
        });
    }
    Ok(out)
}

pub fn read_transcript_csv(path: &Path) -> Result<Vec<StepRecord>> {
    read_transcript(open(path)?, path)
}
