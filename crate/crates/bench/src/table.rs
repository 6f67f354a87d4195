//! CSV form of sweep results.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! finite `f64`. Rows that failed carry `error:<message>` in the branch
//! column and `NaN` in the numeric ones.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ehrelay::{PolicyKind, SolveReport};

use crate::sweep::Axis;
use crate::{BenchError, Result};

pub const CSV_HEADER: [&str; 7] = [
    "axis",
    "axis_value",
    "policy",
    "throughput",
    "branch",
    "alpha",
    "feasible",
];

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: Axis,
    pub axis_value: f64,
    pub policy: PolicyKind,
    pub throughput: f64,
    pub branch: String,
    pub alpha: f64,
    pub feasible: bool,
}

fn same_float(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl PartialEq for SweepRow {
    fn eq(&self, other: &Self) -> bool {
        self.axis == other.axis
            && same_float(self.axis_value, other.axis_value)
            && self.policy == other.policy
            && same_float(self.throughput, other.throughput)
            && self.branch == other.branch
            && same_float(self.alpha, other.alpha)
            && self.feasible == other.feasible
    }
}

impl SweepRow {
    pub fn from_report(
        axis: Axis,
        axis_value: f64,
        policy: PolicyKind,
        report: &SolveReport,
    ) -> Self {
        SweepRow {
            axis,
            axis_value,
            policy,
            throughput: report.throughput,
            branch: report.branch.to_string(),
            alpha: report.allocation.alpha,
            feasible: report.is_feasible(),
        }
    }

    pub fn failed(axis: Axis, axis_value: f64, policy: PolicyKind, message: &str) -> Self {
        SweepRow {
            axis,
            axis_value,
            policy,
            throughput: f64::NAN,
            branch: format!("error:{message}"),
            alpha: f64::NAN,
            feasible: false,
        }
    }

    pub fn is_error(&self) -> bool {
        self.branch.starts_with("error:")
    }

    /// An OPT row that the closed form could not answer itself.
    pub fn is_fallback(&self) -> bool {
        self.policy == PolicyKind::Opt && self.branch == "ORACLE"
    }
}

fn float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Csv(e.to_string())
}

pub fn emit_csv<W: Write>(rows: &[SweepRow], destination: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(destination);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.axis.as_str().to_string(),
            float(r.axis_value),
            r.policy.as_str().to_string(),
            float(r.throughput),
            r.branch.clone(),
            float(r.alpha),
            r.feasible.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> Result<()> {
    let io = |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    emit_csv(rows, &mut out)?;
    out.flush().map_err(io)
}

pub fn parse_csv<R: Read>(source: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let bad = |line: usize, what: &str| BenchError::Csv(format!("row {line}: bad {what}"));
    let num = |line: usize, what: &str, s: &str| s.parse::<f64>().map_err(|_| bad(line, what));
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_err)?;
            let line = i + 1;
            Ok(SweepRow {
                axis: rec[0].parse()?,
                axis_value: num(line, "axis_value", &rec[1])?,
                policy: rec[2].parse().map_err(|_| bad(line, "policy"))?,
                throughput: num(line, "throughput", &rec[3])?,
                branch: rec[4].to_string(),
                alpha: num(line, "alpha", &rec[5])?,
                feasible: rec[6].parse().map_err(|_| bad(line, "feasible"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> SweepRow {
        SweepRow {
            axis: Axis::Beta,
            axis_value: v,
            policy: PolicyKind::Eq,
            throughput: 0.1 + v,
            branch: "BASELINE_EQ".into(),
            alpha: 0.0,
            feasible: true,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        emit_csv(&[], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "axis,axis_value,policy,throughput,branch,alpha,feasible\n"
        );
    }

    #[test]
    fn three_rows_four_lines() {
        let mut out = Vec::new();
        emit_csv(&[row(0.1), row(0.2), row(0.3)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn error_rows_survive_round_trip() {
        let rows = vec![
            row(0.5),
            SweepRow::failed(
                Axis::N,
                3.0,
                PolicyKind::Sno,
                "needs gamma1_direct = 0, got 0.5",
            ),
        ];
        let mut out = Vec::new();
        emit_csv(&rows, &mut out).unwrap();
        assert_eq!(parse_csv(out.as_slice()).unwrap(), rows);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
