//! Append-only evaluation history and its line-oriented CSV format.
//!
//! Every record is one noisy function evaluation: the point, the observed
//! value, and a strictly increasing step index. The CSV schema is
//! `step,x_1,...,x_d,y` with a mandatory header row and floats written with
//! 17 significant digits so files round-trip exactly.

use nalgebra::DVector;
use std::io::{BufRead, Write};
use thiserror::Error;

use crate::util::fmt_f64;

/// Errors from history construction and serialization.
#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("step indices must be strictly increasing (record {index})")]
    NonMonotoneStep { index: usize },
    #[error("record dimension {got} does not match history dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One noisy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Evaluation point.
    pub x: DVector<f64>,
    /// Observed (noisy) value.
    pub y: f64,
    /// Evaluation index; strictly increasing within a history.
    pub step: u64,
}

/// Append-only sequence of evaluations of one black box.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationHistory {
    records: Vec<EvalRecord>,
}

impl EvaluationHistory {
    /// Empty history.
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an evaluation, assigning the next step index.
    pub fn push(&mut self, x: DVector<f64>, y: f64) -> Result<u64, HistoryError> {
        if let Some(first) = self.records.first() {
            if first.x.len() != x.len() {
                return Err(HistoryError::DimensionMismatch {
                    expected: first.x.len(),
                    got: x.len(),
                });
            }
        }
        let step = self.records.last().map_or(1, |r| r.step + 1);
        self.records.push(EvalRecord { x, y, step });
        Ok(step)
    }

    /// Appends a record with an explicit step index; it must exceed the
    /// previous one.
    pub fn push_record(&mut self, record: EvalRecord) -> Result<(), HistoryError> {
        if let Some(first) = self.records.first() {
            if first.x.len() != record.x.len() {
                return Err(HistoryError::DimensionMismatch {
                    expected: first.x.len(),
                    got: record.x.len(),
                });
            }
        }
        if let Some(last) = self.records.last() {
            if record.step <= last.step {
                return Err(HistoryError::NonMonotoneStep {
                    index: self.records.len(),
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// All records, in step order.
    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    /// Number of records.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// True when no evaluation has been recorded.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Dimension of the evaluation points, if any record exists.
    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.x.len())
    }

    /// Writes the CSV representation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), HistoryError> {
        let d = self.dim().unwrap_or(0);
        let mut header = String::from("step");
        for i in 1..=d {
            header.push_str(&format!(",x_{i}"));
        }
        header.push_str(",y");
        writeln!(out, "{header}")?;
        for r in &self.records {
            let mut line = r.step.to_string();
            for v in r.x.iter() {
                line.push(',');
                line.push_str(&fmt_f64(*v));
            }
            line.push(',');
            line.push_str(&fmt_f64(r.y));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// CSV representation as a string.
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parses the CSV representation produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, HistoryError> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or(HistoryError::Parse {
            line: 1,
            msg: "missing header row".into(),
        })?;
        let header = header?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.first() != Some(&"step") || cols.last() != Some(&"y") || cols.len() < 3 {
            return Err(HistoryError::Parse {
                line: 1,
                msg: format!("expected header step,x_1,...,x_d,y; got '{header}'"),
            });
        }
        let d = cols.len() - 2;
        for (i, name) in cols[1..=d].iter().enumerate() {
            if *name != format!("x_{}", i + 1) {
                return Err(HistoryError::Parse {
                    line: 1,
                    msg: format!("expected column x_{}, got '{name}'", i + 1),
                });
            }
        }
        let mut history = EvaluationHistory::new();
        for (idx, line) in lines {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != d + 2 {
                return Err(HistoryError::Parse {
                    line: line_no,
                    msg: format!("expected {} fields, got {}", d + 2, fields.len()),
                });
            }
            let step: u64 = fields[0].parse().map_err(|e| HistoryError::Parse {
                line: line_no,
                msg: format!("bad step index: {e}"),
            })?;
            let mut x = DVector::zeros(d);
            for i in 0..d {
                x[i] = fields[1 + i].parse().map_err(|e| HistoryError::Parse {
                    line: line_no,
                    msg: format!("bad coordinate x_{}: {e}", i + 1),
                })?;
            }
            let y: f64 = fields[d + 1].parse().map_err(|e| HistoryError::Parse {
                line: line_no,
                msg: format!("bad value: {e}"),
            })?;
            history.push_record(EvalRecord { x, y, step })?;
        }
        Ok(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn steps_auto_increment_and_stay_monotone() {
        let mut h = EvaluationHistory::new();
        assert_eq!(h.push(dvector![0.0], 1.0).unwrap(), 1);
        assert_eq!(h.push(dvector![1.0], 2.0).unwrap(), 2);
        let bad = EvalRecord { x: dvector![2.0], y: 0.0, step: 2 };
        assert!(matches!(
            h.push_record(bad),
            Err(HistoryError::NonMonotoneStep { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut h = EvaluationHistory::new();
        h.push(dvector![0.1, -2.5e-7], 1.0 / 3.0).unwrap();
        h.push(dvector![6.02e23, 0.0], -0.125).unwrap();
        let text = h.to_csv_string();
        assert!(text.starts_with("step,x_1,x_2,y\n"));
        let back = EvaluationHistory::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, h);
        // Canonical formatting is stable.
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let err = EvaluationHistory::read_csv("a,b,c\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HistoryError::Parse { line: 1, .. }));
    }
}
