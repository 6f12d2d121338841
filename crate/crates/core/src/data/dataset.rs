use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;

/// Feature matrix with binary labels (1 = anomalous) and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: DenseMatrix,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(x: DenseMatrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(CaaError::DimensionMismatch {
                expected: x.rows(),
                found: labels.len(),
            });
        }
        if feature_names.len() != x.cols() {
            return Err(CaaError::DimensionMismatch {
                expected: x.cols(),
                found: feature_names.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(CaaError::InvalidArgument("labels must be 0 or 1".into()));
        }
        Ok(LabeledDataset {
            x,
            labels,
            feature_names,
        })
    }

    pub fn rows_with_label(&self, label: u8) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    /// Rows labelled normal.
    pub fn normal(&self) -> Result<DenseMatrix> {
        let idx = self.rows_with_label(0);
        if idx.is_empty() {
            return Err(CaaError::InsufficientData("no normal (label 0) rows".into()));
        }
        self.x.select_rows(&idx)
    }

    pub fn subset(&self, rows: &[usize]) -> Result<LabeledDataset> {
        Ok(LabeledDataset {
            x: self.x.select_rows(rows)?,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        })
    }

    /// Headered comma-separated text: feature names then `label`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        w.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.x.rows() {
            record.clear();
            record.extend(self.x.row(i).iter().map(|v| v.to_string()));
            record.push(self.labels[i].to_string());
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CaaError::Format(e.to_string()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| CaaError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the headered format written by [`LabeledDataset::write_csv`].
    /// A trailing `label` column is optional; without it every row is
    /// labelled 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = r
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let has_label = header.last().is_some_and(|h| h == "label");
        let m = header.len() - usize::from(has_label);
        if m == 0 {
            return Err(CaaError::Schema {
                line: 1,
                expected: 2,
                found: header.len(),
            });
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(csv_err)?;
            if rec.len() != header.len() {
                return Err(CaaError::Schema {
                    line,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            for field in rec.iter().take(m) {
                let v: f64 = field.trim().parse().map_err(|_| CaaError::Parse {
                    line,
                    message: format!("not a number: {field:?}"),
                })?;
                data.push(v);
            }
            if has_label {
                let field = rec.get(m).unwrap_or_default().trim();
                let label = match field {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(CaaError::Parse {
                            line,
                            message: format!("label must be 0 or 1, got {other:?}"),
                        })
                    }
                };
                labels.push(label);
            } else {
                labels.push(0);
            }
        }
        let n = labels.len();
        let x = DenseMatrix::new(n, m, data)?;
        LabeledDataset::new(x, labels, header.into_iter().take(m).collect())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| CaaError::io(path, e))?;
        LabeledDataset::read_csv(std::io::BufReader::new(file))
    }
}

fn csv_err(e: csv::Error) -> CaaError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    CaaError::Parse {
        line,
        message: e.to_string(),
    }
}
