//! Time-series panels and their CSV representation.
//!
//! A panel is a `T x p` matrix, one row per time point in time order. The
//! on-disk format is UTF-8 CSV with a header row of column names, comma
//! separated, `.` decimal, no index column; values are written with 17
//! significant digits so a round trip reproduces the exact binary values.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::Mat;

/// A block of observed series: `T` rows (time) by `p` columns (variables).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    values: Mat,
    names: Vec<String>,
}

impl TimeSeriesPanel {
    /// Wrap a data matrix, naming columns `prefix1..prefixp`.
    pub fn new(values: Mat, prefix: &str) -> Self {
        let names = (1..=values.ncols()).map(|j| format!("{prefix}{j}")).collect();
        Self { values, names }
    }

    pub fn with_names(values: Mat, names: Vec<String>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        Ok(Self { values, names })
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Panel restricted to rows `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(Error::invalid(format!(
                "window {start}..{} exceeds panel length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values.slice(s![start..start + len, ..]).to_owned(),
            names: self.names.clone(),
        })
    }

    /// Columns shifted to zero mean.
    pub fn centered(&self) -> Mat {
        let means = self.values.mean_axis(Axis(0)).expect("non-empty panel");
        &self.values - &means.insert_axis(Axis(0))
    }

    /// First differences, absolute (`y_t - y_{t-1}`) or relative
    /// (`(y_t - y_{t-1}) / y_{t-1}`). The panel loses its first row.
    pub fn differenced(&self, relative: bool) -> Result<Self> {
        let t = self.len();
        if t < 2 {
            return Err(Error::invalid("differencing needs at least 2 rows"));
        }
        let mut out = Mat::zeros((t - 1, self.ncols()));
        for i in 1..t {
            for j in 0..self.ncols() {
                let prev = self.values[[i - 1, j]];
                let diff = self.values[[i, j]] - prev;
                out[[i - 1, j]] = if relative {
                    if prev == 0.0 {
                        return Err(Error::invalid(format!(
                            "relative difference hits a zero value in column {} row {}",
                            self.names[j],
                            i - 1
                        )));
                    }
                    diff / prev
                } else {
                    diff
                };
            }
        }
        Ok(Self {
            values: out,
            names: self.names.clone(),
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for row in self.values.rows() {
            let rec: Vec<String> = row.iter().map(|v| format_full(*v)).collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let names: Vec<String> = r
            .headers()?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        if names.is_empty() {
            return Err(Error::invalid("CSV has no columns"));
        }
        let mut rows: Vec<f64> = Vec::new();
        let mut n_rows = 0usize;
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::invalid(format!(
                    "row {} has {} fields, header has {}",
                    n_rows + 1,
                    rec.len(),
                    names.len()
                )));
            }
            for field in rec.iter() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::invalid(format!("cannot parse '{field}' as a number"))
                })?;
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite value '{field}'")));
                }
                rows.push(v);
            }
            n_rows += 1;
        }
        let values = Mat::from_shape_vec((n_rows, names.len()), rows)
            .map_err(|e| Error::invalid(format!("bad CSV shape: {e}")))?;
        Self::with_names(values, names)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// 17 significant decimal digits: enough to reproduce any f64 exactly.
fn format_full(v: f64) -> String {
    format!("{v:.16e}")
}
