//! Dataset and centroid files: one point per line, comma-separated reals, with an
//! optional header line that is recognised by containing a non-numeric field.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::lloyd::CentroidSet;

/// One problem found while validating a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// 1-based line number in the file.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub d: usize,
    pub header: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty() && self.n > 0
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("reading dataset", io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Scans CSV input and parses the rows that are well formed.
fn scan(input: impl Read) -> Result<(ValidationReport, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut report = ValidationReport {
        n: 0,
        d: 0,
        header: false,
        violations: Vec::new(),
    };
    let mut coords = Vec::new();
    let mut row = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        row.clear();
        let mut bad_field = None;
        for (col, field) in record.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(x) => row.push(x),
                Err(_) => {
                    bad_field = Some((col, field.to_string()));
                    break;
                }
            }
        }
        if let Some((col, field)) = bad_field {
            if idx == 0 {
                report.header = true;
            } else {
                report.violations.push(Violation {
                    line,
                    message: format!("column {}: `{field}` is not a number", col + 1),
                });
            }
            continue;
        }
        if report.d == 0 {
            report.d = row.len();
        }
        if row.len() != report.d {
            report.violations.push(Violation {
                line,
                message: format!("expected {} fields, found {}", report.d, row.len()),
            });
            continue;
        }
        if let Some(col) = row.iter().position(|x| !x.is_finite()) {
            report.violations.push(Violation {
                line,
                message: format!("column {}: non-finite value {}", col + 1, row[col]),
            });
            continue;
        }
        coords.extend_from_slice(&row);
        report.n += 1;
    }
    Ok((report, coords))
}

/// Reports the shape of a dataset file and every malformed line.
pub fn validate(input: impl Read) -> Result<ValidationReport> {
    Ok(scan(input)?.0)
}

pub fn validate_file(path: &Path) -> Result<ValidationReport> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    validate(file)
}

/// Parses a dataset, failing on the first malformed line.
pub fn parse_dataset(input: impl Read) -> Result<Dataset> {
    let (report, coords) = scan(input)?;
    if let Some(v) = report.violations.into_iter().next() {
        return Err(Error::Parse {
            line: v.line,
            message: v.message,
        });
    }
    if report.n == 0 {
        return Err(Error::EmptyDataset);
    }
    Dataset::from_flat(coords, report.d)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_dataset(file)
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let ctx = || path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(ctx(), e))?;
    let mut out = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        out.serialize(row).map_err(|e| Error::Io {
            context: ctx(),
            message: e.to_string(),
        })?;
    }
    out.flush().map_err(|e| Error::io(ctx(), e))
}

/// Writes one point per line with shortest round-trip formatting.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    write_rows(path, dataset.points())
}

pub fn write_centroids(path: &Path, c: &CentroidSet) -> Result<()> {
    write_rows(path, c.centers())
}

/// Same as [`write_centroids`] into any writer.
pub fn format_centroids(mut out: impl Write, c: &CentroidSet) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    for row in c.centers() {
        w.serialize(row)?;
    }
    w.flush()
}
