use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{validate_sample, GroupedSample};

/// A column addressed by zero-based position or header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Where the group labels come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    Column(ColumnRef),
    /// One label per line, in row order.
    Sidecar(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub labels: LabelSource,
    pub has_header: bool,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a comma-separated matrix with group labels.
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<GroupedSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut records = reader.records();

    let header = if opts.has_header {
        match records.next() {
            Some(r) => Some(r?),
            None => None,
        }
    } else {
        None
    };
    let label_col = match &opts.labels {
        LabelSource::Column(ColumnRef::Index(i)) => Some(*i),
        LabelSource::Column(ColumnRef::Name(name)) => {
            let h = header
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("label column by name needs a header".into()))?;
            Some(
                h.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::InvalidArgument(format!("no column named '{name}'")))?,
            )
        }
        LabelSource::Sidecar(_) => None,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let first_line = if opts.has_header { 2 } else { 1 };
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(first_line + r);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_col {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                col: c + 1,
                msg: format!("'{cell}' is not a number"),
            })?;
            row.push(v);
        }
        if let Some(c) = label_col {
            if c >= rec.len() {
                return Err(Error::Parse {
                    line,
                    col: c + 1,
                    msg: "missing label column".into(),
                });
            }
        }
        rows.push(row);
    }

    if let LabelSource::Sidecar(side) = &opts.labels {
        let text = std::fs::read_to_string(side).map_err(|source| Error::File {
            path: side.clone(),
            source,
        })?;
        labels = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
    }
    if labels.len() != rows.len() {
        return Err(Error::LabelMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    // numeric labels sort numerically
    if let Ok(ints) = labels.iter().map(|l| l.parse::<i64>()).collect::<std::result::Result<Vec<_>, _>>() {
        return validate_sample(&rows, &ints);
    }
    validate_sample(&rows, &labels)
}

/// Write `sample` as CSV with a trailing integer label column and no header.
/// Values carry 17 significant digits so re-reading is lossless.
pub fn write_sample_csv(sample: &GroupedSample, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for (row, label) in sample.rows().zip(sample.labels()) {
        for v in row {
            write!(w, "{v:.16e},")?;
        }
        writeln!(w, "{label}")?;
    }
    w.flush()?;
    Ok(())
}
