//! CSV ingestion and output, burn-in trimming, dataset manifests.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::profile::MatrixProfile;
use crate::series::TimeSeries;

/// Picks the CSV column holding the samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(0)
    }
}

impl std::str::FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    /// All-digit selectors are 0-based indices, anything else is a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnSelector::Name(n) => f.write_str(n),
            ColumnSelector::Index(i) => write!(f, "{i}"),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_sample(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Reads one column of a comma-separated file into a series.
///
/// The first row is a header when its cell in the selected column does not
/// parse as a number; selecting by name requires a header. Errors carry the
/// 1-based line number of the offending row.
pub fn load_csv(path: impl AsRef<Path>, column: &ColumnSelector) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open(path)?);
    let mut records = reader.records();
    let ingest = |row: usize, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut values = Vec::new();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(ingest(1, "file is empty".into())),
    };
    let col = match column {
        ColumnSelector::Index(i) => *i,
        ColumnSelector::Name(name) => {
            first
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Column {
                    path: path.to_path_buf(),
                    message: format!("no column named {name:?} in header"),
                })?
        }
    };
    let push = |record: &csv::StringRecord, values: &mut Vec<f64>| -> Result<()> {
        let row = record.position().map_or(0, |p| p.line() as usize);
        let cell = record.get(col).ok_or_else(|| Error::Column {
            path: path.to_path_buf(),
            message: format!("row {row} has no column {col}"),
        })?;
        let v =
            parse_sample(cell).ok_or_else(|| ingest(row, format!("non-numeric cell {cell:?}")))?;
        if !v.is_finite() {
            return Err(ingest(row, format!("non-finite cell {cell:?}")));
        }
        values.push(v);
        Ok(())
    };

    let is_header = match column {
        ColumnSelector::Name(_) => true,
        ColumnSelector::Index(_) => first.get(col).and_then(parse_sample).is_none(),
    };
    if !is_header {
        push(&first, &mut values)?;
    } else if first.get(col).is_none() {
        return Err(Error::Column {
            path: path.to_path_buf(),
            message: format!("header has no column {col}"),
        });
    }
    for record in records {
        push(&record?, &mut values)?;
    }
    if values.is_empty() {
        return Err(ingest(1, "no samples".into()));
    }
    TimeSeries::new(values)
}

/// Drops `burn_in` samples from each end. The series must keep more than
/// `m` samples.
pub fn trim_burn_in(series: &TimeSeries, burn_in: usize, m: usize) -> Result<TimeSeries> {
    let n = series.len();
    if n <= 2 * burn_in + m {
        return Err(Error::InvalidTrim { n, burn_in, m });
    }
    TimeSeries::new(series.values()[burn_in..n - burn_in].to_vec())
}

/// Writes named columns of equal length with a header row.
pub fn write_columns<W: Write>(out: W, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
        return Err(Error::Dimension {
            expected: rows,
            actual: bad.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers)?;
    let mut record = Vec::with_capacity(columns.len());
    for r in 0..rows {
        record.clear();
        record.extend(columns.iter().map(|c| c[r].to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes a single-column series file.
pub fn write_series_csv(path: impl AsRef<Path>, header: &str, values: &[f64]) -> Result<()> {
    write_columns(create(path.as_ref())?, &[header], &[values])
}

/// Writes the profile as `distance,index` rows, one per subsequence.
pub fn write_profile_csv<W: Write>(out: W, profile: &MatrixProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance", "index"])?;
    for (d, i) in profile.distances.iter().zip(&profile.indices) {
        w.write_record([d.to_string(), i.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One dataset listed in a manifest; `anomaly_start` is absent for clean series.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub anomaly_start: Option<usize>,
}

/// Reads a `name,path,anomaly_start` manifest. Relative paths resolve
/// against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut entries = Vec::new();
    for record in reader.deserialize() {
        let mut entry: ManifestEntry = record?;
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
