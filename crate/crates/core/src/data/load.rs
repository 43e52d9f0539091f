//! Dataset loaders: CSV with an optional label column, idx-format image
//! files with companion label files, and sparse libsvm lines.
//!
//! Coordinates come out as doubles in file order. Unlabeled rows carry the
//! sentinel (default `?`) or an empty label field.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use crate::classify::LabeledDataset;
use crate::error::{invalid, DbdError, Result};
use crate::metric::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Idx,
    Libsvm,
}

/// Where labels come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    /// Every row unlabeled.
    None,
    /// CSV column, by header name or 0-based index.
    Column(String),
    /// Companion file: idx1 for idx data, otherwise one label per line.
    File(PathBuf),
}

/// A parse request: path, format, label source, and the missing-label
/// sentinel.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub format: DatasetFormat,
    pub labels: LabelSpec,
    pub sentinel: String,
    /// Fixed ambient dimension for libsvm (inferred from the max feature
    /// index when absent).
    pub dim: Option<usize>,
}

impl DatasetFile {
    pub fn new(path: impl Into<PathBuf>, format: DatasetFormat) -> Self {
        Self {
            path: path.into(),
            format,
            labels: LabelSpec::None,
            sentinel: "?".to_string(),
            dim: None,
        }
    }

    pub fn with_labels(mut self, labels: LabelSpec) -> Self {
        self.labels = labels;
        self
    }

    pub fn with_sentinel(mut self, sentinel: impl Into<String>) -> Self {
        self.sentinel = sentinel.into();
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }
}

/// Loaded dataset plus the original label values, in dense-id order
/// (`label_values[id]` is the value that became class `id`).
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: LabeledDataset,
    pub label_values: Vec<i64>,
}

impl LoadedDataset {
    /// Maps an original label value back to its dense class id.
    pub fn class_of(&self, value: i64) -> Option<usize> {
        self.label_values.iter().position(|&v| v == value)
    }
}

pub fn load_dataset(file: &DatasetFile) -> Result<LoadedDataset> {
    let (rows, raw_labels) = match file.format {
        DatasetFormat::Csv => load_csv(file)?,
        DatasetFormat::Idx => load_idx(file)?,
        DatasetFormat::Libsvm => load_libsvm(file)?,
    };
    finish(rows, raw_labels)
}

fn finish(rows: Vec<Vec<f64>>, raw_labels: Vec<Option<i64>>) -> Result<LoadedDataset> {
    let points = PointSet::new(rows)?;
    let values: BTreeSet<i64> = raw_labels.iter().flatten().copied().collect();
    let label_values: Vec<i64> = values.into_iter().collect();
    let labels: Vec<Option<usize>> = raw_labels
        .iter()
        .map(|l| l.map(|v| label_values.binary_search(&v).expect("value collected")))
        .collect();
    let label_count = label_values.len().max(1);
    Ok(LoadedDataset {
        dataset: LabeledDataset::new(points, labels, label_count)?,
        label_values,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> DbdError {
    DbdError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DbdError {
    DbdError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_label_token(tok: &str, sentinel: &str) -> std::result::Result<Option<i64>, String> {
    let tok = tok.trim();
    if tok.is_empty() || tok == sentinel {
        return Ok(None);
    }
    tok.parse::<i64>()
        .map(Some)
        .map_err(|_| format!("label `{tok}` is not an integer or the sentinel `{sentinel}`"))
}

/// Labels from a plain text companion file, one per line.
fn load_label_lines(path: &Path, sentinel: &str, expect: usize) -> Result<Vec<Option<i64>>> {
    let reader = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() && i + 1 >= expect && labels.len() == expect {
            continue;
        }
        labels.push(read_label_token(trimmed, sentinel).map_err(|m| parse_err(path, i + 1, m))?);
    }
    if labels.len() != expect {
        return Err(invalid(format!(
            "label file {} has {} entries for {} data rows",
            path.display(),
            labels.len(),
            expect
        )));
    }
    Ok(labels)
}

fn load_csv(file: &DatasetFile) -> Result<(Vec<Vec<f64>>, Vec<Option<i64>>)> {
    let path = &file.path;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;

    let mut records: Vec<(usize, csv::StringRecord)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        records.push((i + 1, record));
    }
    if records.is_empty() {
        return Err(parse_err(path, 0, "no data rows"));
    }

    // Header detection: a first row that does not parse as numbers (label
    // field aside, sentinel included) is a header.
    let first = &records[0].1;
    let first_is_header = first
        .iter()
        .any(|f| f.parse::<f64>().is_err() && f != file.sentinel && !f.is_empty());
    let header: Option<Vec<String>> = if first_is_header {
        Some(first.iter().map(|s| s.to_string()).collect())
    } else {
        None
    };

    let label_col: Option<usize> = match &file.labels {
        LabelSpec::Column(name) => {
            let col = match &header {
                Some(h) if h.iter().any(|c| c == name) => {
                    h.iter().position(|c| c == name).unwrap()
                }
                _ => name.parse::<usize>().map_err(|_| {
                    invalid(format!(
                        "label column `{name}` not found in header and not a numeric index"
                    ))
                })?,
            };
            Some(col)
        }
        _ => None,
    };

    let data_rows = if first_is_header { &records[1..] } else { &records[..] };
    if data_rows.is_empty() {
        return Err(parse_err(path, records[0].0, "no data rows after header"));
    }

    let width = data_rows[0].1.len();
    if let Some(col) = label_col {
        if col >= width {
            return Err(invalid(format!(
                "label column {col} out of range for {width} columns"
            )));
        }
    }

    let mut rows = Vec::with_capacity(data_rows.len());
    let mut labels = Vec::with_capacity(data_rows.len());
    for (line, record) in data_rows {
        if record.len() != width {
            return Err(parse_err(
                path,
                *line,
                format!("row has {} columns, expected {width}", record.len()),
            ));
        }
        let mut coords = Vec::with_capacity(width - usize::from(label_col.is_some()));
        let mut label = None;
        for (c, fieldv) in record.iter().enumerate() {
            if Some(c) == label_col {
                label = read_label_token(fieldv, &file.sentinel)
                    .map_err(|m| parse_err(path, *line, m))?;
            } else {
                let v: f64 = fieldv.parse().map_err(|_| {
                    parse_err(path, *line, format!("`{fieldv}` is not a number"))
                })?;
                coords.push(v);
            }
        }
        rows.push(coords);
        labels.push(label);
    }

    if let LabelSpec::File(label_path) = &file.labels {
        labels = load_label_lines(label_path, &file.sentinel, rows.len())?;
    }
    Ok((rows, labels))
}

fn read_be_u32(reader: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
    Ok(u32::from_be_bytes(buf))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// idx3 image file: big-endian magic and dims header, one byte per pixel,
/// scaled to [0, 1]. Labels come from the companion idx1 file.
fn load_idx(file: &DatasetFile) -> Result<(Vec<Vec<f64>>, Vec<Option<i64>>)> {
    let path = &file.path;
    let mut reader = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let magic = read_be_u32(&mut reader, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(parse_err(
            path,
            0,
            format!("bad idx image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        ));
    }
    let n = read_be_u32(&mut reader, path)? as usize;
    let rows = read_be_u32(&mut reader, path)? as usize;
    let cols = read_be_u32(&mut reader, path)? as usize;
    let dim = rows * cols;
    if n == 0 || dim == 0 {
        return Err(parse_err(path, 0, "idx file declares an empty shape"));
    }
    let mut pixels = vec![0u8; n * dim];
    reader
        .read_exact(&mut pixels)
        .map_err(|e| io_err(path, e))?;
    let data: Vec<Vec<f64>> = pixels
        .chunks_exact(dim)
        .map(|img| img.iter().map(|&b| b as f64 / 255.0).collect())
        .collect();

    let labels = match &file.labels {
        LabelSpec::None => vec![None; n],
        LabelSpec::File(label_path) => load_idx_labels(label_path, n)?,
        LabelSpec::Column(_) => {
            return Err(invalid("idx datasets take labels from a file, not a column"))
        }
    };
    Ok((data, labels))
}

fn load_idx_labels(path: &Path, expect: usize) -> Result<Vec<Option<i64>>> {
    let mut reader = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let magic = read_be_u32(&mut reader, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(parse_err(
            path,
            0,
            format!("bad idx label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        ));
    }
    let n = read_be_u32(&mut reader, path)? as usize;
    if n != expect {
        return Err(invalid(format!(
            "idx label file has {n} labels for {expect} images"
        )));
    }
    let mut bytes = vec![0u8; n];
    reader.read_exact(&mut bytes).map_err(|e| io_err(path, e))?;
    Ok(bytes.into_iter().map(|b| Some(b as i64)).collect())
}

/// libsvm lines: `<label> <index>:<value> ...` with 1-based feature indices;
/// absent features are zero.
fn load_libsvm(file: &DatasetFile) -> Result<(Vec<Vec<f64>>, Vec<Option<i64>>)> {
    let path = &file.path;
    let reader = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<Option<i64>> = Vec::new();
    let mut max_index = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a first token");
        labels.push(
            read_label_token(label_tok, &file.sentinel).map_err(|m| parse_err(path, i + 1, m))?,
        );
        let mut features = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| {
                parse_err(path, i + 1, format!("feature `{tok}` is not index:value"))
            })?;
            let idx: usize = idx_s.parse().map_err(|_| {
                parse_err(path, i + 1, format!("feature index `{idx_s}` is not an integer"))
            })?;
            if idx == 0 {
                return Err(parse_err(path, i + 1, "feature indices are 1-based"));
            }
            let val: f64 = val_s.parse().map_err(|_| {
                parse_err(path, i + 1, format!("feature value `{val_s}` is not a number"))
            })?;
            features.push((idx, val));
            max_index = max_index.max(idx);
        }
        sparse.push(features);
    }
    if sparse.is_empty() {
        return Err(parse_err(path, 0, "no data rows"));
    }
    let dim = match file.dim {
        Some(d) => {
            if max_index > d {
                return Err(invalid(format!(
                    "feature index {max_index} exceeds declared dimension {d}"
                )));
            }
            d
        }
        None => max_index,
    };
    if dim == 0 {
        return Err(parse_err(path, 0, "no features in file and no dimension given"));
    }
    let rows: Vec<Vec<f64>> = sparse
        .into_iter()
        .map(|features| {
            let mut row = vec![0.0; dim];
            for (idx, val) in features {
                row[idx - 1] = val;
            }
            row
        })
        .collect();

    if let LabelSpec::File(label_path) = &file.labels {
        labels = load_label_lines(label_path, &file.sentinel, rows.len())?;
    }
    Ok((rows, labels))
}
