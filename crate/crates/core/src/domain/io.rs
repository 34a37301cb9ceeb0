//! Dataset CSV files and their JSON manifests.
//!
//! The CSV has a header `f0,...,f{d-1},label`, one row per example, features
//! written in scientific notation with 17 significant digits (enough to
//! round-trip any `f64`) and the label as `0` or `1`. Lines end in `\n`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ClassCounts, Dataset, DomainSpec, Family};
use crate::{Error, Result};

/// Writes `ds` as CSV to any writer.
pub fn write_csv<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    let dim = ds.dim();
    let header: Vec<String> = (0..dim).map(|j| format!("f{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    for i in 0..ds.n_rows() {
        for &x in ds.row_slice(i) {
            write!(out, "{x:.16e},")?;
        }
        writeln!(out, "{}", ds.labels()[i])?;
    }
    out.flush()
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Parses dataset CSV text; `origin` is only used in error messages.
pub fn parse_csv(text: &str, origin: &Path) -> Result<Dataset> {
    let malformed = |line: u64, reason: String| Error::Malformed {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(malformed(1, "empty file".into())),
        Some(rec) => rec.map_err(|e| malformed(1, e.to_string()))?,
    };
    let columns = header.len();
    let dim = columns.saturating_sub(1);
    let header_ok = columns >= 2
        && header.get(dim) == Some("label")
        && (0..dim).all(|j| header.get(j) == Some(format!("f{j}").as_str()));
    if !header_ok {
        return Err(malformed(
            1,
            format!(
                "expected header `f0,...,label`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != columns {
            return Err(malformed(
                line,
                format!("expected {columns} columns, found {}", rec.len()),
            ));
        }
        for j in 0..dim {
            let field = &rec[j];
            match field.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => flat.push(x),
                _ => {
                    return Err(malformed(
                        line,
                        format!("feature f{j} is not a finite number: `{field}`"),
                    ))
                }
            }
        }
        match rec[dim].trim() {
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => {
                return Err(malformed(
                    line,
                    format!("label must be 0 or 1, got `{other}`"),
                ))
            }
        }
    }
    if labels.is_empty() {
        return Err(malformed(2, "no data rows".into()));
    }
    let features = Array2::from_shape_vec((labels.len(), dim), flat)
        .expect("every row contributed dim features");
    Dataset::new(features, labels)
}

/// What a dataset file was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetOrigin {
    Train {
        domain: DomainSpec,
    },
    /// A balanced test set; `per_unit` is rows per sub-interval, class or subconcept.
    Test {
        family: Family,
        level: u8,
        per_unit: usize,
    },
}

/// Sidecar JSON written next to each dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub origin: DatasetOrigin,
    pub seed: u64,
    pub rows: usize,
    pub dim: usize,
    pub class_counts: ClassCounts,
    pub csv: String,
}

impl DatasetManifest {
    pub fn new(origin: DatasetOrigin, seed: u64, ds: &Dataset, csv_path: &Path) -> Self {
        DatasetManifest {
            origin,
            seed,
            rows: ds.n_rows(),
            dim: ds.dim(),
            class_counts: ds.class_counts(),
            csv: csv_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }
}

/// Path of the manifest belonging to a dataset CSV.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV and its manifest; returns the manifest path.
pub fn save_with_manifest(
    ds: &Dataset,
    origin: DatasetOrigin,
    seed: u64,
    csv_path: &Path,
) -> Result<PathBuf> {
    save_dataset(ds, csv_path)?;
    let manifest = DatasetManifest::new(origin, seed, ds, csv_path);
    let path = manifest_path(csv_path);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
