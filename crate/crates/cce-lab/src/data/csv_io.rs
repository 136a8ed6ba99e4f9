//! Labeled CSV ingestion and writing.
//!
//! Expected shape: a header row, one label column (any text), every
//! other column numeric. Distinct label values are densely re-encoded
//! to 0-based class ids in first-appearance order; the original values
//! are kept as the dataset's class names.

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, OneHotBatch};
use std::io::Write;
use std::path::Path;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("{}: {other:?}", path.display())),
        }
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}

/// Loads a labeled CSV. Parse errors carry the 1-based file row (the
/// header is row 1) and the column name.
pub fn load_csv(path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::Config(format!(
                "label column {label_column:?} not found in {}; header: {}",
                path.display(),
                headers.join(",")
            ))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (record_idx, record) in reader.records().enumerate() {
        let file_row = record_idx + 2; // header is row 1
        let record = record.map_err(|e| Error::Parse {
            row: file_row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: file_row,
                column: String::new(),
                message: format!("{} fields, expected {}", record.len(), headers.len()),
            });
        }
        for (col_idx, field) in record.iter().enumerate() {
            if col_idx == label_idx {
                let class = match class_names.iter().position(|c| c == field) {
                    Some(idx) => idx,
                    None => {
                        class_names.push(field.to_string());
                        class_names.len() - 1
                    }
                };
                labels.push(class);
            } else {
                let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    row: file_row,
                    column: headers[col_idx].clone(),
                    message: format!("not a number: {field:?}"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        row: file_row,
                        column: headers[col_idx].clone(),
                        message: format!("non-finite value: {field:?}"),
                    });
                }
                data.push(value);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Format(format!(
            "{} holds no data rows",
            path.display()
        )));
    }

    let num_classes = class_names.len();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    LabeledDataset::with_names(
        name,
        Matrix::new(labels.len(), feature_names.len(), data)?,
        OneHotBatch::new(labels, num_classes)?,
        class_names,
        feature_names,
        label_column,
    )
}

/// Writes a dataset as labeled CSV: feature columns under their stored
/// names, then the label column holding class names.
pub fn write_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header: Vec<&str> = ds.feature_names().iter().map(|s| s.as_str()).collect();
    header.push(ds.label_name());
    writeln!(out, "{}", header.join(","))?;
    for i in 0..ds.num_samples() {
        let mut fields: Vec<String> = ds
            .features()
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        fields.push(ds.class_names()[ds.labels().labels()[i]].clone());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
