//! IDX binary image/label files.
//!
//! Big-endian headers: magic `0x00000803` for 3-D `u8` image tensors
//! (count, rows, cols), magic `0x00000801` for 1-D `u8` label vectors.
//! Pixels are flattened row-major and scaled into `[0, 1]`.

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, OneHotBatch};
use std::io::{self, Write};
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn read_u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        if end > self.bytes.len() {
            return Err(truncated(self.path));
        }
        let v = u32::from_be_bytes(self.bytes[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(v)
    }

    fn read_bytes(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(truncated(self.path));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }
}

fn truncated(path: &Path) -> Error {
    Error::Io(io::Error::new(
        io::ErrorKind::UnexpectedEof,
        format!("truncated IDX file {}", path.display()),
    ))
}

/// Loads an image/label IDX pair into a dataset with pixel features in
/// `[0, 1]`. The class count is `max label + 1`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let image_bytes = std::fs::read(images_path)?;
    let label_bytes = std::fs::read(labels_path)?;

    let mut img = Cursor {
        bytes: &image_bytes,
        pos: 0,
        path: images_path,
    };
    let magic = img.read_u32()?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic:#010x} in {}, expected {IMAGE_MAGIC:#010x}",
            images_path.display()
        )));
    }
    let count = img.read_u32()? as usize;
    let rows = img.read_u32()? as usize;
    let cols = img.read_u32()? as usize;
    let pixels = img.read_bytes(count * rows * cols)?;

    let mut lbl = Cursor {
        bytes: &label_bytes,
        pos: 0,
        path: labels_path,
    };
    let magic = lbl.read_u32()?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic:#010x} in {}, expected {LABEL_MAGIC:#010x}",
            labels_path.display()
        )));
    }
    let label_count = lbl.read_u32()? as usize;
    let raw_labels = lbl.read_bytes(label_count)?;

    if label_count != count {
        return Err(Error::Consistency(format!(
            "{count} images vs {label_count} labels"
        )));
    }
    if count == 0 {
        return Err(Error::Format(format!(
            "{} holds no images",
            images_path.display()
        )));
    }

    let features: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let num_classes = labels.iter().max().copied().unwrap_or(0) + 1;

    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    LabeledDataset::new(
        name,
        Matrix::new(count, rows * cols, features)?,
        OneHotBatch::new(labels, num_classes)?,
    )
}

/// Writes a dataset back out as an IDX pair. Features must lie in
/// `[0, 1]`; each is re-quantized as `round(v * 255)`. The image height
/// is written as 1 with the full feature width as columns unless the
/// feature count is a perfect square, in which case a square shape is
/// used.
pub fn write_idx(ds: &LabeledDataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let d = ds.num_features();
    let side = (d as f64).sqrt().round() as usize;
    let (rows, cols) = if side * side == d { (side, side) } else { (1, d) };

    let mut img = Vec::with_capacity(16 + ds.num_samples() * d);
    img.write_all(&IMAGE_MAGIC.to_be_bytes())?;
    img.write_all(&(ds.num_samples() as u32).to_be_bytes())?;
    img.write_all(&(rows as u32).to_be_bytes())?;
    img.write_all(&(cols as u32).to_be_bytes())?;
    for &v in ds.features().data() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!(
                "feature {v} outside [0, 1]; IDX stores byte pixels"
            )));
        }
        img.push((v * 255.0).round() as u8);
    }
    std::fs::write(images_path, img)?;

    let mut lbl = Vec::with_capacity(8 + ds.num_samples());
    lbl.write_all(&LABEL_MAGIC.to_be_bytes())?;
    lbl.write_all(&(ds.num_samples() as u32).to_be_bytes())?;
    for &l in ds.labels().labels() {
        if l > u8::MAX as usize {
            return Err(Error::InvalidLabel(format!(
                "label {l} does not fit an IDX byte"
            )));
        }
        lbl.push(l as u8);
    }
    std::fs::write(labels_path, lbl)?;
    Ok(())
}
