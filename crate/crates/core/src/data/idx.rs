use std::fs;
use std::path::Path;

use super::cifar::read;
use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;

const IMAGES_MAGIC: u32 = 0x0803;
const LABELS_MAGIC: u32 = 0x0801;

/// Reads an IDX image/label pair (ubyte data). Pixels become `k / 255` in a
/// `(n, 1, rows, cols)` tensor; the class count is `max(label) + 1`, at least 2.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = read(images_path)?;
    let lab = read(labels_path)?;
    let dims = header(&img, images_path, IMAGES_MAGIC, 3)?;
    let ldims = header(&lab, labels_path, LABELS_MAGIC, 1)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    if ldims[0] != n {
        return Err(Error::CountMismatch {
            what: "IDX labels vs images".into(),
            expected: n,
            found: ldims[0],
        });
    }
    let pixels = body(&img, images_path, 16, n * rows * cols)?;
    let labels: Vec<usize> = body(&lab, labels_path, 8, n)?
        .iter()
        .map(|&b| b as usize)
        .collect();
    let num_classes = labels.iter().max().map_or(2, |&m| (m + 1).max(2));
    let images = Tensor::new(
        vec![n, 1, rows, cols],
        pixels.iter().map(|&b| b as f32 / 255.0).collect(),
    )?;
    Dataset::new(images, labels, num_classes)
}

/// Writes a single-channel unnormalized dataset as an IDX ubyte pair.
pub fn write_idx(ds: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let shape = ds.sample_shape();
    if shape[0] != 1 {
        return Err(Error::ShapeMismatch {
            expected: vec![1, shape[1], shape[2]],
            actual: shape.to_vec(),
        });
    }
    if ds.norm().is_some() {
        return Err(Error::AlreadyNormalized);
    }
    let mut img = Vec::with_capacity(16 + ds.images().len());
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for d in [ds.len(), shape[1], shape[2]] {
        img.extend_from_slice(&(d as u32).to_be_bytes());
    }
    img.extend(
        ds.images()
            .data()
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    let mut lab = Vec::with_capacity(8 + ds.len());
    lab.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    for &l in ds.labels() {
        let byte = u8::try_from(l).map_err(|_| Error::LabelOutOfRange {
            label: l,
            num_classes: 256,
        })?;
        lab.push(byte);
    }
    fs::write(images_path, img)?;
    fs::write(labels_path, lab)?;
    Ok(())
}

fn header(bytes: &[u8], path: &Path, magic: u32, ndims: usize) -> Result<Vec<usize>> {
    let head_len = 4 + 4 * ndims;
    if bytes.len() < 4 {
        return Err(truncated(path, head_len, bytes.len()));
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"));
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    if bytes.len() < head_len {
        return Err(truncated(path, head_len, bytes.len()));
    }
    Ok(bytes[4..head_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")) as usize)
        .collect())
}

fn body<'a>(bytes: &'a [u8], path: &Path, offset: usize, len: usize) -> Result<&'a [u8]> {
    if len == 0 || bytes.len() != offset + len {
        return Err(truncated(path, offset + len.max(1), bytes.len()));
    }
    Ok(&bytes[offset..])
}

fn truncated(path: &Path, expected: usize, found: usize) -> Error {
    Error::TruncatedFile {
        path: path.to_path_buf(),
        expected: expected as u64,
        found: found as u64,
    }
}
