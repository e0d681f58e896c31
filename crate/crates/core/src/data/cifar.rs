use std::fs;
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;

const PIXELS: usize = 3 * 32 * 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    fn label_bytes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1,
            CifarVariant::Cifar100 => 2,
        }
    }

    pub fn record_len(self) -> usize {
        self.label_bytes() + PIXELS
    }

    pub fn num_classes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }

    fn files(self) -> (Vec<&'static str>, &'static str) {
        match self {
            CifarVariant::Cifar10 => (
                vec![
                    "data_batch_1.bin",
                    "data_batch_2.bin",
                    "data_batch_3.bin",
                    "data_batch_4.bin",
                    "data_batch_5.bin",
                ],
                "test_batch.bin",
            ),
            CifarVariant::Cifar100 => (vec!["train.bin"], "test.bin"),
        }
    }

    fn subdir(self) -> &'static str {
        match self {
            CifarVariant::Cifar10 => "cifar-10-batches-bin",
            CifarVariant::Cifar100 => "cifar-100-binary",
        }
    }
}

/// Parses concatenated CIFAR records. Pixels become `k / 255`; CIFAR-100 keeps
/// the fine label as the class and the coarse label alongside.
pub fn parse_cifar_records(bytes: &[u8], variant: CifarVariant, path: &Path) -> Result<Dataset> {
    let rec = variant.record_len();
    if bytes.is_empty() || !bytes.len().is_multiple_of(rec) {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: (bytes.len() / rec + 1) as u64 * rec as u64,
            found: bytes.len() as u64,
        });
    }
    let n = bytes.len() / rec;
    let mut labels = Vec::with_capacity(n);
    let mut coarse = Vec::with_capacity(n);
    let mut pixels = Vec::with_capacity(n * PIXELS);
    for record in bytes.chunks_exact(rec) {
        let (head, body) = record.split_at(variant.label_bytes());
        let fine = *head.last().expect("label byte") as usize;
        if fine >= variant.num_classes() {
            return Err(Error::LabelOutOfRange {
                label: fine,
                num_classes: variant.num_classes(),
            });
        }
        if variant == CifarVariant::Cifar100 {
            let c = head[0] as usize;
            if c >= 20 {
                return Err(Error::LabelOutOfRange {
                    label: c,
                    num_classes: 20,
                });
            }
            coarse.push(c);
        }
        labels.push(fine);
        pixels.extend(body.iter().map(|&b| b as f32 / 255.0));
    }
    let images = Tensor::new(vec![n, 3, 32, 32], pixels)?;
    let ds = Dataset::new(images, labels, variant.num_classes())?;
    match variant {
        CifarVariant::Cifar10 => Ok(ds),
        CifarVariant::Cifar100 => ds.with_coarse_labels(coarse),
    }
}

pub fn parse_cifar_file(path: &Path, variant: CifarVariant) -> Result<Dataset> {
    let bytes = read(path)?;
    parse_cifar_records(&bytes, variant, path)
}

/// Inverse of [`parse_cifar_records`] for unnormalized 3x32x32 datasets.
/// CIFAR-100 without coarse labels writes coarse label 0.
pub fn encode_cifar_records(ds: &Dataset, variant: CifarVariant) -> Result<Vec<u8>> {
    if ds.sample_shape() != [3, 32, 32] {
        return Err(Error::ShapeMismatch {
            expected: vec![3, 32, 32],
            actual: ds.sample_shape().to_vec(),
        });
    }
    if ds.norm().is_some() {
        return Err(Error::AlreadyNormalized);
    }
    let mut out = Vec::with_capacity(ds.len() * variant.record_len());
    for i in 0..ds.len() {
        let label = ds.labels()[i];
        if label >= variant.num_classes() {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: variant.num_classes(),
            });
        }
        if variant == CifarVariant::Cifar100 {
            out.push(ds.coarse_labels().map_or(0, |c| c[i]) as u8);
        }
        out.push(label as u8);
        out.extend(ds.image(i).iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    Ok(out)
}

/// Loads the standard binary train/test files from `dir` (or its
/// `cifar-10-batches-bin` / `cifar-100-binary` subdirectory) and checks the
/// 50000/10000 split sizes.
pub fn load_cifar(dir: &Path, variant: CifarVariant) -> Result<(Dataset, Dataset)> {
    let nested = dir.join(variant.subdir());
    let root = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let (train_files, test_file) = variant.files();
    let mut train_parts = Vec::new();
    for name in train_files {
        train_parts.push(parse_cifar_file(&root.join(name), variant)?);
    }
    let train = concat(&train_parts)?;
    let test = parse_cifar_file(&root.join(test_file), variant)?;
    for (what, ds, expected) in [("train", &train, 50_000), ("test", &test, 10_000)] {
        if ds.len() != expected {
            return Err(Error::CountMismatch {
                what: format!("CIFAR {what} records"),
                expected,
                found: ds.len(),
            });
        }
    }
    Ok((train, test))
}

fn concat(parts: &[Dataset]) -> Result<Dataset> {
    let first = &parts[0];
    let mut shape = first.images().shape().to_vec();
    shape[0] = parts.iter().map(Dataset::len).sum();
    let data = parts.iter().flat_map(|d| d.images().data()).copied().collect();
    let labels = parts.iter().flat_map(|d| d.labels()).copied().collect();
    let ds = Dataset::new(Tensor::new(shape, data)?, labels, first.num_classes())?;
    match parts.iter().map(|d| d.coarse_labels()).collect::<Option<Vec<_>>>() {
        Some(c) => ds.with_coarse_labels(c.concat()),
        None => Ok(ds),
    }
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(PathBuf::from(path)),
        _ => Error::Io(e),
    })
}
