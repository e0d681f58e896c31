use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor};

const STD_FLOOR: f64 = 1e-6;

/// Labelled images of shape `(n, channels, height, width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Tensor<f32>,
    labels: Vec<usize>,
    num_classes: usize,
    norm: Option<Vec<(f32, f32)>>,
    coarse_labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(images: Tensor<f32>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.shape().len() != 4 {
            return Err(Error::ShapeMismatch {
                expected: vec![labels.len(), 0, 0, 0],
                actual: images.shape().to_vec(),
            });
        }
        if images.shape()[0] != labels.len() {
            return Err(Error::CountMismatch {
                what: "labels vs images".into(),
                expected: images.shape()[0],
                found: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        images.ensure_finite(|| "dataset images".into())?;
        Ok(Dataset {
            images,
            labels,
            num_classes,
            norm: None,
            coarse_labels: None,
        })
    }

    /// Attaches CIFAR-100 superclass labels.
    pub fn with_coarse_labels(mut self, coarse: Vec<usize>) -> Result<Self> {
        if coarse.len() != self.len() {
            return Err(Error::CountMismatch {
                what: "coarse labels".into(),
                expected: self.len(),
                found: coarse.len(),
            });
        }
        self.coarse_labels = Some(coarse);
        Ok(self)
    }

    /// Overrides the class count, e.g. when a split happens to miss the top labels.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if let Some(&label) = self.labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange { label, num_classes });
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn images(&self) -> &Tensor<f32> {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn coarse_labels(&self) -> Option<&[usize]> {
        self.coarse_labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn norm(&self) -> Option<&[(f32, f32)]> {
        self.norm.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(channels, height, width)`.
    pub fn sample_shape(&self) -> &[usize] {
        &self.images.shape()[1..]
    }

    fn sample_len(&self) -> usize {
        self.sample_shape().iter().product()
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let len = self.sample_len();
        &self.images.data()[i * len..(i + 1) * len]
    }

    /// Stacks the listed samples into a batch tensor and label list.
    pub fn gather<T: Scalar>(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>) {
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(self.sample_shape());
        let mut data = Vec::with_capacity(indices.len() * self.sample_len());
        for &i in indices {
            data.extend(self.image(i).iter().map(|&v| T::of(v as f64)));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (Tensor::new(shape, data).expect("gathered shape"), labels)
    }

    /// The listed samples as a new dataset, keeping normalization state.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let (images, labels) = self.gather::<f32>(indices);
        Dataset {
            images,
            labels,
            num_classes: self.num_classes,
            norm: self.norm.clone(),
            coarse_labels: self
                .coarse_labels
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Splits off the first `n` samples; the remainder is the second half.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }

    /// Per-channel population mean and standard deviation (std floored at 1e-6).
    pub fn channel_stats(&self) -> Vec<(f32, f32)> {
        let (n, c) = (self.len(), self.sample_shape()[0]);
        let plane = self.sample_shape()[1..].iter().product::<usize>();
        (0..c)
            .map(|ch| {
                let values = (0..n).flat_map(|i| {
                    let start = (i * c + ch) * plane;
                    &self.images.data()[start..start + plane]
                });
                let count = (n * plane) as f64;
                let mean = values.clone().map(|&v| v as f64).sum::<f64>() / count;
                let var = values.map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / count;
                (mean as f32, var.sqrt().max(STD_FLOOR) as f32)
            })
            .collect()
    }

    /// Standardises each channel with statistics from this dataset.
    pub fn normalize(self) -> Result<Dataset> {
        let stats = self.channel_stats();
        self.apply_normalization(&stats)
    }

    /// Standardises each channel with externally computed `(mean, std)` pairs,
    /// e.g. training-split statistics applied to the test split.
    pub fn apply_normalization(mut self, stats: &[(f32, f32)]) -> Result<Dataset> {
        if self.norm.is_some() {
            return Err(Error::AlreadyNormalized);
        }
        let c = self.sample_shape()[0];
        if stats.len() != c {
            return Err(Error::CountMismatch {
                what: "normalization channels".into(),
                expected: c,
                found: stats.len(),
            });
        }
        let plane = self.sample_shape()[1..].iter().product::<usize>();
        for (k, chunk) in self.images.data_mut().chunks_exact_mut(plane).enumerate() {
            let (mean, std) = stats[k % c];
            for v in chunk {
                *v = (*v - mean) / std;
            }
        }
        self.norm = Some(stats.to_vec());
        Ok(self)
    }
}

/// One mini-batch: sample indices into the source dataset plus the stacked data.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub indices: Vec<usize>,
    pub images: Tensor<T>,
    pub labels: Vec<usize>,
}

/// Iterator over one epoch's shuffled batches.
pub struct Batches<'a, T> {
    ds: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar> Iterator for Batches<'_, T> {
    type Item = Batch<T>;

    fn next(&mut self) -> Option<Batch<T>> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let indices = self.order[self.pos..end].to_vec();
        self.pos = end;
        let (images, labels) = self.ds.gather(&indices);
        Some(Batch {
            indices,
            images,
            labels,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.pos).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl<T: Scalar> ExactSizeIterator for Batches<'_, T> {}

/// Epoch permutation: Fisher-Yates on `0..n` driven by a ChaCha8 stream keyed
/// by `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Shuffled mini-batches for one epoch. `batch_size` must be at least 1.
pub fn batches<T: Scalar>(
    ds: &Dataset,
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Batches<'_, T>> {
    if batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
    }
    Ok(Batches {
        ds,
        order: epoch_order(ds.len(), seed, epoch),
        batch_size,
        pos: 0,
        _scalar: std::marker::PhantomData,
    })
}
