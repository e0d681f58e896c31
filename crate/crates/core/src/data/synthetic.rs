use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Unit-variance Gaussian clusters, one per class, stored as `(n, dims, 1, 1)`.
///
/// With `dims >= classes` the centers are `separation / sqrt(2) * e_k`, so every
/// pair is exactly `separation` apart; otherwise they sit `separation` apart
/// along the first axis. Samples are interleaved by class (`label = i % classes`).
pub fn synthetic_blobs(
    seed: u64,
    n_per_class: usize,
    dims: usize,
    classes: usize,
    separation: f64,
) -> Result<Dataset> {
    if classes < 2 || dims == 0 || n_per_class == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic blobs need classes >= 2, dims >= 1, n_per_class >= 1 (got {classes}, {dims}, {n_per_class})"
        )));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "separation must be > 0, got {separation}"
        )));
    }
    let center = |k: usize| -> Vec<f64> {
        let mut c = vec![0.0; dims];
        if dims >= classes {
            c[k] = separation / std::f64::consts::SQRT_2;
        } else {
            c[0] = separation * k as f64;
        }
        c
    };
    let centers: Vec<Vec<f64>> = (0..classes).map(center).collect();
    let n = n_per_class * classes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % classes;
        for &c in &centers[k] {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push((c + z) as f32);
        }
        labels.push(k);
    }
    Dataset::new(Tensor::new(vec![n, dims, 1, 1], data)?, labels, classes)
}
