use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::loss::cross_entropy;
use super::model::DerivativeFn;
use super::{Model, Scalar, Tensor};
use crate::activations::{self, ActivationSpec};
use crate::error::{Error, Result};

/// Settings for a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub h: f64,
    /// Parameters to compare in total, spread over tensors by size (at least 4
    /// per tensor when it has that many).
    pub min_samples: usize,
    /// Relative error is `|a - n| / max(|a|, |n|, floor)`.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            h: 1e-5,
            min_samples: 200,
            floor: 1e-4,
            seed: 7,
        }
    }
}

/// Worst agreement found in one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub layer: usize,
    pub name: &'static str,
    pub checked: usize,
    /// Samples whose `±h` perturbation flipped a ReLU-style kink or a max-pool
    /// winner; the difference quotient is meaningless there.
    pub skipped: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }

    pub fn checked(&self) -> usize {
        self.tensors.iter().map(|t| t.checked).sum()
    }
}

/// Maximum relative error between backward gradients and central differences
/// of the mean cross-entropy, using default options with step `h`.
pub fn grad_check<T: Scalar>(
    model: &Model<T>,
    batch: &Tensor<T>,
    labels: &[usize],
    h: f64,
) -> Result<f64> {
    let opts = GradCheckOptions {
        h,
        ..Default::default()
    };
    Ok(grad_check_report(model, batch, labels, &opts, &activations::eval_derivative)?.max_rel_error())
}

/// Full per-tensor report. Analytic gradients come from `model` in its own
/// precision with `derivative` at every activation; difference quotients are
/// always evaluated in 64-bit.
pub fn grad_check_report<T: Scalar>(
    model: &Model<T>,
    batch: &Tensor<T>,
    labels: &[usize],
    opts: &GradCheckOptions,
    derivative: DerivativeFn<'_>,
) -> Result<GradCheckReport> {
    if !(opts.h.is_finite() && opts.h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be > 0, got {}", opts.h)));
    }
    let (logits, cache) = model.forward(batch)?;
    let (_, dlogits) = cross_entropy(&logits, labels)?;
    let grads = model.backward_with(&cache, &dlogits, derivative)?;

    let mut probe = model.cast::<f64>();
    let batch64 = batch.cast::<f64>();
    let total = model.param_count().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tensors = Vec::new();
    for (layer, group) in grads.per_layer.iter().enumerate() {
        let names = model.layers()[layer].param_names();
        for (t, grad) in group.iter().enumerate() {
            let len = grad.len();
            let quota = (opts.min_samples * len)
                .div_ceil(total)
                .max(4)
                .min(len);
            let mut order: Vec<usize> = (0..len).collect();
            order.shuffle(&mut rng);
            let mut check = TensorCheck {
                layer,
                name: names[t],
                checked: 0,
                skipped: 0,
                max_rel_error: 0.0,
            };
            for &i in &order {
                if check.checked == quota {
                    break;
                }
                let orig = probe.params()[layer][t].data()[i];
                let mut side = |delta: f64| -> Result<_> {
                    probe.params_mut()[layer][t].data_mut()[i] = orig + delta;
                    let (logits, c) = probe.forward(&batch64)?;
                    let loss = cross_entropy(&logits, labels)?.0;
                    Ok((loss, c.same_branches(&cache, model.layers())))
                };
                let (plus, plus_ok) = side(opts.h)?;
                let (minus, minus_ok) = side(-opts.h)?;
                probe.params_mut()[layer][t].data_mut()[i] = orig;
                if !(plus_ok && minus_ok) {
                    check.skipped += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * opts.h);
                let analytic = grad.data()[i].as_f64();
                let scale = analytic.abs().max(numeric.abs()).max(opts.floor);
                check.max_rel_error = check.max_rel_error.max((analytic - numeric).abs() / scale);
                check.checked += 1;
            }
            tensors.push(check);
        }
    }
    Ok(GradCheckReport { tensors })
}

/// A fixed model, input batch and labels for gradient checking.
#[derive(Debug, Clone)]
pub struct GradCheckFixture<T> {
    pub model: Model<T>,
    pub batch: Tensor<T>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> GradCheckFixture<T> {
    /// Two affine layers (8 → 16 → 4) on a batch of 8 standard-normal inputs.
    pub fn mlp(spec: ActivationSpec, seed: u64) -> Result<Self> {
        let model = Model::mlp(vec![8], &[16], 4, spec, seed)?;
        Ok(Self::with_inputs(model, vec![8, 8], 4, seed))
    }

    /// SmokeCNN on 1x8x8 inputs with 3 classes and a batch of 4.
    pub fn smoke_cnn(spec: ActivationSpec, seed: u64) -> Result<Self> {
        let model = Model::smoke_cnn(1, 8, 8, 3, spec, seed)?;
        Ok(Self::with_inputs(model, vec![4, 1, 8, 8], 3, seed))
    }

    fn with_inputs(model: Model<T>, shape: Vec<usize>, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let batch = Tensor::from_fn(shape.clone(), |_| {
            T::of(StandardNormal.sample(&mut rng))
        });
        let labels = (0..shape[0]).map(|i| i % classes).collect();
        GradCheckFixture {
            model,
            batch,
            labels,
        }
    }

    pub fn report(&self, opts: &GradCheckOptions, derivative: DerivativeFn<'_>) -> Result<GradCheckReport> {
        grad_check_report(&self.model, &self.batch, &self.labels, opts, derivative)
    }
}
