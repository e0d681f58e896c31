use super::{Gradients, Model, Scalar, Tensor};
use crate::error::{Error, Result};

/// SGD and schedule hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub lr_divisor: f64,
    /// Epoch indices (0-based) at which the rate is divided by `lr_divisor`.
    pub milestones: Vec<usize>,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// SGD with momentum 0.9, weight decay 5e-4, LR 0.1 divided by 5 at epochs
    /// 50, 120 and 160; 200 epochs of batch 128.
    fn default() -> Self {
        TrainConfig {
            lr0: 0.1,
            lr_divisor: 5.0,
            milestones: vec![50, 120, 160],
            momentum: 0.9,
            weight_decay: 5e-4,
            epochs: 200,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return fail(format!("lr0 must be > 0, got {}", self.lr0));
        }
        if !(self.lr_divisor.is_finite() && self.lr_divisor > 1.0) {
            return fail(format!("lr_divisor must be > 1, got {}", self.lr_divisor));
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!(
                "milestones must be strictly increasing, got {:?}",
                self.milestones
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1".into());
        }
        Ok(())
    }
}

/// `lr0 / divisor^k` where `k` counts milestones `<= epoch`.
pub fn lr_at_epoch(config: &TrainConfig, epoch: usize) -> f64 {
    let passed = config.milestones.iter().filter(|&&m| m <= epoch).count();
    config.lr0 / config.lr_divisor.powi(passed as i32)
}

/// One classical-momentum step with coupled (L2) weight decay:
///
/// ```text
/// g' = grad + weight_decay * param
/// v  = momentum * v + g'
/// p  = p - lr * v
/// ```
pub fn sgd_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    velocity: &mut [T],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![params.len()],
            actual: vec![grads.len(), velocity.len()],
        });
    }
    let (lr, mu, wd) = (T::of(lr), T::of(momentum), T::of(weight_decay));
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        let g = g + wd * *p;
        *v = mu * *v + g;
        *p = *p - lr * *v;
        if !(p.is_finite() && v.is_finite()) {
            return Err(Error::non_finite("parameter update"));
        }
    }
    Ok(())
}

/// Momentum buffers for every parameter of a model.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    velocity: Vec<Vec<Tensor<T>>>,
    momentum: f64,
    weight_decay: f64,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(model: &Model<T>, config: &TrainConfig) -> Self {
        let velocity = model
            .params()
            .iter()
            .map(|g| g.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect())
            .collect();
        Sgd {
            velocity,
            momentum: config.momentum,
            weight_decay: config.weight_decay,
        }
    }

    pub fn step(&mut self, model: &mut Model<T>, grads: &Gradients<T>, lr: f64) -> Result<()> {
        for ((group, gg), vg) in model
            .params_mut()
            .iter_mut()
            .zip(&grads.per_layer)
            .zip(&mut self.velocity)
        {
            for ((p, g), v) in group.iter_mut().zip(gg).zip(vg) {
                sgd_step(
                    p.data_mut(),
                    g.data(),
                    v.data_mut(),
                    lr,
                    self.momentum,
                    self.weight_decay,
                )?;
            }
        }
        Ok(())
    }
}
